"""Builtin scenario corpus (JSON files shipped as package data)."""
