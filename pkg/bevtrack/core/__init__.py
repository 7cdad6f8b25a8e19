"""
Geometry helpers (geometry) and JSON-lines log and weights serialization (jsonl).
"""
