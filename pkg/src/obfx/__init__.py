"""Extractors and exact verifiers for oblivious bit-fixing sources."""
