"""Verification tooling: oracle, histories, checker, audits, interleavings."""
