"""Namespace package for mixed local/nonlocal operator solvers."""
