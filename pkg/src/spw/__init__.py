"""Exact-arithmetic workbench for strict graded mixed / shifted Poisson calculus."""

__version__ = "0.1.0"
