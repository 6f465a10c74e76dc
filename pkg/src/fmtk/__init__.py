"""Finite model theory toolkit: structures, FO/MSO logic, rank-m types,
tree-representation pruning and preservation-property checks."""

__version__ = "0.1.0"
