"""Easy-first greedy parsing of discontinuous constituents."""

__version__ = "0.1.0"
