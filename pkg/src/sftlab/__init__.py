"""Computational experiments on two-dimensional shifts of finite type."""

__version__ = "0.1.0"
