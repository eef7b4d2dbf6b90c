"""Correlation statistics of the sequence beta * n**alpha modulo one."""

__version__ = "0.1.0"
