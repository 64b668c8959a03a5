"""Command-line interface"""
from .dispatcher import dispatch

__all__ = ["dispatch"]
