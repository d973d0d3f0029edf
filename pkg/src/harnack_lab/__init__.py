"""Harnack bounds, weighted path minimization and parabolic PDE verification."""

from __future__ import annotations

__version__ = "0.1.0"
