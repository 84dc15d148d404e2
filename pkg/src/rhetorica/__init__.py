"""Causal-argument mining, structural topic modelling and debate dynamics."""

from __future__ import annotations

__version__ = "0.1.0"
