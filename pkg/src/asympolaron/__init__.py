"""Asymmetric polaron variational treatment of the quantum Rabi model."""

__version__ = "0.1.0"
