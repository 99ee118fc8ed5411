"""Composable MAC protocols: building blocks, a slot simulator and learning agents."""

__version__ = "0.1.0"
