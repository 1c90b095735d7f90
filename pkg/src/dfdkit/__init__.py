"""Depth from defocus on single images via discrete blur measures of step edges."""

__version__ = "0.1.0"
