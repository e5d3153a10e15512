"""Satirical news detection with a character-word-paragraph-document attention network."""

__version__ = "0.1.0"
