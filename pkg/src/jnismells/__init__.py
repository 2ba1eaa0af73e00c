"""Detect JNI multi-language design smells and relate them to fault-proneness."""

__version__ = "0.1.0"
