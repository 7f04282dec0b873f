"""Validation-aware evaluation of EEG band-power classifiers."""

__version__ = "0.1.0"
