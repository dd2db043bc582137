"""Semi-sample testers for Reed-Muller and lifted codes, with online adversaries."""

__version__ = "0.1.0"
