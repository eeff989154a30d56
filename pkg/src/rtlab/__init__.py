"""Cryptanalysis workbench for random affine transformation ciphers."""

__version__ = "0.1.0"
