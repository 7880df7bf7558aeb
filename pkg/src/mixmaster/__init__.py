"""Heteroclinic-cycle analysis for Bianchi IX and Bianchi VI*(-1/9) cosmologies."""

__version__ = "0.1.0"
