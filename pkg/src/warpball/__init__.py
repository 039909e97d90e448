"""Regge poles and inverse scattering for warped-ball Schrodinger operators."""
__version__ = "0.1.0"
