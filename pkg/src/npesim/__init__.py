"""Nernst-Planck-Euler simulator on rectangles with estimate monitors."""
__version__ = "0.1.0"
