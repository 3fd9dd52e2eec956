"""Homotopy-scheduled soft actor-critic for one-on-one air combat."""

__version__ = "0.1.0"
