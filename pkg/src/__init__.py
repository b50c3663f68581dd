"""RealityLab - objective values, perfect correlations and consistent histories on concrete supports."""

__version__ = "0.1.0"
