"""Bootstrap percolation on Gilbert random geometric graphs (circle and torus)."""

__version__ = "0.1.0"
