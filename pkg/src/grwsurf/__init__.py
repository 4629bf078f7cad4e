"""Extrinsic geometry of stationary spacelike surfaces in GRW spacetimes."""
__version__ = "0.1.0"
