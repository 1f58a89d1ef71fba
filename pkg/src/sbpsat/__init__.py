"""SBP-SAT finite differences for the 2D wave equation on multi-block grids."""
__version__ = "0.1.0"
