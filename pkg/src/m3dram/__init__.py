"""DRAM design-space modeling toolkit.

Models 2D DDR4-style and monolithic-3D (M3D) bank organizations:
geometry and area, bitline transient timing, per-access energy, and a
trace-driven close-page controller simulation.
"""

from .backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
