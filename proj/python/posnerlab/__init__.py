"""Structural analysis of Ca9(PO4)6 clusters.

Thin Python layer over the C++ core: symmetry detection, rigid
alignment, trajectory statistics, candidate generation, and classical
minimization.
"""

try:
    from posnerlab._posner import *  # noqa: F401,F403
    from posnerlab._posner import __doc__ as _core_doc  # noqa: F401
except ImportError:  # build-tree layout: extension next to the test runner
    from _posner import *  # noqa: F401,F403

__version__ = "1.0.0"
