"""Multi-Manifold Hypothesis Toolkit - local intrinsic dimension, dyadic linear multi-manifolds and SQD testing."""

__version__ = "1.0.0"
__author__ = "Multi-Manifold Hypothesis Team"
