"""Numerical Finsler geometry and F-natural metrics on the slit tangent bundle.

Modules: ``derivkit`` (exact Taylor jets), ``finsler`` (models and tensors),
``chern`` (Chern connection, curvature), ``gnat`` (F-natural metrics),
``connection2`` (Levi-Civita connection of G), ``symmetry`` (Lie derivatives
and conformal verdicts) and ``cli``.
"""

__version__ = "0.1.0"
