"""Quasi-invariant states under group actions on tensor products of matrix algebras.

The toolkit builds finite tensor windows of matrix algebras, acts on them
with permutation groups, constructs the cocycles that make product and
Markov states quasi-invariant, and verifies every defining identity
numerically: cocycle laws, strong quasi-invariance, conditional
expectations, the structure theorem for compact group actions, GNS
covariance, and the norm-convergence diagnostics for growing windows.
"""

__version__ = "0.1.0"
