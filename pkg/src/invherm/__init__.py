"""Exact symbolic engine for invariant Hermitian geometry on Lie-group quotients.

Subpackages cover: exact scalar fields (field), invariant coframe calculus with
formal jets (coframe), Hodge-theoretic operators (hodge), Chern connection and
curvature tensors (chern), the canonical fourth-order operators and kernel
certificates (operators), a catalog of standard homogeneous examples (catalog),
a blow-up cohomology class calculator (classring), a radial gluing simulator
(radial), and a command line front end (cli).
"""

__version__ = "0.1.0"
