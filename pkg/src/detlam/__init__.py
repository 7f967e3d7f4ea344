"""detlam: exact-arithmetic verification of determinant-of-cohomology identities.

The package checks, with exact rational and integer arithmetic, the
machine-checkable shadows of a family of canonical line-bundle isomorphisms:
coefficient combinatorics, first-Chern-class identities on model
intersection rings, lattice deductions, term-rewriting proof chains, and
graded-quotient flatness criteria.
"""

__version__ = "0.1.0"
