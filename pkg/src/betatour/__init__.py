"""Exact-rational toolkit for cylinder constrictions over dyadic cubes.

Represents computable cylinder assignments (constrictions), sieves their
permitted sets, measures beta numbers of sets and assignments, synthesizes
finite-length tours covering everything a constriction permits, and certifies
tour length against the square-beta bound via an amortized savings ledger.
"""

__version__ = "0.1.0"
