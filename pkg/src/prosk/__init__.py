"""Congruence-filtration calculus for matrix groups over truncated local
rings and the Nottingham group: depth-graded commutator identities, a
word compiler against arbitrary generating sets with certified length
budgets, and spectral/random-walk diagnostics for the finite quotients.
"""

__version__ = "0.1.0"
