"""Weak solutions of y' = Ay for diagonal normal operators.

Spectral criterion, Borel calculus on a diagonal model, orbit and smoothness
probes, and explicit counterexamples when smoothness fails.
"""

__version__ = "0.1.0"
