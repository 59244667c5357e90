"""Branching-random-walk martingale laboratory.

Simulates supercritical branching random walks, evaluates their normalized
complex exponential martingales, classifies complex parameters into
fluctuation regimes, and runs the statistical experiments that check the
corresponding limit laws.
"""

__version__ = "0.1.0"
