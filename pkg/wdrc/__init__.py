"""
wdrc - Wasserstein-penalized minimax linear-quadratic control

Riccati-based synthesis of controllers that are robust against deviations of the
disturbance distribution from its empirical estimate, plus the worst-case
distributions, H-infinity penalty thresholds, closed-loop simulation and a
power-grid frequency-control experiment built on top of them.
"""

__version__ = "0.1.0"

SCHEMA = "wdrc/1"
