"""Regression-projection pseudo-posteriors for stochastic simulators."""

__version__ = "0.1.0"
