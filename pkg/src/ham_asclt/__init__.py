"""Simulation and verification laboratory for the 1D hyperbolic Anderson model.

The package solves the mild form of the wave equation with multiplicative
Levy colored noise on a space-time grid, measures fluctuations of spatial
averages of the solution, and checks the variance-scaling, CLT and
almost-sure CLT behaviour of those averages against their predicted laws.
A separate analytics layer verifies the closed-form identities (Fourier,
fractional-covariance and Gamma-function relations) that the predictions
rest on, to near machine precision.
"""

__version__ = "0.1.0"
