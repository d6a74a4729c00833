"""Coupled atom-molecule condensate with induced decays: radial Crank-Nicolson
solver, imaginary-time ground states, stability classification and a
(gamma1, gamma2) sweep harness."""

__version__ = "0.1.0"
