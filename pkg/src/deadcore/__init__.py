"""Numerical laboratory for dead-core problems with degenerate fully nonlinear diffusion."""
