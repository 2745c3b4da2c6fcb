"""Numerical laboratory for critical homogeneous nonlinear Schrödinger equations."""
