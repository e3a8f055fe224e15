"""
Numerical core: metrics, quadrature, bounds, extremal profiles, energies and checks
"""
