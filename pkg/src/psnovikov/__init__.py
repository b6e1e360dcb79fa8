"""Pseudospectral toolkit for the pseudospherical Novikov equation

    u_t = d_x(u^2) - u^2 + d_x Lambda^{-2} u^2 + Lambda^{-2} u^2,   Lambda^{-2} = (1 - d_x^2)^{-1},

with Gevrey and Kato-Masuda norms, power series in time, analyticity-radius
tracking and checks of the associated pseudospherical surfaces.
"""
__version__ = "0.1.0"
