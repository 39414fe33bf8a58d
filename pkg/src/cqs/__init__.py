"""Convoluted quasi-Sturmian basis functions for two-electron continua.

The package builds one-particle quasi-Sturmian functions over a Laguerre
basis, convolves them along complex-energy contours into two-particle basis
functions with six-dimensional outgoing-wave asymptotics, and solves the
s-wave Temkin-Poet driven equation for helium double ionization in both the
plain and the phase-modified basis.
"""

from cqs.jmatrix import Kinematics, LaguerreBasisSpec, kinematics

__all__ = ["Kinematics", "LaguerreBasisSpec", "kinematics"]
