"""Self-dual BGPP metrics in Gibbons-Hawking form over confocal quadrics.

Submodules:

- ``confocal``: ellipsoidal coordinates, Jacobian and scale factors
- ``field``: harmonic potential ``V``, connection ``omega`` and their checks
- ``bgpp``: SU(2) adjoint row, profile functions, moment maps
- ``dynamics``: reduced geodesic flow and Stackel separation constants
- ``waves``: separated Schrodinger equation at zero charge
- ``cli``: command-line driver (``confocal-instanton``)
"""
from .confocal import EllipsoidalPoint, FocalTriple, from_cartesian, to_cartesian
from .errors import DomainError, SingularityError
from .field import connection_cartesian, potential, potential_cartesian

__all__ = [
    "DomainError",
    "EllipsoidalPoint",
    "FocalTriple",
    "SingularityError",
    "connection_cartesian",
    "from_cartesian",
    "potential",
    "potential_cartesian",
    "to_cartesian",
]

__version__ = "0.1.0"
