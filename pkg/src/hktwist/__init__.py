"""Ooguri-Vafa hyperkahler geometry and Stokes-theoretic twistor coordinates.

Subpackages by layer: `specfun` (Bessel K0/K1, branch-disciplined logs),
`ovspace` (Gibbons-Hawking potential/connection/metric/forms), `ovtwistor`
(electric/magnetic twistor coordinates and their ray integrals), `hitchin`
(harmonic-metric PDE solver and framed-bundle construction), `stokes`
(flat transport, Stokes data, twistor coordinates of a framed bundle),
`harness` (parameter correspondence and the matching experiments).
"""

from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
