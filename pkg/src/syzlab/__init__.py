"""Desk-scale laboratory for semi-flat SYZ mirror symmetry.

Exact exterior algebra, Monge-Ampere potentials, Legendre duality,
mirror structure assembly, hard-Lefschetz / mirror sl(2) actions,
Gopakumar-Vafa <-> Gromov-Witten conversion, and supersymmetric cycle
equations on flat tori.
"""

__version__ = "0.1.0"
