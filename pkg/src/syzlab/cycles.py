"""Supersymmetric A- and B-cycle equations in the flat-torus model.

B-cycles carry the deformed Hermitian-Yang-Mills condition
Im e^{i theta}(omega^C + F)^m = 0; A-cycles are special Lagrangian subtori
with a deformed-flat connection.  All data are constant-coefficient (or
finite trigonometric sums, for the deformed-harmonic equation), so every
residual is an exact wedge computation.

Integrals over a cycle use the orientation dx^1 ^ dy^1 ^ ... ^ dx^m ^ dy^m;
`cycle_top` converts from the sorted monomial basis accordingly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .exterior import (
    ExteriorForm,
    TangentDatum,
    contract,
    power,
    pullback,
    top_coefficient,
    wedge,
)


class CycleError(ValueError):
    pass


def cycle_top(form: ExteriorForm):
    """Top coefficient in the interleaved orientation dx^1 dy^1 ... dx^m dy^m."""
    m = form.n
    sign = -1 if (m * (m - 1) // 2) % 2 else 1
    c = top_coefficient(form)
    return c if sign > 0 else -c


def _subtorus_top(form: ExteriorForm, m: int):
    """Coefficient of the volume of the subtorus spanned by z^1 .. z^m.

    Uses the interleaved orientation dx^1 dy^1 ... dx^m dy^m; for m = 0 this
    is evaluation of the scalar part, for m = n the full cycle_top.
    """
    n = form.n
    key = tuple(range(m)) + tuple(range(n, n + m))
    sign = -1 if (m * (m - 1) // 2) % 2 else 1
    c = form.coefficient(key)
    return c if sign > 0 else -c


@dataclass
class CycleSpec:
    """A- or B-cycle data on a flat torus.

    For kind "B" the cycle is the full torus of complex dimension m and all
    forms live on it (n = m).  For kind "A" the cycle is the subtorus spanned
    by the rows of `subtorus` (an m x 2n matrix), and `F` is a form on the
    cycle itself, written in the first m covectors of a 2m-covector algebra.
    """

    kind: str
    m: int
    omega: ExteriorForm
    beta: ExteriorForm | None = None
    F: ExteriorForm | None = None
    theta: float | None = None
    subtorus: list | None = None

    def __post_init__(self):
        if self.kind not in ("A", "B"):
            raise CycleError("kind must be 'A' or 'B'")
        if self.F is not None and self.F.degrees() - {2} and not self.F.is_zero():
            raise CycleError("curvature F must have degree 2")
        if self.beta is not None and self.beta.degrees() - {2} \
                and not self.beta.is_zero():
            raise CycleError("B-field beta must have degree 2")
        if self.kind == "A":
            if self.subtorus is None:
                raise CycleError("A-cycles need a subtorus basis")
            basis = np.asarray(self.subtorus, dtype=complex)
            if basis.shape[0] != self.m or \
                    np.linalg.matrix_rank(basis) < self.m:
                raise CycleError("subtorus basis must have full rank m")
        elif self.omega.n != self.m:
            raise CycleError("B-cycle forms must live on the m-torus (n = m)")

    def complexified(self) -> ExteriorForm:
        if self.beta is None:
            return self.omega
        return self.omega + self.beta.scale(1j)


def _total_b_form(c: CycleSpec) -> ExteriorForm:
    total = c.complexified()
    if c.F is not None:
        total = total + c.F
    return total


def dhym_residual(c: CycleSpec) -> float:
    """|Im e^{i theta} top((omega^C + F)^m)| for a B-cycle."""
    if c.kind != "B":
        raise CycleError("deformed Hermitian-Yang-Mills needs a B-cycle")
    if c.theta is None:
        raise CycleError("spec carries no phase angle")
    top = complex(cycle_top(power(_total_b_form(c), c.m)))
    return abs((cmath.exp(1j * c.theta) * top).imag)


def solve_phase(c: CycleSpec) -> float:
    """Phase angle making (omega^C + F)^m real, principal value in (-pi, pi]."""
    if c.kind != "B":
        raise CycleError("phase solving needs a B-cycle")
    top = complex(cycle_top(power(_total_b_form(c), c.m)))
    if top == 0:
        raise CycleError("degenerate cycle: top power vanishes")
    theta = -cmath.phase(top)
    if theta <= -math.pi:
        theta = math.pi
    return theta


def gieseker_limit_residual(omega, F, n: int) -> dict:
    """Fit of top((omega + iF)^n) to a constant multiple of the volume.

    `omega` may be one constant form or a list of pointwise samples; the
    constant is the mean of the sampled top coefficients and the residual
    their maximal deviation (zero for constant data).
    """
    samples = omega if isinstance(omega, (list, tuple)) else [omega]
    tops = []
    for w in samples:
        total = w + F.scale(1j) if F is not None else w
        tops.append(complex(cycle_top(power(total, n))))
    constant = sum(tops) / len(tops)
    residual = max(abs(t - constant) for t in tops)
    return {"constant": constant, "residual": residual}


def a_cycle_residuals(c: CycleSpec, Omega: ExteriorForm) -> dict:
    """Special-Lagrangian and deformed-flat defects of an A-cycle.

    Restricts omega, Omega and beta to the subtorus; returns the Lagrangian,
    special (calibration phase) and flat (beta|_C + F) residuals plus the
    combined |omega^C|_C + F| defect.
    """
    if c.kind != "A":
        raise CycleError("these residuals are defined for A-cycles")
    theta = c.theta if c.theta is not None else 0.0
    m = c.m
    omega_r = pullback(c.omega, c.subtorus, m)
    lagrangian = _max_coeff(omega_r)
    omega_c_r = pullback(c.complexified(), c.subtorus, m)
    Omega_r = pullback(Omega, c.subtorus, m)
    top = complex(Omega_r.coefficient(tuple(range(m))))
    special = abs((cmath.exp(1j * theta) * top).imag)
    if c.beta is not None:
        beta_r = pullback(c.beta, c.subtorus, m)
    else:
        beta_r = ExteriorForm.zero(m, mode=Omega_r.mode)
    F = c.F if c.F is not None else ExteriorForm.zero(m, mode=Omega_r.mode)
    flat = _max_coeff(beta_r + F)
    combined = _max_coeff(omega_c_r + F)
    return {"lagrangian": lagrangian, "special": special, "flat": flat,
            "combined": combined}


def _max_coeff(form: ExteriorForm) -> float:
    return max((abs(complex(v)) for v in form.terms.values()), default=0.0)


def _dz(m: int, j: int) -> ExteriorForm:
    return ExteriorForm(m, {(j,): 1.0, (m + j,): 1j})


def _dzbar(m: int, j: int) -> ExteriorForm:
    return ExteriorForm(m, {(j,): 1.0, (m + j,): -1j})


def _dzbar_wedge(m: int, K) -> ExteriorForm:
    out = ExteriorForm.scalar(m, 1.0)
    for j in K:
        out = wedge(out, _dzbar(m, j))
    return out


def deformed_harmonic_residual(modes, c: CycleSpec) -> dict:
    """Defects of the deformed dbar-harmonic equations for a (0, q)-form.

    `modes` is a finite Fourier sum: each entry is (p, qvec, K, coeff) for
    the term coeff e^{i(p.x + qvec.y)} dzbar^K on the m-torus.  On such a
    mode the holomorphic derivative along z^j multiplies by (i p_j + q_j)/2
    and the antiholomorphic one by (i p_j - q_j)/2, so both residuals are
    exact.  The imaginary part pairs each mode with its negative.
    """
    if c.kind != "B":
        raise CycleError("deformed harmonicity is defined on B-cycles")
    theta = c.theta if c.theta is not None else 0.0
    m = c.m
    q = _q_degree(modes)
    if q > m:
        raise CycleError("antiholomorphic degree exceeds the cycle dimension")
    total_pow = power(_total_b_form(c), m - q)
    dbar_max = 0.0
    deformed_terms = {}
    for p, qv, K, coeff in modes:
        if len(p) != m or len(qv) != m:
            raise CycleError("mode vectors must have length m")
        base = _dzbar_wedge(m, K).scale(coeff)
        dbar = ExteriorForm.zero(m)
        dele = ExteriorForm.zero(m)
        for j in range(m):
            mult_bar = (1j * p[j] - qv[j]) / 2
            mult_hol = (1j * p[j] + qv[j]) / 2
            if mult_bar:
                dbar = dbar + wedge(_dzbar(m, j), base).scale(mult_bar)
            if mult_hol:
                dele = dele + wedge(_dz(m, j), base).scale(mult_hol)
        dbar_max = max(dbar_max, _max_coeff(dbar))
        term = wedge(total_pow, dele).scale(cmath.exp(1j * theta))
        key = (tuple(p), tuple(qv))
        deformed_terms[key] = deformed_terms.get(
            key, ExteriorForm.zero(m)) + term
    deformed_max = 0.0
    for (p, qv), form in deformed_terms.items():
        opp = deformed_terms.get((tuple(-v for v in p), tuple(-v for v in qv)),
                                 ExteriorForm.zero(m))
        im_form = form.scale(0.5 / 1j) - opp.conjugate().scale(0.5 / 1j)
        deformed_max = max(deformed_max, _max_coeff(im_form))
    return {"dbar": dbar_max, "deformed": deformed_max}


def _q_degree(modes) -> int:
    degs = {len(K) for _, _, K, _ in modes}
    if len(degs) > 1:
        raise CycleError("mixed antiholomorphic degrees in one form")
    return degs.pop() if degs else 0


def a_correlation(forms, volume) -> complex:
    """Wedge of n complex 1-forms over the n-torus times its volume.

    Equals the determinant of the coefficient matrix of the forms in the
    covector basis, times the volume.
    """
    if not forms:
        raise CycleError("need at least one form")
    n = forms[0].n
    if len(forms) != n:
        raise CycleError(f"need exactly {n} one-forms, got {len(forms)}")
    out = ExteriorForm.scalar(n, 1.0)
    for f in forms:
        if f.degrees() - {1} and not f.is_zero():
            raise CycleError("correlation inputs must be 1-forms")
        out = wedge(out, f)
    return complex(out.coefficient(tuple(range(n)))) * volume


def b_correlation(tangents, F, Omega: ExteriorForm, m: int,
                  volume: float = 1.0) -> complex:
    """Moduli-space volume-form pairing of n B-cycle tangent vectors.

    Sums over permutations: the first m slots contribute the product of the
    line-bundle deformation forms B, the rest contract their vectors into
    Omega; each term is integrated over the cycle in the interleaved
    orientation.  For rank one the symmetrized product is the plain wedge.
    """
    n = Omega.n
    if len(tangents) != n:
        raise CycleError(f"need exactly {n} tangent data, got {len(tangents)}")
    if not 0 <= m <= n:
        raise CycleError("cycle dimension must satisfy 0 <= m <= n")
    total = 0j
    for perm in sorted(permutations(range(n))):
        prod = ExteriorForm.scalar(n, 1.0)
        for idx in perm[:m]:
            prod = wedge(prod, tangents[idx].B)
        contracted = Omega
        for idx in reversed(perm[m:]):
            contracted = contract(list(tangents[idx].v), contracted)
        term = wedge(prod, contracted)
        total += complex(_subtorus_top(term, m))
    return total * volume


def presymplectic_pairing(t1: TangentDatum, t2: TangentDatum,
                          c: CycleSpec, volume: float = 1.0) -> float:
    """Pre-symplectic pairing of two B-cycle tangent vectors.

    Im e^{i theta} integral of (omega^C + F)^{m-1} a_1 a_2 plus the integral
    of omega(v_1, v_2) omega^m, where a_i = B_i - conjugate(B_i) is the real
    tangent direction underlying the (0,1)-form B_i.  Antisymmetric and
    bilinear over the reals.
    """
    if c.kind != "B":
        raise CycleError("the pre-symplectic form lives on B-cycle moduli")
    theta = c.theta if c.theta is not None else 0.0
    m = c.m
    a1 = t1.B - t1.B.conjugate()
    a2 = t2.B - t2.B.conjugate()
    head = power(_total_b_form(c), m - 1)
    first = (cmath.exp(1j * theta)
             * complex(cycle_top(wedge(head, wedge(a1, a2))))).imag
    pairing = contract(list(t2.v), contract(list(t1.v), c.omega))
    second = complex(pairing.coefficient(())) \
        * complex(cycle_top(power(c.omega, m)))
    return (first + second.real) * volume
