"""Exact generating-series engine for BPS and Gromov-Witten invariants.

The resummation formula relates the two kinds of invariants of a single
effective class and its multiples:

    Sigma_{d,r} N_d^r t^{2r-2} q^d
        = Sigma_{d,g} n_d^g Sigma_k (1/k) (2 sin(kt/2))^{2g-2} q^{kd}.

All arithmetic is exact rational: the sine powers are expanded as Laurent
series in t with Fraction coefficients, the genus-0 channel by power-series
inversion.  The module also extracts BPS numbers from sl(2) x sl(2)
multiplicity tables by a descending-weight triangular solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial


class TruncationError(ValueError):
    pass


HALF = Fraction(1, 2)


@dataclass
class QTSeries:
    """Truncated Laurent series Sigma N_{d,r} q^d t^{2r-2}, exact rationals."""

    D: int
    R: int
    coefficients: dict = field(default_factory=dict)   # (d, r) -> Fraction

    def __post_init__(self):
        clean = {}
        for (d, r), v in self.coefficients.items():
            if not (1 <= d <= self.D and 0 <= r <= self.R):
                raise TruncationError(
                    f"coefficient ({d},{r}) is outside the truncation window "
                    f"D={self.D}, R={self.R}")
            v = Fraction(v)
            if v:
                clean[(d, r)] = v
        self.coefficients = clean

    def get(self, d: int, r: int) -> Fraction:
        return self.coefficients.get((d, r), Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, QTSeries):
            return NotImplemented
        return (self.D, self.R, self.coefficients) == \
            (other.D, other.R, other.coefficients)


@dataclass
class BpsTable:
    """BPS numbers n_d^g for d >= 1, g >= 0; non-integer entries are flagged."""

    D: int
    G: int
    entries: dict = field(default_factory=dict)        # (d, g) -> Fraction

    def __post_init__(self):
        clean = {}
        for (d, g), v in self.entries.items():
            if not (1 <= d <= self.D and 0 <= g <= self.G):
                raise TruncationError(
                    f"entry ({d},{g}) is outside the table window "
                    f"D={self.D}, G={self.G}")
            v = Fraction(v)
            if v:
                clean[(d, g)] = v
        self.entries = clean

    def get(self, d: int, g: int) -> Fraction:
        return self.entries.get((d, g), Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, BpsTable):
            return NotImplemented
        return (self.D, self.G, self.entries) == \
            (other.D, other.G, other.entries)


@dataclass
class Sl2Table:
    """Multiplicities N_{j,k} of irreducibles V_{j,k}, j and k half-integers."""

    pairs: dict = field(default_factory=dict)          # (j, k) -> int

    def __post_init__(self):
        clean = {}
        for (j, k), v in self.pairs.items():
            j, k = Fraction(j), Fraction(k)
            if j < 0 or k < 0 or (2 * j).denominator != 1 or \
                    (2 * k).denominator != 1:
                raise TruncationError(f"({j},{k}) is not a valid weight pair")
            if v:
                clean[(j, k)] = v
        self.pairs = clean

    def left_factor(self) -> dict:
        """Signed left-factor content Sigma_k N_{j,k} (-1)^{2k} (2k+1)."""
        out = {}
        for (j, k), v in self.pairs.items():
            sign = -1 if (2 * k) % 2 else 1
            out[j] = out.get(j, Fraction(0)) + Fraction(v) * sign * (2 * k + 1)
        return {j: v for j, v in out.items() if v}


def _sin_power_coefficients(k: int, g: int, R: int) -> dict:
    """Coefficients of t^{2r-2} in (2 sin(kt/2))^{2g-2}, r = g..R.

    For g = 0 the negative power is expanded by inverting the entire series
    2 sin(kt/2) / (kt) = Sigma_m (-1)^m (kt)^{2m} / (4^m (2m+1)!).
    """
    M = R + 1
    base = [Fraction((-1) ** m * k ** (2 * m),
                     4 ** m * factorial(2 * m + 1)) for m in range(M)]
    if g == 0:
        # invert, then square; series has unit constant term
        inv = [Fraction(0)] * M
        inv[0] = Fraction(1)
        for m in range(1, M):
            inv[m] = -sum(base[i] * inv[m - i] for i in range(1, m + 1))
        sq = [sum(inv[i] * inv[m - i] for i in range(m + 1)) for m in range(M)]
        return {r: sq[r] / k ** 2 for r in range(R + 1)}
    # positive even power 2g-2 of kt * base(t^2)
    poly = [Fraction(1)] + [Fraction(0)] * (M - 1)
    for _ in range(2 * g - 2):
        poly = [sum(poly[i] * base[m - i] for i in range(m + 1))
                for m in range(M)]
    out = {}
    for r in range(g, R + 1):
        out[r] = poly[r - g] * k ** (2 * g - 2)
    return out


def gw_from_bps(b: BpsTable, D: int, R: int) -> QTSeries:
    """Forward resummation of a BPS table into the (q, t) series."""
    for (d, g) in b.entries:
        if g > R:
            raise TruncationError(
                f"entry n^{g}_{d} first contributes at t^{2 * g - 2}, "
                f"beyond the requested genus window R={R}")
    coeffs = {}
    for (d0, g), n in b.entries.items():
        k = 1
        while k * d0 <= D:
            sin_pow = _sin_power_coefficients(k, g, R)
            for r, c in sin_pow.items():
                key = (k * d0, r)
                coeffs[key] = coeffs.get(key, Fraction(0)) + n * c / k
            k += 1
    return QTSeries(D, R, coeffs)


def bps_from_gw(N: QTSeries) -> BpsTable:
    """Invert the resummation; triangular in (degree, genus).

    The degree-d genus-g BPS number first affects the (d, g) series
    coefficient with unit weight, so ascending (d, g) elimination is exact.
    """
    D, R = N.D, N.R
    table = {}
    for d in range(1, D + 1):
        for g in range(0, R + 1):
            partial = gw_from_bps(BpsTable(D, R, dict(table)), D, R)
            defect = N.get(d, g) - partial.get(d, g)
            if defect:
                table[(d, g)] = defect
    return BpsTable(D, R, table)


def integrality_check(b: BpsTable) -> dict:
    """Flag non-integer BPS entries; they signal inconsistent input data."""
    bad = {key: v for key, v in b.entries.items() if v.denominator != 1}
    return {"integral": not bad, "violations": bad}


def yukawa_A(classical, N0, D: int) -> list:
    """A-side Yukawa q-coefficients for the one-modulus evaluation.

    `N0[d-1]` is the genus-0 invariant of degree d; the instanton part of the
    q^m coefficient is Sigma_{d | m} N0_d d^3 (from q^d / (1 - q^d)).
    Returns [c_0, c_1, ..., c_D] with c_0 the classical triple product.
    """
    if D > len(N0):
        raise TruncationError(
            f"need genus-0 data up to degree {D}, got {len(N0)}")
    out = [Fraction(classical)]
    for m in range(1, D + 1):
        c = Fraction(0)
        for d in range(1, m + 1):
            if m % d == 0:
                c += Fraction(N0[d - 1]) * d ** 3
        out.append(c)
    return out


def yukawa_B_semiflat(zetas, Omega, volume=1):
    """B-side Yukawa pairing of tangent-direction data against Omega.

    Each zeta is a pair (v, alpha): a tangent vector (length 2n) and a
    constant 1-form.  The pairing is Omega(v_1, ..., v_n) times the top
    coefficient of Omega ^ alpha_1 ^ ... ^ alpha_n times the torus volume.
    With the convention dz-bar = dx - i dy this gives -2i * volume for the
    n = 1 flat pairing of the unit anti-holomorphic direction.
    """
    from .exterior import DimensionError, contract, top_coefficient, wedge

    n = Omega.n
    if len(zetas) != n:
        raise DimensionError(f"need exactly {n} tangent data, got {len(zetas)}")
    scalar = Omega
    for v, _ in zetas:
        scalar = contract(v, scalar)
    s = scalar.coefficient(())
    form = Omega
    for _, alpha in zetas:
        if alpha.degrees() - {1} and not alpha.is_zero():
            raise DimensionError("zeta form factors must have degree 1")
        form = wedge(form, alpha)
    return complex(s) * complex(top_coefficient(form)) * volume


def tensor_power_decompose(g: int) -> dict:
    """Multiplicities of V_j in [V_{1/2} + 2 V_0]^{tensor g}."""
    out = {Fraction(0): 1}
    for _ in range(g):
        nxt = {}
        for j, m in out.items():
            # tensor with V_{1/2}: j +- 1/2 (no j - 1/2 branch at j = 0)
            for j2 in ((j + HALF, j - HALF) if j > 0 else (j + HALF,)):
                nxt[j2] = nxt.get(j2, 0) + m
            # tensor with 2 V_0
            nxt[j] = nxt.get(j, 0) + 2 * m
        out = nxt
    return {j: m for j, m in sorted(out.items()) if m}


def bps_from_sl2(N: Sl2Table) -> dict:
    """BPS numbers n^g from the signed left-factor content of N_{j,k}.

    Solves Sigma_g n^g [V_{1/2} + 2 V_0]^{tensor g} = Sigma_j m_j V_j by
    descending highest weight; the power g contributes V_{g/2} with unit
    multiplicity.  Entries may come out negative or fractional; they are
    returned as-is for the caller to judge.
    """
    target = dict(N.left_factor())
    result = {}
    while target:
        j_top = max(target)
        g = int(2 * j_top)
        n_g = target[j_top]
        result[g] = n_g
        for j, m in tensor_power_decompose(g).items():
            v = target.get(j, Fraction(0)) - n_g * m
            if v:
                target[j] = v
            else:
                target.pop(j, None)
    return dict(sorted(result.items()))
