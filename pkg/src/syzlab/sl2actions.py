"""Hard-Lefschetz and mirror sl(2) actions on the torus exterior algebra.

Operators act on the 4^n-dimensional space of constant forms on a flat
2n-torus (which equals its cohomology), represented as exact rational
matrices in the canonical monomial basis.  The mirror triple is the
hard-Lefschetz triple of the dual side conjugated by the fiberwise Fourier
map, and the two triples commute, giving so(4) = sl(2) x sl(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .exterior import DimensionError, ExteriorForm, QC, fiber_fourier, power, \
    top_coefficient, wedge
from .semiflat import exact_det, exact_inverse


def monomial_basis(n: int) -> list[tuple]:
    """All 4^n monomial index tuples, graded by degree then lexicographic."""
    out = []
    for k in range(2 * n + 1):
        out.extend(combinations(range(2 * n), k))
    return out


def total_degree_grading(n: int) -> tuple:
    return tuple(len(b) for b in monomial_basis(n))


def mirror_degree_grading(n: int) -> tuple:
    """Degree after the fiberwise Fourier exchange: base + (n - fiber)."""
    out = []
    for b in monomial_basis(n):
        base = sum(1 for i in b if i < n)
        fiber = len(b) - base
        out.append(base + n - fiber)
    return tuple(out)


@dataclass
class LinearAction:
    """Exact-rational operator on the monomial basis of Lambda*(R^{2n}).

    `grading` assigns a weight to each basis monomial; when both it and
    `degree_shift` are set, every nonzero entry must shift the weight by
    exactly `degree_shift` (+2 for a Lefschetz L, -2 for its adjoint, 0 for
    H).  Derived operators of mixed grading carry None and skip the check.
    """

    n: int
    matrix: list                      # 4^n x 4^n nested lists of Fraction
    degree_shift: int | None = None
    grading: tuple | None = None

    def __post_init__(self):
        dim = 4 ** self.n
        if len(self.matrix) != dim or any(len(r) != dim for r in self.matrix):
            raise DimensionError("operator matrix has the wrong shape")
        if self.grading is not None and self.degree_shift is not None:
            for i in range(dim):
                for j in range(dim):
                    if self.matrix[i][j] and \
                            self.grading[i] - self.grading[j] != self.degree_shift:
                        raise DimensionError(
                            f"entry ({i},{j}) violates the degree shift "
                            f"{self.degree_shift}")

    def _merge(self, other, shift):
        grading = self.grading if self.grading == other.grading else None
        return grading, (shift if grading is not None else None)

    def __matmul__(self, other: "LinearAction") -> "LinearAction":
        if self.n != other.n:
            raise DimensionError("operator dimension mismatch")
        shift = None
        if self.degree_shift is not None and other.degree_shift is not None:
            shift = self.degree_shift + other.degree_shift
        grading, shift = self._merge(other, shift)
        return LinearAction(self.n, mat_mul(self.matrix, other.matrix),
                            shift, grading)

    def __sub__(self, other: "LinearAction") -> "LinearAction":
        if self.n != other.n:
            raise DimensionError("operator shape mismatch")
        m = [[a - b for a, b in zip(ra, rb)]
             for ra, rb in zip(self.matrix, other.matrix)]
        shift = self.degree_shift if self.degree_shift == other.degree_shift \
            else None
        grading, shift = self._merge(other, shift)
        return LinearAction(self.n, m, shift, grading)

    def scale(self, c) -> "LinearAction":
        c = Fraction(c)
        return LinearAction(self.n, [[c * v for v in row] for row in self.matrix],
                            self.degree_shift, self.grading)

    def max_abs(self) -> Fraction:
        return max((abs(v) for row in self.matrix for v in row),
                   default=Fraction(0))

    def is_zero(self) -> bool:
        return all(not v for row in self.matrix for v in row)


def mat_mul(A, B):
    m, inner, p = len(A), len(B), len(B[0])
    out = [[Fraction(0)] * p for _ in range(m)]
    for i in range(m):
        Ai = A[i]
        row = out[i]
        for k in range(inner):
            a = Ai[k]
            if a:
                Bk = B[k]
                for j in range(p):
                    if Bk[j]:
                        row[j] += a * Bk[j]
    return out


def commutator(a: LinearAction, b: LinearAction) -> LinearAction:
    return (a @ b) - (b @ a)


def exact_rank(M) -> int:
    """Rank of a rational matrix by Gaussian elimination."""
    A = [list(map(Fraction, row)) for row in M]
    rows, cols = len(A), len(A[0]) if A else 0
    rank = 0
    for col in range(cols):
        piv = next((r for r in range(rank, rows) if A[r][col] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        p = A[rank][col]
        A[rank] = [v / p for v in A[rank]]
        for r in range(rows):
            if r != rank and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[rank])]
        rank += 1
    return rank


def _as_exact_two_form(omega: ExteriorForm) -> ExteriorForm:
    if omega.mode != "exact":
        raise DimensionError("sl(2) construction needs exact coefficients")
    if omega.degrees() - {2}:
        raise DimensionError("omega must be a constant 2-form")
    return omega


def _real_fraction(c) -> Fraction:
    if isinstance(c, QC):
        if c.im:
            raise DimensionError("operator coefficients must be real")
        return Fraction(c.re)
    return Fraction(c)


def operator_matrix(func, n: int) -> list:
    """Matrix of a linear map on forms, column by column over the basis."""
    basis = monomial_basis(n)
    index = {b: i for i, b in enumerate(basis)}
    dim = len(basis)
    M = [[Fraction(0)] * dim for _ in range(dim)]
    for j, b in enumerate(basis):
        image = func(ExteriorForm(n, {b: QC(1)}, mode="exact"))
        for key, c in image.terms.items():
            M[index[key]][j] = _real_fraction(c)
    return M


def wedge_matrix(omega: ExteriorForm) -> list:
    omega = _as_exact_two_form(omega)
    return operator_matrix(lambda f: wedge(omega, f), omega.n)


def gram_matrix(n: int, g=None) -> list:
    """Inner products of basis monomials for a base-fiber block metric.

    `g` is the n x n Hessian block (identity when omitted); the metric on
    covectors uses its inverse on both the base and fiber factors.
    """
    basis = monomial_basis(n)
    if g is None:
        return [[Fraction(int(i == j)) for j in range(len(basis))]
                for i in range(len(basis))]
    ginv = exact_inverse([list(map(Fraction, row)) for row in g])

    def pair(a: int, b: int) -> Fraction:
        if (a < n) != (b < n):
            return Fraction(0)
        return ginv[a % n][b % n]

    dim = len(basis)
    P = [[Fraction(0)] * dim for _ in range(dim)]
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            if len(bi) != len(bj):
                continue
            k = len(bi)
            if k == 0:
                P[i][j] = Fraction(1)
                continue
            sub = [[pair(a, b) for b in bj] for a in bi]
            P[i][j] = exact_det(sub)
    return P


def transpose(M):
    return [list(row) for row in zip(*M)]


def lefschetz_triple(omega: ExteriorForm, n: int, g=None):
    """(L, Lambda, H) for wedging with a nondegenerate constant 2-form.

    Lambda is the adjoint with respect to the metric Gram matrix (identity
    for the flat model); H = [L, Lambda] acts as (k - n) in degree k.
    """
    omega = _as_exact_two_form(omega)
    if not top_coefficient(power(omega, n)):
        raise DimensionError("omega is degenerate")
    Lm = wedge_matrix(omega)
    P = gram_matrix(n, g)
    if g is None:
        Am = transpose(Lm)
    else:
        Am = mat_mul(exact_inverse(P), mat_mul(transpose(Lm), P))
    grading = total_degree_grading(n)
    L = LinearAction(n, Lm, +2, grading)
    A = LinearAction(n, Am, -2, grading)
    H = commutator(L, A)
    return L, A, H


def fourier_matrix(n: int) -> list:
    """Signed permutation matrix of the fiberwise Fourier map."""
    return operator_matrix(
        lambda f: ExteriorForm(n, fiber_fourier(f).terms, mode="exact"), n)


def mirror_sl2(omega_w: ExteriorForm, n: int, g=None):
    """The second sl(2): the dual-side Lefschetz triple pulled back by Fourier.

    The Fourier matrix is a signed permutation, so its inverse is its
    transpose.
    """
    L_w, A_w, H_w = lefschetz_triple(omega_w, n, g)
    F = fourier_matrix(n)
    Ft = transpose(F)
    grading = mirror_degree_grading(n)

    def conj(op: LinearAction, shift: int) -> LinearAction:
        return LinearAction(n, mat_mul(Ft, mat_mul(op.matrix, F)), shift,
                            grading)

    return conj(L_w, +2), conj(A_w, -2), conj(H_w, 0)


def so4_check(L, A, H, L2, A2, H2) -> dict:
    """Max-abs entries of the sl(2) relation defects and cross-commutators."""
    report = {}
    for tag, (l, a, h) in (("first", (L, A, H)), ("second", (L2, A2, H2))):
        report[f"{tag}_HL"] = (commutator(h, l) - l.scale(2)).max_abs()
        report[f"{tag}_HA"] = (commutator(h, a) - a.scale(-2)).max_abs()
        report[f"{tag}_LA"] = (commutator(l, a) - h).max_abs()
    names = {"L": L, "A": A, "H": H}
    names2 = {"L": L2, "A": A2, "H": H2}
    for na, a in names.items():
        for nb, b in names2.items():
            report[f"cross_{na}{nb}"] = commutator(a, b).max_abs()
    return report


def lefschetz_bijectivity(L: LinearAction, n: int) -> dict:
    """Rank of L^k from degree n-k to degree n+k, against the full dimension."""
    basis = monomial_basis(L.n)
    out = {}
    M = [[Fraction(int(i == j)) for j in range(len(basis))]
         for i in range(len(basis))]
    for k in range(0, n + 1):
        if k:
            M = mat_mul(L.matrix, M)
        src = [j for j, b in enumerate(basis) if len(b) == n - k]
        dst = [i for i, b in enumerate(basis) if len(b) == n + k]
        sub = [[M[i][j] for j in src] for i in dst]
        out[k] = (exact_rank(sub), len(src), len(dst))
    return out


def weight_table(H: LinearAction, H2: LinearAction) -> list[dict]:
    """Joint (degree, H-weight, H'-weight) multiplicities.

    Both operators are diagonal in the monomial basis for the flat model;
    off-diagonal entries are rejected.
    """
    basis = monomial_basis(H.n)
    counts = {}
    for M in (H.matrix, H2.matrix):
        for i in range(len(basis)):
            for j in range(len(basis)):
                if i != j and M[i][j]:
                    raise DimensionError("weight table needs diagonal actions")
    for i, b in enumerate(basis):
        key = (len(b), H.matrix[i][i], H2.matrix[i][i])
        counts[key] = counts.get(key, 0) + 1
    return [{"degree": k[0], "weight_1": k[1], "weight_2": k[2],
             "multiplicity": v}
            for k, v in sorted(counts.items())]
