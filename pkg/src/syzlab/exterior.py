"""Exact exterior-algebra engine on 2n real covectors with complex coefficients.

Covector basis order is dx^1 < ... < dx^n < dy^1 < ... < dy^n (internally
indices 0..n-1 are dx's, n..2n-1 are dy's).  All signs come from sorting
permutation parity.  Coefficients are either Python complex ("double" mode)
or QC exact complex rationals ("exact" mode); mixing modes is rejected.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union


class PrecisionError(TypeError):
    """Raised when exact and double coefficients are mixed."""


class DimensionError(ValueError):
    """Raised when operands live on spaces of different dimension."""


class QC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        other = QC._coerce(other)
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = QC._coerce(other)
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return QC._coerce(other) - self

    def __mul__(self, other):
        other = QC._coerce(other)
        return QC(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QC._coerce(other)
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero QC")
        return QC((self.re * other.re + self.im * other.im) / d,
                  (self.im * other.re - self.re * other.im) / d)

    def __neg__(self):
        return QC(-self.re, -self.im)

    def conjugate(self):
        return QC(self.re, -self.im)

    def __eq__(self, other):
        try:
            other = QC._coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"QC({self.re}, {self.im})"

    @staticmethod
    def _coerce(v):
        if isinstance(v, QC):
            return v
        if isinstance(v, (int, Fraction)):
            return QC(v)
        raise TypeError(f"cannot coerce {type(v).__name__} to QC exactly")

    @staticmethod
    def i():
        return QC(0, 1)


Coeff = Union[complex, QC]


def _sort_sign(indices: Sequence[int]):
    """Sort indices, returning (sorted tuple, parity sign) or (None, 0) on repeats."""
    idx = list(indices)
    sign = 1
    # insertion sort; inputs are short
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(idx)):
        if idx[i - 1] == idx[i]:
            return None, 0
    return tuple(idx), sign


def _shuffle_sign(first: Sequence[int], second: Sequence[int]) -> int:
    """Parity of the shuffle placing `first` before `second` relative to sorted order."""
    merged = list(first) + list(second)
    sign = 1
    for i in range(len(merged)):
        for j in range(i + 1, len(merged)):
            if merged[i] > merged[j]:
                sign = -sign
    return sign


class ExteriorForm:
    """Element of the exterior algebra on 2n covectors, sparse over monomials.

    `fiber_dual` only affects labeling: False means fiber coframe dy^j,
    True means the dual-fiber coframe dy_j (the image of the Fourier map).
    """

    __slots__ = ("n", "mode", "fiber_dual", "terms")

    def __init__(self, n: int, terms: Mapping[tuple, Coeff] | None = None,
                 mode: str = "double", fiber_dual: bool = False):
        if n < 1:
            raise DimensionError("dimension n must be a positive integer")
        if mode not in ("double", "exact"):
            raise ValueError(f"unknown precision mode {mode!r}")
        self.n = n
        self.mode = mode
        self.fiber_dual = fiber_dual
        self.terms: dict[tuple, Coeff] = {}
        if terms:
            for key, coeff in terms.items():
                key2, sign = _sort_sign(key)
                if key2 is None:
                    continue
                c = self._convert(coeff)
                if sign < 0:
                    c = -c
                self._accumulate(key2, c)

    # -- construction helpers -------------------------------------------------

    def _convert(self, c) -> Coeff:
        if self.mode == "exact":
            if isinstance(c, QC):
                return c
            if isinstance(c, (int, Fraction)):
                return QC(c)
            raise PrecisionError(f"exact-mode form cannot take {type(c).__name__} coefficient")
        if isinstance(c, QC):
            raise PrecisionError("double-mode form cannot take QC coefficient")
        return complex(c)

    def _zero(self) -> Coeff:
        return QC() if self.mode == "exact" else 0j

    def _accumulate(self, key: tuple, c: Coeff):
        cur = self.terms.get(key)
        tot = c if cur is None else cur + c
        if tot:
            self.terms[key] = tot
        elif key in self.terms:
            del self.terms[key]

    @classmethod
    def zero(cls, n: int, mode: str = "double", fiber_dual: bool = False) -> "ExteriorForm":
        return cls(n, {}, mode=mode, fiber_dual=fiber_dual)

    @classmethod
    def scalar(cls, n: int, value, mode: str = "double", fiber_dual: bool = False) -> "ExteriorForm":
        return cls(n, {(): value}, mode=mode, fiber_dual=fiber_dual)

    @classmethod
    def dx(cls, n: int, j: int, mode: str = "double") -> "ExteriorForm":
        """Base covector dx^j, 1-indexed."""
        if not 1 <= j <= n:
            raise DimensionError(f"dx index {j} out of range for n={n}")
        one = 1 if mode == "exact" else 1.0
        return cls(n, {(j - 1,): one}, mode=mode)

    @classmethod
    def dy(cls, n: int, j: int, mode: str = "double", fiber_dual: bool = False) -> "ExteriorForm":
        """Fiber covector dy^j (or dual dy_j when fiber_dual), 1-indexed."""
        if not 1 <= j <= n:
            raise DimensionError(f"dy index {j} out of range for n={n}")
        one = 1 if mode == "exact" else 1.0
        return cls(n, {(n + j - 1,): one}, mode=mode, fiber_dual=fiber_dual)

    @classmethod
    def from_matrix(cls, n: int, mat, mode: str = "double",
                    fiber_dual: bool = False) -> "ExteriorForm":
        """Two-form Sigma_jk mat[j][k] dx^j ^ dy^k from an n x n matrix."""
        terms = {}
        for j in range(n):
            for k in range(n):
                c = mat[j][k]
                if c:
                    terms[(j, n + k)] = c
        return cls(n, terms, mode=mode, fiber_dual=fiber_dual)

    # -- basic algebra --------------------------------------------------------

    def _check(self, other: "ExteriorForm"):
        if self.n != other.n:
            raise DimensionError(f"dimension mismatch: n={self.n} vs n={other.n}")
        if self.mode != other.mode:
            raise PrecisionError(f"precision mismatch: {self.mode} vs {other.mode}")

    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check(other)
        out = ExteriorForm(self.n, mode=self.mode, fiber_dual=self.fiber_dual)
        out.terms = dict(self.terms)
        for key, c in other.terms.items():
            out._accumulate(key, c)
        return out

    def __sub__(self, other: "ExteriorForm") -> "ExteriorForm":
        return self + (-other)

    def __neg__(self) -> "ExteriorForm":
        out = ExteriorForm(self.n, mode=self.mode, fiber_dual=self.fiber_dual)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def scale(self, factor) -> "ExteriorForm":
        factor = self._convert(factor)
        out = ExteriorForm(self.n, mode=self.mode, fiber_dual=self.fiber_dual)
        if factor:
            out.terms = {k: c * factor for k, c in self.terms.items()}
            out.terms = {k: c for k, c in out.terms.items() if c}
        return out

    def conjugate(self) -> "ExteriorForm":
        out = ExteriorForm(self.n, mode=self.mode, fiber_dual=self.fiber_dual)
        out.terms = {k: (c.conjugate() if isinstance(c, QC) else c.conjugate())
                     for k, c in self.terms.items()}
        return out

    def degrees(self) -> set[int]:
        return {len(k) for k in self.terms}

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, key: Sequence[int]) -> Coeff:
        """Coefficient of the monomial with the given covector indices (0-based)."""
        key2, sign = _sort_sign(key)
        if key2 is None:
            return self._zero()
        c = self.terms.get(key2)
        if c is None:
            return self._zero()
        return -c if sign < 0 else c

    def __eq__(self, other):
        if not isinstance(other, ExteriorForm):
            return NotImplemented
        return (self.n == other.n and self.mode == other.mode
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.n, self.mode, frozenset(self.terms.items())))

    def __repr__(self):
        return f"ExteriorForm(n={self.n}, {self.to_text()!r})"

    # -- serialization --------------------------------------------------------

    def _label(self, idx: int) -> str:
        if idx < self.n:
            return f"dx{idx + 1}"
        j = idx - self.n + 1
        return f"dy_{j}" if self.fiber_dual else f"dy{j}"

    def to_text(self) -> str:
        """Canonical text form: one line per monomial, `(re,im) dx1^dy2`."""
        lines = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[key]
            if isinstance(c, QC):
                re_s, im_s = str(c.re), str(c.im)
            else:
                re_s, im_s = repr(c.real), repr(c.imag)
            mono = "^".join(self._label(i) for i in key) if key else "1"
            lines.append(f"({re_s},{im_s}) {mono}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, n: int, text: str, mode: str = "double") -> "ExteriorForm":
        terms = {}
        fiber_dual = "dy_" in text
        pat = _re.compile(r"^\(([^,]+),([^)]+)\)\s+(\S+)$")
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            m = pat.match(line)
            if m is None:
                raise ValueError(f"unparsable monomial line: {line!r}")
            re_s, im_s, mono = m.groups()
            if mode == "exact":
                coeff: Coeff = QC(Fraction(re_s), Fraction(im_s))
            else:
                coeff = complex(float(re_s), float(im_s))
            if mono == "1":
                key: tuple = ()
            else:
                idx = []
                for factor in mono.split("^"):
                    if factor.startswith("dx"):
                        idx.append(int(factor[2:]) - 1)
                    elif factor.startswith("dy_"):
                        idx.append(n + int(factor[3:]) - 1)
                    elif factor.startswith("dy"):
                        idx.append(n + int(factor[2:]) - 1)
                    else:
                        raise ValueError(f"unknown covector {factor!r}")
                key = tuple(idx)
            terms[key] = coeff
        return cls(n, terms, mode=mode, fiber_dual=fiber_dual)


@dataclass(frozen=True)
class TangentDatum:
    """Deformation direction: vector v in R^{2n} plus a (0,1)-type 1-form B."""

    v: tuple
    B: ExteriorForm

    def __post_init__(self):
        if len(self.v) != 2 * self.B.n:
            raise DimensionError("v must have dimension 2n matching B")
        degs = self.B.degrees()
        if degs and degs != {1}:
            raise DimensionError("B must be a 1-form")


# -- operations ---------------------------------------------------------------

def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    """Graded-commutative wedge product."""
    a._check(b)
    out = ExteriorForm(a.n, mode=a.mode, fiber_dual=a.fiber_dual or b.fiber_dual)
    top = 2 * a.n
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            if len(ka) + len(kb) > top:
                continue
            key, sign = _sort_sign(ka + kb)
            if key is None:
                continue
            c = ca * cb
            if sign < 0:
                c = -c
            out._accumulate(key, c)
    return out


def power(a: ExteriorForm, k: int) -> ExteriorForm:
    """k-fold wedge power; power(a, 0) is the scalar 1."""
    if k < 0:
        raise ValueError("power requires a nonnegative exponent")
    one = 1 if a.mode == "exact" else 1.0
    out = ExteriorForm.scalar(a.n, one, mode=a.mode, fiber_dual=a.fiber_dual)
    for _ in range(k):
        out = wedge(out, a)
    return out


def contract(v: Sequence, a: ExteriorForm) -> ExteriorForm:
    """Interior product iota_v, an antiderivation of degree -1."""
    if len(v) != 2 * a.n:
        raise DimensionError(f"vector has length {len(v)}, expected {2 * a.n}")
    out = ExteriorForm(a.n, mode=a.mode, fiber_dual=a.fiber_dual)
    for key, c in a.terms.items():
        for pos, idx in enumerate(key):
            comp = v[idx]
            if not comp:
                continue
            comp = out._convert(comp)
            term = c * comp
            if pos % 2 == 1:
                term = -term
            out._accumulate(key[:pos] + key[pos + 1:], term)
    return out


def top_coefficient(a: ExteriorForm) -> Coeff:
    """Coefficient of the volume monomial dx^1^dy^1...; 0 if absent."""
    return a.coefficient(tuple(range(2 * a.n)))


def fiber_fourier(a: ExteriorForm) -> ExteriorForm:
    """T-duality on the fiber coframe: dy^K -> +/- dy_{K^c}, base factors fixed.

    The sign on each monomial is the one produced by the integral transform
    with kernel exp(Sigma_j dy^j ^ dy_j): pair dy^{K^c} ^ dy_{K^c} onto the
    input, push the dual covectors to the right (parity C(|K^c|, 2)), and
    sort the fiber factors (shuffle parity of K before K^c).  This is the
    convention under which the transform exchanges the two sl(2) actions on
    the exterior algebra.  Applying the map twice gives +/- identity monomial
    by monomial.
    """
    n = a.n
    full = set(range(n))
    out = ExteriorForm(n, mode=a.mode, fiber_dual=not a.fiber_dual)
    for key, c in a.terms.items():
        base = tuple(i for i in key if i < n)
        fiber = tuple(i - n for i in key if i >= n)
        comp = tuple(sorted(full - set(fiber)))
        sign = _shuffle_sign(fiber, comp)
        if (len(comp) * (len(comp) - 1) // 2) % 2:
            sign = -sign
        new_key = base + tuple(n + j for j in comp)
        out._accumulate(new_key, c if sign > 0 else -c)
    return out


def pullback(a: ExteriorForm, basis, m: int) -> ExteriorForm:
    """Pull a form on R^{2n} back along the linear map with rows `basis`.

    `basis` is an m x 2n matrix whose rows span the subspace; the result is
    a form on an m-dimensional space, embedded in the 2m-covector algebra of
    a rank-m ExteriorForm using only base covectors du^1..du^m (indices 0..m-1).
    """
    if m < 1 or len(basis) != m:
        raise DimensionError("basis must have m rows")
    for row in basis:
        if len(row) != 2 * a.n:
            raise DimensionError("basis rows must have length 2n")
    out = ExteriorForm(m, mode=a.mode)
    from itertools import combinations

    for key, c in a.terms.items():
        k = len(key)
        if k > m:
            continue
        for rows in combinations(range(m), k):
            det = _minor_det([[basis[r][j] for j in key] for r in rows],
                             exact=(a.mode == "exact"))
            if det:
                out._accumulate(tuple(rows), c * out._convert(det))
    return out


def _minor_det(mat, exact: bool):
    k = len(mat)
    if k == 0:
        return 1 if exact else 1.0
    if k == 1:
        return mat[0][0]
    total = 0
    for j in range(k):
        if not mat[0][j]:
            continue
        sub = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _minor_det(sub, exact)
        total = total + (term if j % 2 == 0 else -term)
    return total
