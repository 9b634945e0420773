"""Real and complexified Monge-Ampere equations on uniform grids.

det(D^2 phi) = c with zero Dirichlet data on a convex domain (box or ball),
discretized with central second differences.  Curved boundaries are handled
Shortley-Weller style: the second difference along each stencil line uses the
actual cut distance to the boundary, which keeps the scheme exact on
quadratic potentials.  The nonlinear system is solved by a damped Newton
iteration with per-node convexity monitoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exterior import ExteriorForm, QC, power, top_coefficient, wedge


class ConvergenceError(RuntimeError):
    """Newton iteration failed; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, or the ball masked inside its bounding box."""

    kind: str                      # "box" or "ball"
    lo: tuple
    hi: tuple
    center: tuple | None = None
    radius: float | None = None

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo, hi = tuple(map(float, lo)), tuple(map(float, hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise GridError("box needs lo < hi componentwise")
        return cls("box", lo, hi)

    @classmethod
    def ball(cls, center, radius) -> "Domain":
        center = tuple(map(float, center))
        radius = float(radius)
        if radius <= 0:
            raise GridError("ball radius must be positive")
        lo = tuple(c - radius for c in center)
        hi = tuple(c + radius for c in center)
        return cls("ball", lo, hi, center=center, radius=radius)

    @classmethod
    def unit_disk(cls, n: int = 2) -> "Domain":
        return cls.ball((0.0,) * n, 1.0)

    @property
    def n(self) -> int:
        return len(self.lo)


@dataclass
class GridPotential:
    """Scalar potential sampled on the uniform grid of a Domain.

    `values` covers every box node; nodes outside the domain (ball mask) and
    boundary nodes carry the Dirichlet value 0.  `mask`, when present, flags
    nodes carrying valid data (used by Legendre-dual grids).
    """

    domain: Domain
    h: float
    values: np.ndarray
    mask: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def shape(self):
        return self.values.shape

    def coords(self, idx) -> np.ndarray:
        return np.asarray(self.domain.lo) + self.h * np.asarray(idx, dtype=float)

    def axes(self):
        return [np.asarray(self.domain.lo)[k] + self.h * np.arange(self.shape[k])
                for k in range(self.n)]


def make_grid(domain: Domain, h: float) -> tuple:
    """Node counts per axis; h must divide every box edge."""
    shape = []
    for a, b in zip(domain.lo, domain.hi):
        m = (b - a) / h
        mi = round(m)
        if abs(m - mi) > 1e-9:
            raise GridError(f"h={h} does not divide edge [{a},{b}]")
        shape.append(mi + 1)
    return tuple(shape)


class Stencil:
    """Precomputed Shortley-Weller stencil data for the interior nodes."""

    def __init__(self, domain: Domain, h: float):
        self.domain = domain
        self.h = float(h)
        self.n = domain.n
        self.shape = make_grid(domain, h)
        n = self.n

        grids = np.meshgrid(*[np.arange(s) for s in self.shape], indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1)   # (N, n) integer
        x = np.asarray(domain.lo) + self.h * idx
        if domain.kind == "ball":
            r = np.linalg.norm(x - np.asarray(domain.center), axis=1)
            interior = r < domain.radius - 1e-12 * self.h
        else:
            interior = np.ones(len(idx), dtype=bool)
            for k in range(n):
                interior &= (idx[:, k] > 0) & (idx[:, k] < self.shape[k] - 1)
        self.interior_flat = np.nonzero(interior)[0]
        self.x_int = x[self.interior_flat]
        self.N = len(self.interior_flat)
        if self.N == 0:
            raise GridError("grid has no interior nodes; refine h")

        self.unknown_of_flat = np.full(int(np.prod(self.shape)), -1, dtype=np.int64)
        self.unknown_of_flat[self.interior_flat] = np.arange(self.N)

        # directed lines: axes first, then (j,k,+) and (j,k,-) diagonals
        self.directions = []
        for j in range(n):
            o = np.zeros(n, dtype=np.int64)
            o[j] = 1
            self.directions.append(("axis", j, j, o))
        for j in range(n):
            for k in range(j + 1, n):
                op = np.zeros(n, dtype=np.int64)
                op[j] = 1
                op[k] = 1
                om = np.zeros(n, dtype=np.int64)
                om[j] = 1
                om[k] = -1
                self.directions.append(("diag+", j, k, op))
                self.directions.append(("diag-", j, k, om))

        self.idx_int = idx[self.interior_flat]
        self.line_data = [self._build_line(o) for (_, _, _, o) in self.directions]

    def _build_line(self, offset):
        """Per-interior-node (lm, lp, im, ip, gm, gp) along one directed line.

        lm/lp are distances, im/ip index the interior unknown vector (-1 for
        boundary or cut points, which carry the Dirichlet value 0 during a
        solve), and gm/gp index the full grid (-1 only at ball cut points),
        so residual evaluation can read actual stored boundary values.
        """
        dvec = offset * self.h
        ell = float(np.linalg.norm(dvec))
        lm = np.full(self.N, ell)
        lp = np.full(self.N, ell)
        im = np.full(self.N, -1, dtype=np.int64)
        ip = np.full(self.N, -1, dtype=np.int64)
        gm = np.full(self.N, -1, dtype=np.int64)
        gp = np.full(self.N, -1, dtype=np.int64)
        for side, larr, iarr, garr in ((+1, lp, ip, gp), (-1, lm, im, gm)):
            nb = self.idx_int + side * offset
            inside_box = np.all((nb >= 0) & (nb < np.asarray(self.shape)), axis=1)
            flat = np.zeros(self.N, dtype=np.int64)
            if np.any(inside_box):
                flat[inside_box] = np.ravel_multi_index(
                    tuple(nb[inside_box].T), self.shape)
            if self.domain.kind == "box":
                if not np.all(inside_box):   # should not happen for interior nodes
                    raise GridError("box stencil escaped the grid")
                iarr[:] = self.unknown_of_flat[flat]
                garr[:] = flat
            else:
                unk = np.where(inside_box, self.unknown_of_flat[flat], -1)
                iarr[:] = unk
                garr[:] = np.where(unk >= 0, flat, -1)
                cut = unk < 0
                if np.any(cut):
                    xa = self.x_int[cut] - np.asarray(self.domain.center)
                    d = side * dvec
                    a = float(np.dot(d, d))
                    b = xa @ d
                    c0 = np.einsum("ij,ij->i", xa, xa) - self.domain.radius ** 2
                    disc = b * b - a * c0
                    t = (-b + np.sqrt(np.maximum(disc, 0.0))) / a
                    larr[cut] = np.maximum(t, 1e-12) * ell
        return lm, lp, im, ip, gm, gp

    # -- evaluation -----------------------------------------------------------

    def full_values(self, u: np.ndarray) -> np.ndarray:
        """Embed the interior unknown vector into a zero-extended full grid."""
        v = np.zeros(int(np.prod(self.shape)))
        v[self.interior_flat] = u
        return v

    def second_differences(self, vflat: np.ndarray) -> list[np.ndarray]:
        """One array per directed line; `vflat` is the raveled full grid.

        Ball cut points contribute the Dirichlet value 0; box boundary nodes
        contribute whatever the grid stores there.
        """
        u = vflat[self.interior_flat]
        out = []
        for lm, lp, im, ip, gm, gp in self.line_data:
            um = np.where(gm >= 0, vflat[np.maximum(gm, 0)], 0.0)
            up = np.where(gp >= 0, vflat[np.maximum(gp, 0)], 0.0)
            out.append(2.0 * (um / (lm * (lm + lp)) + up / (lp * (lm + lp))
                              - u / (lm * lp)))
        return out

    def hessians(self, vflat: np.ndarray) -> np.ndarray:
        """(N, n, n) array of discrete Hessians at the interior nodes."""
        d = self.second_differences(vflat)
        H = np.empty((self.N, self.n, self.n))
        diag_cache = {}
        for (kind, j, k, _), arr in zip(self.directions, d):
            if kind == "axis":
                H[:, j, j] = arr
            elif kind == "diag+":
                diag_cache[(j, k)] = arr
            else:
                mixed = 0.5 * (diag_cache.pop((j, k)) - arr)
                H[:, j, k] = mixed
                H[:, k, j] = mixed
        return H

    def gradients(self, vflat: np.ndarray) -> np.ndarray:
        """(N, n) central first differences along the axes (cut-aware)."""
        u = vflat[self.interior_flat]
        g = np.empty((self.N, self.n))
        for ax in range(self.n):
            lm, lp, im, ip, gm, gp = self.line_data[ax]
            um = np.where(gm >= 0, vflat[np.maximum(gm, 0)], 0.0)
            up = np.where(gp >= 0, vflat[np.maximum(gp, 0)], 0.0)
            g[:, ax] = (lm ** 2 * up - lp ** 2 * um + (lp ** 2 - lm ** 2) * u) \
                / (lm * lp * (lm + lp))
        return g

    def interior_values(self, phi: GridPotential) -> np.ndarray:
        return phi.values.ravel()[self.interior_flat]

    def find_node(self, point) -> int:
        """Index (into interior arrays) of the interior node nearest `point`."""
        d = np.linalg.norm(self.x_int - np.asarray(point, dtype=float), axis=1)
        return int(np.argmin(d))


def _cofactors(H: np.ndarray) -> np.ndarray:
    """(N, n, n) cofactor matrices, explicit for n <= 3."""
    n = H.shape[-1]
    if n == 1:
        return np.ones_like(H)
    if n == 2:
        C = np.empty_like(H)
        C[:, 0, 0] = H[:, 1, 1]
        C[:, 1, 1] = H[:, 0, 0]
        C[:, 0, 1] = -H[:, 1, 0]
        C[:, 1, 0] = -H[:, 0, 1]
        return C
    if n == 3:
        C = np.empty_like(H)
        for i in range(3):
            for j in range(3):
                r = [a for a in range(3) if a != i]
                c = [a for a in range(3) if a != j]
                minor = (H[:, r[0], c[0]] * H[:, r[1], c[1]]
                         - H[:, r[0], c[1]] * H[:, r[1], c[0]])
                C[:, i, j] = ((-1) ** (i + j)) * minor
        return C
    raise GridError("only dimensions 1..3 are supported")


def _all_pd(H: np.ndarray) -> bool:
    """Positive definiteness of every Hessian via leading principal minors."""
    n = H.shape[-1]
    if np.any(H[:, 0, 0] <= 0):
        return False
    if n >= 2:
        if np.any(H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0] <= 0):
            return False
    if n >= 3:
        if np.any(np.linalg.det(H) <= 0):
            return False
    return True


def _quadratic_seed(st: Stencil, c: float) -> np.ndarray:
    dom = st.domain
    x0 = np.asarray(dom.center) if dom.kind == "ball" else \
        0.5 * (np.asarray(dom.lo) + np.asarray(dom.hi))
    if dom.kind == "ball":
        r0 = dom.radius
    else:
        r0 = 0.5 * float(np.linalg.norm(np.asarray(dom.hi) - np.asarray(dom.lo)))
    s = c ** (1.0 / dom.n)
    r2 = np.einsum("ij,ij->i", st.x_int - x0, st.x_int - x0)
    return 0.5 * s * (r2 - r0 ** 2)


def _boundary_distance_seed(st: Stencil, c: float) -> np.ndarray:
    """Convex seed built from the distance to the boundary plus a PD quadratic.

    The pure distance cone has a singular Hessian, so a quadratic term keeps
    the Newton Jacobian nonsingular.
    """
    dom = st.domain
    if dom.kind == "ball":
        d = dom.radius - np.linalg.norm(st.x_int - np.asarray(dom.center), axis=1)
        r0 = dom.radius
        x0 = np.asarray(dom.center)
    else:
        lo, hi = np.asarray(dom.lo), np.asarray(dom.hi)
        d = np.min(np.minimum(st.x_int - lo, hi - st.x_int), axis=1)
        r0 = 0.5 * float(np.linalg.norm(hi - lo))
        x0 = 0.5 * (lo + hi)
    s = c ** (1.0 / dom.n)
    r2 = np.einsum("ij,ij->i", st.x_int - x0, st.x_int - x0)
    return -0.6 * s * r0 * d + 0.25 * s * (r2 - r0 ** 2)


def solve_real_ma(domain: Domain, c: float, h: float, tol: float = 1e-8,
                  max_iter: int = 50, seed: str = "quadratic") -> GridPotential:
    """Damped Newton solve of det(D^2 phi) = c, phi = 0 on the boundary.

    `seed` selects the initial convex guess: "quadratic" or
    "boundary_distance".  Raises ConvergenceError on failure.
    """
    if c <= 0:
        raise GridError("Monge-Ampere constant c must be positive")
    st = Stencil(domain, h)
    if seed == "quadratic":
        u = _quadratic_seed(st, c)
    elif seed == "boundary_distance":
        u = _boundary_distance_seed(st, c)
    else:
        raise GridError(f"unknown seed {seed!r}")

    def residual_vec(uv):
        H = st.hessians(st.full_values(uv))
        return np.linalg.det(H) - c, H

    res, H = residual_vec(u)
    norm = float(np.max(np.abs(res)))
    # near square corners the seed's discrete Hessian can be indefinite at a
    # few nodes; convexity is enforced once first attained, not before
    have_pd = _all_pd(H)
    restarted = False
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations "
                f"(residual {norm:.3e})", residual=norm)
        J = _assemble_jacobian(st, H)
        delta = spla.spsolve(J.tocsr(), -res)
        step = 1.0
        accepted = False
        for _ in range(40):
            trial = u + step * delta
            tres, tH = residual_vec(trial)
            tnorm = float(np.max(np.abs(tres)))
            trial_pd = _all_pd(tH)
            if tnorm < norm and (trial_pd or not have_pd):
                u, res, H, norm = trial, tres, tH, tnorm
                have_pd = have_pd or trial_pd
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if not restarted:
                # damped restart from a freshly scaled convex seed
                u = 0.5 * (_quadratic_seed(st, c) + u)
                res, H = residual_vec(u)
                norm = float(np.max(np.abs(res)))
                restarted = True
            else:
                raise ConvergenceError(
                    "Newton stalled: convexity could not be maintained "
                    f"(residual {norm:.3e})", residual=norm)
        it += 1

    if not _all_pd(H):
        raise ConvergenceError("converged iterate lost discrete convexity",
                               residual=norm)
    values = np.zeros(int(np.prod(st.shape)))
    values[st.interior_flat] = u
    return GridPotential(domain=domain, h=h, values=values.reshape(st.shape))


def _assemble_jacobian(st: Stencil, H: np.ndarray) -> sp.coo_matrix:
    C = _cofactors(H)
    rows, cols, vals = [], [], []
    arange = np.arange(st.N)
    for (kind, j, k, _), (lm, lp, im, ip, gm, gp) in zip(st.directions, st.line_data):
        if kind == "axis":
            w = C[:, j, j]
        elif kind == "diag+":
            w = C[:, j, k]
        else:
            w = -C[:, j, k]
        # center
        rows.append(arange)
        cols.append(arange)
        vals.append(w * (-2.0 / (lm * lp)))
        for larr, iarr, other in ((lm, im, lp), (lp, ip, lm)):
            mask = iarr >= 0
            if np.any(mask):
                rows.append(arange[mask])
                cols.append(iarr[mask])
                vals.append(w[mask] * (2.0 / (larr[mask] * (larr[mask] + other[mask]))))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(st.N, st.N))


# -- residuals and pointwise queries ------------------------------------------

def hessian(phi: GridPotential, node) -> np.ndarray:
    """Discrete Hessian at an interior node (multi-index or coordinates)."""
    st = Stencil(phi.domain, phi.h)
    vflat = phi.values.ravel()
    if isinstance(node, (tuple, list, np.ndarray)) and \
            all(isinstance(v, (int, np.integer)) for v in node) and \
            _is_node_index(phi, node):
        flat = int(np.ravel_multi_index(tuple(int(v) for v in node), st.shape))
        k = st.unknown_of_flat[flat]
        if k < 0:
            raise GridError(f"node {tuple(node)} is not interior")
        return st.hessians(vflat)[k]
    k = st.find_node(node)
    return st.hessians(vflat)[k]


def _is_node_index(phi, node):
    return all(0 <= int(v) < s for v, s in zip(node, phi.shape)) and \
        all(abs(float(v) - int(v)) == 0 for v in node)


def real_ma_residual(phi: GridPotential, c: float) -> float:
    """sup-norm of det(D^2 phi) - c over interior nodes."""
    st = Stencil(phi.domain, phi.h)
    H = st.hessians(phi.values.ravel())
    return float(np.max(np.abs(np.linalg.det(H) - c)))


def complexified_ma_residual(phi: GridPotential, eta: GridPotential,
                             C: complex) -> float:
    """sup-norm of det(phi_jk + i eta_jk) - C over shared interior nodes."""
    if phi.domain != eta.domain or phi.h != eta.h:
        raise GridError("phi and eta must share a grid")
    st = Stencil(phi.domain, phi.h)
    Hp = st.hessians(phi.values.ravel())
    He = st.hessians(eta.values.ravel())
    return float(np.max(np.abs(np.linalg.det(Hp + 1j * He) - C)))


def convexity_ok(phi: GridPotential) -> bool:
    st = Stencil(phi.domain, phi.h)
    return _all_pd(st.hessians(phi.values.ravel()))


def linearize_bfield(beta: ExteriorForm, omega: ExteriorForm, n: int):
    """Least-deviation constant for beta ^ omega^{n-1} = c' omega^n.

    Returns (c', residual); exact for constant forms, so the residual is the
    defect of proportionality at top degree (zero by construction when both
    sides are constant multiples of the volume monomial).
    """
    if beta.degrees() - {2} or omega.degrees() - {2}:
        raise GridError("beta and omega must be constant 2-forms")
    top_n = top_coefficient(power(omega, n))
    if not top_n:
        raise GridError("non-Kahler reference form: omega^n is degenerate")
    top_b = top_coefficient(wedge(beta, power(omega, n - 1)))
    if isinstance(top_n, QC):
        cprime = top_b / top_n
        resid = top_b - cprime * top_n
        cre = Fraction(cprime.re) if cprime.im == 0 else complex(cprime)
        return cre, abs(complex(resid))
    cprime = top_b / top_n
    cre = cprime.real if abs(cprime.imag) < 1e-15 * (1 + abs(cprime)) else cprime
    return cre, abs(top_b - cprime * top_n)


# -- CSV I/O ------------------------------------------------------------------

def write_grid_csv(phi: GridPotential, path):
    """One node per row: multi-index, coordinates, value, validity sentinel."""
    path = Path(path)
    dom = phi.domain
    with path.open("w", newline="") as fh:
        extra = ""
        if dom.kind == "ball":
            extra = (",center=" + "|".join(repr(v) for v in dom.center)
                     + f",radius={dom.radius!r}")
        fh.write(f"# n={dom.n},h={phi.h!r},domain={dom.kind}"
                 f",lo={'|'.join(repr(v) for v in dom.lo)}"
                 f",hi={'|'.join(repr(v) for v in dom.hi)}{extra}\n")
        idx_names = ",".join("ijk"[: dom.n])
        x_names = ",".join(f"x{k + 1}" for k in range(dom.n))
        fh.write(f"{idx_names},{x_names},phi,valid\n")
        mask = phi.mask if phi.mask is not None else np.ones(phi.shape, dtype=bool)
        for idx in np.ndindex(phi.shape):
            x = phi.coords(idx)
            row = list(map(str, idx)) + [repr(float(v)) for v in x]
            row.append(repr(float(phi.values[idx])))
            row.append("1" if mask[idx] else "0")
            fh.write(",".join(row) + "\n")


def read_grid_csv(path) -> GridPotential:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise GridError("missing grid header line")
        meta = dict(item.split("=", 1) for item in header[1:].strip().split(","))
        n = int(meta["n"])
        h = float(meta["h"])
        lo = tuple(float(v) for v in meta["lo"].split("|"))
        hi = tuple(float(v) for v in meta["hi"].split("|"))
        if meta["domain"] == "ball":
            center = tuple(float(v) for v in meta["center"].split("|"))
            dom = Domain("ball", lo, hi, center=center, radius=float(meta["radius"]))
        else:
            dom = Domain("box", lo, hi)
        fh.readline()  # column names
        shape = make_grid(dom, h)
        values = np.zeros(shape)
        mask = np.zeros(shape, dtype=bool)
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            idx = tuple(int(v) for v in parts[:n])
            values[idx] = float(parts[2 * n])
            mask[idx] = parts[2 * n + 1] == "1"
        return GridPotential(domain=dom, h=h, values=values,
                             mask=None if mask.all() else mask)
