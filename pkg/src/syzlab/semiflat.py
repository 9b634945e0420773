"""Mirror pairs of semi-flat Calabi-Yau structures on torus fibrations.

A Hessian sample A = (phi_jk) at a base point determines the structures on
the fibration side M and, through the inverse Hessian, on the dual side W:

    g_M     = Sigma A_jk (dx dx + dy dy)      g_W with A^{-1} in the dual frame
    omega_M = Sigma A_jk dx^j ^ dy^k          omega_W likewise
    Omega_M = Prod (dx^j + i dy^j)            Omega_W = Prod (dx_j + i dy_j)

Everything here is pointwise linear algebra in the Hessian, evaluated either
exactly (Fraction entries) or in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exterior import (
    ExteriorForm,
    QC,
    pullback,
    power,
    top_coefficient,
    wedge,
)
from .legendre import dual_coordinates, duality_residuals, legendre_transform
from .ma_solver import GridError, GridPotential, hessian


def _is_exact_matrix(A) -> bool:
    return all(isinstance(v, (int, Fraction)) for row in A for v in row)


def exact_det(A) -> Fraction:
    """Determinant by fraction-free Gaussian elimination."""
    M = [[Fraction(v) for v in row] for row in A]
    m = len(M)
    det = Fraction(1)
    for col in range(m):
        piv = next((r for r in range(col, m) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        det *= M[col][col]
        for r in range(col + 1, m):
            f = M[r][col] / M[col][col]
            for c in range(col, m):
                M[r][c] -= f * M[col][c]
    return det


def exact_inverse(A):
    """Inverse of a square Fraction matrix by Gauss-Jordan elimination."""
    m = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(m)]
         for i, row in enumerate(A)]
    for col in range(m):
        piv = next((r for r in range(col, m) if M[r][col] != 0), None)
        if piv is None:
            raise GridError("singular Hessian sample")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[m:] for row in M]


@dataclass
class SemiflatStructure:
    """Pointwise semi-flat Calabi-Yau data on one side of the mirror pair."""

    side: str                  # "M" or "W"
    n: int
    at_point: tuple
    g: list                    # 2n x 2n, block diagonal (base, fiber)
    omega: ExteriorForm
    Omega: ExteriorForm
    beta: ExteriorForm | None = None

    def __post_init__(self):
        if self.side not in ("M", "W"):
            raise GridError("side must be 'M' or 'W'")
        if 2 not in self.omega.degrees() and not self.omega.is_zero():
            raise GridError("omega must have degree 2")
        if not top_coefficient(power(self.omega, self.n)):
            raise GridError("omega is degenerate")


def _block_diag(A):
    m = len(A)
    zero = Fraction(0) if _is_exact_matrix(A) else 0.0
    g = [[zero] * (2 * m) for _ in range(2 * m)]
    for j in range(m):
        for k in range(m):
            g[j][k] = A[j][k]
            g[m + j][m + k] = A[j][k]
    return g


def _check_pd(A):
    if _is_exact_matrix(A):
        m = len(A)
        for k in range(1, m + 1):
            if exact_det([row[:k] for row in A[:k]]) <= 0:
                raise GridError("Hessian sample is not positive definite")
    else:
        arr = np.asarray(A, dtype=float)
        if np.any(np.linalg.eigvalsh(0.5 * (arr + arr.T)) <= 0):
            raise GridError("Hessian sample is not positive definite")


def _holomorphic_volume(n: int, mode: str, fiber_dual: bool = False) -> ExteriorForm:
    """Prod_j (dx^j + i dy^j) as an exterior form."""
    i_unit = QC.i() if mode == "exact" else 1j
    form = ExteriorForm.scalar(n, 1 if mode == "exact" else 1.0, mode=mode,
                               fiber_dual=fiber_dual)
    for j in range(1, n + 1):
        dz = ExteriorForm.dx(n, j, mode=mode) \
            + ExteriorForm.dy(n, j, mode=mode, fiber_dual=fiber_dual).scale(i_unit)
        if fiber_dual:
            dz.fiber_dual = True
        form = wedge(form, dz)
    return form


def structure_from_hessian(A, side: str = "M", B=None,
                           at_point=()) -> SemiflatStructure:
    """Semi-flat structure at one point from the Hessian sample A = (phi_jk).

    Side M uses A directly; side W uses A^{-1} in the dual coframe.  B, when
    given, supplies the B-field two-form beta = Sigma B_jk dx^j ^ dy^k on M.
    """
    A = [list(row) for row in A]
    n = len(A)
    exact = _is_exact_matrix(A) and (B is None or _is_exact_matrix(B))
    mode = "exact" if exact else "double"
    _check_pd(A)
    if side == "W":
        if exact:
            A = exact_inverse(A)
        else:
            A = np.linalg.inv(np.asarray(A, dtype=float)).tolist()
    fiber_dual = side == "W"
    omega = ExteriorForm.from_matrix(n, A, mode=mode, fiber_dual=fiber_dual)
    Omega = _holomorphic_volume(n, mode, fiber_dual=fiber_dual)
    beta = None
    if B is not None:
        beta = ExteriorForm.from_matrix(n, B, mode=mode, fiber_dual=fiber_dual)
    return SemiflatStructure(side=side, n=n, at_point=tuple(at_point),
                             g=_block_diag(A), omega=omega, Omega=Omega,
                             beta=beta)


def build_M(phi: GridPotential, x, eta: GridPotential | None = None) -> SemiflatStructure:
    """M-side structure at base point x from grid potentials phi (and eta)."""
    A = hessian(phi, x).tolist()
    B = hessian(eta, x).tolist() if eta is not None else None
    return structure_from_hessian(A, side="M", B=B, at_point=tuple(x))


def build_W(phi: GridPotential, x, eta: GridPotential | None = None) -> SemiflatStructure:
    """W-side structure at the same base point, via the inverse Hessian."""
    A = hessian(phi, x).tolist()
    B = hessian(eta, x).tolist() if eta is not None else None
    return structure_from_hessian(A, side="W", B=B, at_point=tuple(x))


def cy_normalization_residual(S: SemiflatStructure):
    """Defect of Omega Omega-bar = (-1)^{n(n+1)/2} 2^n i^n omega^n / n!.

    Exactly zero whenever det of the Hessian block is 1.
    """
    n = S.n
    lhs = top_coefficient(wedge(S.Omega, S.Omega.conjugate()))
    top_w = top_coefficient(power(S.omega, n))
    sign = (-1) ** (n * (n + 1) // 2)
    fact = 1
    for j in range(2, n + 1):
        fact *= j
    if S.omega.mode == "exact":
        i_pow = (QC(1), QC.i(), QC(-1), QC(0, -1))[n % 4]
        const = QC(sign * 2 ** n) * i_pow / QC(fact)
        return lhs - const * top_w
    const = sign * 2 ** n * 1j ** n / fact
    return complex(lhs) - const * complex(top_w)


def gw_two_paths_residual(phi: GridPotential, psi: GridPotential) -> float:
    """Agreement of the two W-metric code paths at matched points.

    Path one reads the dual Hessian D^2 psi at the gradient image point; path
    two inverts the Hessian of phi.  Returns the sup-norm difference.
    """
    from scipy.spatial import cKDTree

    fwd = dual_coordinates(phi)
    dual = dual_coordinates(psi)
    tree = cKDTree(dual.x)
    _, j = tree.query(fwd.y)
    inv = np.linalg.inv(fwd.hessians)
    return float(np.max(np.abs(dual.hessians[j] - inv)))


def mirror_roundtrip(phi: GridPotential, h_dual: float | None = None) -> dict:
    """Apply the transform twice and compare with the original structure.

    Returns the involution residual (modulo affine shifts), the two-path
    W-metric agreement, and the determinant pairing defect across the pair.
    """
    if h_dual is None:
        h_dual = phi.h
    psi = legendre_transform(phi, h_dual)
    res = duality_residuals(phi, psi)
    return {
        "involution": res["involution"],
        "metric_two_paths": gw_two_paths_residual(phi, psi),
        "det_pairing": res["det_product"],
    }


def _zero_section_restriction(form: ExteriorForm):
    """Top coefficient of the pullback to the base torus (y = 0 section)."""
    n = form.n
    exact = form.mode == "exact"
    basis = []
    for j in range(n):
        row = [Fraction(0)] * (2 * n) if exact else [0.0] * (2 * n)
        row[j] = Fraction(1) if exact else 1.0
        basis.append(row)
    return top_coefficient(pullback(form, basis, n))


def bfield_mirror_check(A, B, theta: float, phi_angle: float) -> dict:
    """The three polarization equations on M and their images on W.

    Returns six residual magnitudes.  The mirror map swaps the roles of the
    complexified-symplectic equation and the holomorphic-volume equation, so
    `w_special` carries the image of `m_calibrated` and `w_calibrated` the
    image of `m_special`.
    """
    n = len(A)
    S_M = structure_from_hessian(A, side="M", B=B)
    S_W = structure_from_hessian(A, side="W")

    m_normalization = abs(complex(cy_normalization_residual(S_M)))
    omega_c = S_M.omega if S_M.beta is None else \
        S_M.omega + S_M.beta.scale(QC.i() if S_M.omega.mode == "exact" else 1j)
    top_c = complex(top_coefficient(power(omega_c, n)))
    m_calibrated = abs((np.exp(1j * theta) * top_c).imag)
    m_special = abs((np.exp(1j * phi_angle)
                     * complex(_zero_section_restriction(S_M.Omega))).imag)

    w_normalization = abs(complex(cy_normalization_residual(S_W)))
    # W complex coordinates dz_j = Sigma (A_jk + i B_jk) dx^k + i dy_j; on the
    # zero section the holomorphic volume restricts to det(A + iB) dx^1..dx^n
    theta_mat = np.asarray(A, dtype=float) + \
        (1j * np.asarray(B, dtype=float) if B is not None else 0.0)
    w_special = abs((np.exp(1j * theta) * np.linalg.det(theta_mat)).imag)
    # the mirror of the fixed complex structure of M is the canonical
    # complexified symplectic form on W, whose coefficient matrix is the identity
    identity = [[Fraction(int(j == k)) for k in range(n)] for j in range(n)]
    omega_w_c = ExteriorForm.from_matrix(n, identity, mode="exact",
                                         fiber_dual=True)
    top_wc = complex(top_coefficient(power(omega_w_c, n)))
    w_calibrated = abs((np.exp(1j * phi_angle) * top_wc).imag)

    return {
        "m_normalization": m_normalization,
        "m_calibrated": m_calibrated,
        "m_special": m_special,
        "w_normalization": w_normalization,
        "w_special": w_special,
        "w_calibrated": w_calibrated,
    }


def t_family(A, t, at_point=()) -> SemiflatStructure:
    """Structure of the degenerating family g_t at one point.

    g_t = Sigma A_jk ((1/t) dx dx + t dy dy); the symplectic form and the
    volume form do not depend on t.
    """
    if float(t) <= 0:
        raise GridError("family parameter t must be positive")
    A = [list(row) for row in A]
    n = len(A)
    exact = _is_exact_matrix(A) and isinstance(t, (int, Fraction))
    _check_pd(A)
    if exact:
        t = Fraction(t)
        zero = Fraction(0)
    else:
        t = float(t)
        zero = 0.0
    g = [[zero] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        for k in range(n):
            g[j][k] = A[j][k] / t
            g[n + j][n + k] = A[j][k] * t
    mode = "exact" if exact else "double"
    omega = ExteriorForm.from_matrix(n, A, mode=mode)
    Omega = _holomorphic_volume(n, mode)
    return SemiflatStructure(side="M", n=n, at_point=tuple(at_point), g=g,
                             omega=omega, Omega=Omega)


def rescaled_limit_report(A, t_list) -> list[dict]:
    """Degeneration table: volume invariance and fiber shrinking rates.

    For each t: det g_t minus det(A)^2 (identically zero), the sup-norm of
    the fiber block of t g_t (scales as t^2), the defect of the base block of
    t g_t against A (zero), and the fiber diameter scale sqrt(t).
    """
    A = [list(row) for row in A]
    n = len(A)
    exact = _is_exact_matrix(A) and all(isinstance(t, (int, Fraction))
                                        for t in t_list)
    detA = exact_det(A) if exact else float(np.linalg.det(np.asarray(A, float)))
    rows = []
    for t in t_list:
        S = t_family(A, t)
        if exact:
            det_gt = exact_det(S.g)
            vol_residual = det_gt - detA ** 2
            fiber = [[Fraction(t) * S.g[n + j][n + k] for k in range(n)]
                     for j in range(n)]
            fiber_norm = max(abs(v) for row in fiber for v in row)
            base_defect = max(abs(Fraction(t) * S.g[j][k] - Fraction(A[j][k]))
                              for j in range(n) for k in range(n))
        else:
            garr = np.asarray(S.g, dtype=float)
            det_gt = float(np.linalg.det(garr))
            vol_residual = det_gt - detA ** 2
            fiber_norm = float(t * np.max(np.abs(garr[n:, n:])))
            base_defect = float(np.max(np.abs(
                t * garr[:n, :n] - np.asarray(A, float))))
        rows.append({
            "t": t,
            "det_gt": det_gt,
            "volume_residual": vol_residual,
            "fiber_block_norm": fiber_norm,
            "base_block_defect": base_defect,
            "fiber_diameter_scale": float(t) ** 0.5,
        })
    return rows
