"""Discrete Legendre transformation of convex grid potentials.

psi(y) = sup_x (<x, y> - phi(x)), evaluated by picking the sample whose
discrete gradient is closest to y and applying one local quadratic
correction.  On the gradient image of a strictly convex smooth potential
this is second-order accurate; dual nodes outside the image are masked,
never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .ma_solver import Domain, GridError, GridPotential, Stencil, _all_pd


@dataclass
class GradientSamples:
    """Matched samples of a convex potential and its gradient map.

    One row per usable interior node: base point `x`, dual point
    `y = grad phi(x)`, potential value, gradient (= y) and discrete Hessian.
    """

    x: np.ndarray          # (N, n)
    y: np.ndarray          # (N, n)
    values: np.ndarray     # (N,)
    hessians: np.ndarray   # (N, n, n)

    @property
    def n(self) -> int:
        return self.x.shape[1]


def dual_coordinates(phi: GridPotential) -> GradientSamples:
    """Gradient-map samples y_j = d phi / d x^j at the interior nodes.

    Raises GridError if the discrete Hessian is not positive definite or the
    sampled map is not injective.
    """
    st = Stencil(phi.domain, phi.h)
    vflat = phi.values.ravel()
    keep = np.ones(st.N, dtype=bool)
    if phi.mask is not None:
        keep = _fully_valid(st, phi.mask)
        if not np.any(keep):
            raise GridError("no interior node has a fully valid stencil")
    H = st.hessians(vflat)[keep]
    if not _all_pd(H):
        raise GridError("potential is not discretely convex; "
                        "gradient map would not be injective")
    y = st.gradients(vflat)[keep]
    _check_injective(y, phi.h)
    return GradientSamples(x=st.x_int[keep], y=y,
                           values=vflat[st.interior_flat][keep], hessians=H)


def _check_injective(y: np.ndarray, h: float) -> None:
    span = float(np.max(np.ptp(y, axis=0))) or 1.0
    tol = 1e-9 * max(span, h)
    key = np.round(y / tol).astype(np.int64)
    if len(np.unique(key, axis=0)) < len(key):
        raise GridError("gradient map is not injective on the samples")


def _fully_valid(st: Stencil, mask: np.ndarray) -> np.ndarray:
    """Interior nodes whose every stencil neighbor carries valid data."""
    mflat = mask.ravel()
    ok = mflat[st.interior_flat].copy()
    for lm, lp, im, ip, gm, gp in st.line_data:
        for garr in (gm, gp):
            ok &= (garr < 0) | mflat[np.maximum(garr, 0)]
    return ok


def _conjugate(samples: GradientSamples, queries: np.ndarray):
    """Convex conjugate of the sampled potential at query points.

    Returns (values, step) where `step` is the sup-norm of the quadratic
    refinement displacement; a large step flags a query outside the sampled
    gradient image.
    """
    tree = cKDTree(samples.y)
    _, idx = tree.query(queries)
    xs = samples.x[idx]
    r = queries - samples.y[idx]
    delta = np.linalg.solve(samples.hessians[idx], r[..., None])[..., 0]
    vals = np.einsum("ij,ij->i", xs, queries) - samples.values[idx] \
        + 0.5 * np.einsum("ij,ij->i", r, delta)
    return vals, np.max(np.abs(delta), axis=1)


def legendre_transform(phi: GridPotential, h_dual: float,
                       box: Domain | None = None) -> GridPotential:
    """Dual potential psi on a box grid covering the gradient image.

    The default box bounds the gradient samples, with edges snapped to
    multiples of h_dual.  Nodes outside the image (refinement displacement
    beyond one source cell) are masked.
    """
    samples = dual_coordinates(phi)
    if box is None:
        lo = np.floor(samples.y.min(axis=0) / h_dual) * h_dual
        hi = np.ceil(samples.y.max(axis=0) / h_dual) * h_dual
        hi = np.where(hi > lo, hi, lo + h_dual)
        box = Domain.box(lo, hi)
    st = Stencil(box, h_dual)
    shape = st.shape
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    pts = np.asarray(box.lo) + h_dual * idx
    vals, step = _conjugate(samples, pts)
    valid = step <= phi.h
    values = np.where(valid, vals, 0.0).reshape(shape)
    mask = valid.reshape(shape)
    return GridPotential(domain=box, h=h_dual, values=values,
                         mask=None if mask.all() else mask)


def duality_residuals(phi: GridPotential, psi: GridPotential) -> dict:
    """Sup-norm defects of the three Legendre duality identities.

    involution: double transform against phi, modulo the best affine fit
    (the transform is only defined up to affine shifts).
    hessian_inverse: D^2 psi at the dual point times D^2 phi minus identity.
    det_product: det D^2 phi times det D^2 psi at matched points minus 1.
    """
    fwd = dual_coordinates(phi)
    dual = dual_coordinates(psi)

    # match each base sample to the dual sample nearest its gradient point
    tree = cKDTree(dual.x)
    _, j = tree.query(fwd.y)
    prod = np.einsum("ijk,ikl->ijl", dual.hessians[j], fwd.hessians)
    eye = np.eye(fwd.n)
    hessian_inverse = float(np.max(np.abs(prod - eye)))
    det_product = float(np.max(np.abs(
        np.linalg.det(fwd.hessians) * np.linalg.det(dual.hessians[j]) - 1.0)))

    back, step = _conjugate(dual, fwd.x)
    ok = step <= psi.h
    if not np.any(ok):
        raise GridError("no base node maps back inside the dual image")
    diff = back[ok] - fwd.values[ok]
    A = np.hstack([np.ones((int(ok.sum()), 1)), fwd.x[ok]])
    coef, *_ = np.linalg.lstsq(A, diff, rcond=None)
    involution = float(np.max(np.abs(diff - A @ coef)))
    return {"involution": involution, "hessian_inverse": hessian_inverse,
            "det_product": det_product}
