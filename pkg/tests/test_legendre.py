import numpy as np
import pytest

from syzlab.legendre import (
    GradientSamples,
    dual_coordinates,
    duality_residuals,
    legendre_transform,
)
from syzlab.ma_solver import Domain, GridError, GridPotential, Stencil, solve_real_ma


def grid_from_function(dom, h, f):
    st = Stencil(dom, h)
    axes = np.meshgrid(*[np.asarray(dom.lo)[k] + h * np.arange(st.shape[k])
                         for k in range(dom.n)], indexing="ij")
    return GridPotential(dom, h, np.asarray(f(*axes), dtype=float))


class TestDualCoordinates:
    def test_identity_map(self):
        dom = Domain.box((-1, -1), (1, 1))
        phi = grid_from_function(dom, 0.125, lambda x, y: 0.5 * (x**2 + y**2))
        s = dual_coordinates(phi)
        assert np.allclose(s.y, s.x, atol=1e-12)

    def test_1d_scaling(self):
        a = 3.0
        dom = Domain.box((-1.0,), (1.0,))
        phi = grid_from_function(dom, 0.0625, lambda x: 0.5 * a * x**2)
        s = dual_coordinates(phi)
        assert np.allclose(s.y, a * s.x, atol=1e-12)

    def test_disk_solution_image(self):
        phi = solve_real_ma(Domain.unit_disk(), 1.0, 1 / 16)
        s = dual_coordinates(phi)  # injectivity checked inside
        radii = np.linalg.norm(s.y, axis=1)
        # grad phi = x for the exact solution, so the image refills the disk
        assert radii.max() < 1.0
        assert np.allclose(s.y, s.x, atol=1e-9)

    def test_nonconvex_rejected(self):
        dom = Domain.box((-1.0,), (1.0,))
        phi = grid_from_function(dom, 0.125, lambda x: -0.5 * x**2)
        with pytest.raises(GridError):
            dual_coordinates(phi)

    def test_noninjective_rejected(self):
        dom = Domain.box((-1.0,), (1.0,))
        phi = grid_from_function(dom, 0.125, lambda x: np.zeros_like(x))
        with pytest.raises(GridError):
            dual_coordinates(phi)


class TestLegendreTransform:
    def test_self_dual_quadratic(self):
        dom = Domain.box((-1, -1), (1, 1))
        phi = grid_from_function(dom, 0.125, lambda x, y: 0.5 * (x**2 + y**2))
        psi = legendre_transform(phi, 0.125)
        exact = grid_from_function(psi.domain, psi.h,
                                   lambda x, y: 0.5 * (x**2 + y**2))
        valid = psi.mask if psi.mask is not None else np.ones(psi.shape, bool)
        assert np.max(np.abs((psi.values - exact.values)[valid])) < 1e-12

    def test_1d_closed_form(self):
        a = 2.0
        dom = Domain.box((-1.0,), (1.0,))
        phi = grid_from_function(dom, 0.03125, lambda x: 0.5 * a * x**2)
        psi = legendre_transform(phi, 0.0625)
        valid = psi.mask if psi.mask is not None else np.ones(psi.shape, bool)
        ys = psi.axes()[0]
        assert np.max(np.abs((psi.values - ys**2 / (2 * a))[valid])) < 1e-12

    def test_out_of_image_nodes_masked(self):
        phi = solve_real_ma(Domain.unit_disk(), 1.0, 1 / 16)
        box = Domain.box((-2.0, -2.0), (2.0, 2.0))
        psi = legendre_transform(phi, 0.25, box=box)
        assert psi.mask is not None
        corners = [psi.mask[0, 0], psi.mask[0, -1], psi.mask[-1, 0], psi.mask[-1, -1]]
        assert not any(corners)

    def test_dual_convexity(self):
        dom = Domain.box((-1.0,), (1.0,))
        phi = grid_from_function(dom, 0.03125,
                                 lambda x: 0.5 * x**2 + x**4 / 12)
        psi = legendre_transform(phi, 0.03125)
        dual_coordinates(psi)  # raises if the dual lost convexity


class TestDualityResiduals:
    def test_quadratic_exact(self):
        dom = Domain.box((-1, -1), (1, 1))
        phi = grid_from_function(dom, 0.125,
                                 lambda x, y: x**2 + 0.5 * y**2 + 0.25 * x * y)
        psi = legendre_transform(phi, 0.0625)
        res = duality_residuals(phi, psi)
        assert res["involution"] < 1e-12
        assert res["hessian_inverse"] < 1e-12
        assert res["det_product"] < 1e-12

    def test_disk_c1(self):
        phi = solve_real_ma(Domain.unit_disk(), 1.0, 1 / 32)
        psi = legendre_transform(phi, 1 / 32)
        res = duality_residuals(phi, psi)
        for v in res.values():
            assert v <= 5e-2

    def test_disk_c4_det_product(self):
        phi = solve_real_ma(Domain.unit_disk(), 4.0, 1 / 16)
        psi = legendre_transform(phi, 1 / 16)
        res = duality_residuals(phi, psi)
        # det D^2 phi = 4 and det D^2 psi = 1/4, product 1
        assert res["det_product"] <= 5e-2

    def test_nonquadratic_shrinks_with_h(self):
        dom = Domain.box((-1.0,), (1.0,))

        def f(x):
            return 0.5 * x**2 + x**4 / 12

        out = []
        for h in (1 / 16, 1 / 32, 1 / 64):
            phi = grid_from_function(dom, h, f)
            psi = legendre_transform(phi, h)
            out.append(duality_residuals(phi, psi))
        for key in ("involution", "hessian_inverse", "det_product"):
            assert out[2][key] < out[0][key]
