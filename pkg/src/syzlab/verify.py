"""Acceptance checks shared by the command line and the test suite.

Each criterion is one function returning a CriterionResult with a pass flag
and a details dictionary; run_all evaluates every criterion with one seed.
Checks whose target is an exact identity at rounding level accept either the
stated convergence order or residuals at the floor of double rounding.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import cycles, gvbps, legendre, ma_solver, semiflat, sl2actions
from .exterior import ExteriorForm, QC
from .ma_solver import Domain, GridPotential, Stencil

ROUNDING_FLOOR = 1e-10


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{tag}] {self.name}"


def _disk_solution(h: float):
    t0 = time.time()
    phi = ma_solver.solve_real_ma(Domain.unit_disk(), 1.0, h)
    elapsed = time.time() - t0
    return phi, elapsed


def _disk_error(phi: GridPotential) -> float:
    st = Stencil(phi.domain, phi.h)
    exact = (np.sum(st.x_int ** 2, axis=1) - 1.0) / 2.0
    return float(np.max(np.abs(phi.values.ravel()[st.interior_flat] - exact)))


def criterion_1() -> CriterionResult:
    """Disk solves at three grids: order at least 1.8 or rounding floor."""
    grids = (1 / 32, 1 / 64, 1 / 128)
    errors, residuals, times = [], [], []
    for h in grids:
        phi, elapsed = _disk_solution(h)
        errors.append(_disk_error(phi))
        residuals.append(ma_solver.real_ma_residual(phi, 1.0))
        times.append(elapsed)
    at_floor = all(e <= ROUNDING_FLOOR for e in errors)
    orders = [math.log2(errors[i] / errors[i + 1])
              if errors[i + 1] > 0 else float("inf")
              for i in range(len(errors) - 1)]
    ok_order = at_floor or all(o >= 1.8 for o in orders)
    ok = ok_order and residuals[-1] <= 1e-8 and max(times) < 30.0
    # wall-clock times stay out of the details so that repeated reports are
    # byte-identical; only the under-budget flag is recorded
    return CriterionResult(1, "Monge-Ampere exactness on the unit disk", ok, {
        "grids": list(grids), "max_errors": errors, "orders": orders,
        "at_rounding_floor": at_floor, "residuals": residuals,
        "under_time_budget": max(times) < 30.0})


def _quadratic_potential(A, h: float = 1 / 32) -> GridPotential:
    dom = Domain.box((-1.0, -1.0), (1.0, 1.0))
    shape = ma_solver.make_grid(dom, h)
    axes = [np.asarray(dom.lo)[k] + h * np.arange(shape[k]) for k in range(2)]
    X = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in X], axis=1)
    A = np.asarray(A, dtype=float)
    vals = 0.5 * np.einsum("ij,jk,ik->i", pts, A, pts)
    return GridPotential(domain=dom, h=h, values=vals.reshape(shape))


def criterion_2() -> CriterionResult:
    """Legendre duality residuals on the disk solution and on quadratics."""
    out = {}
    for h in (1 / 32, 1 / 64):
        phi, _ = _disk_solution(h)
        psi = legendre.legendre_transform(phi, h)
        out[h] = legendre.duality_residuals(phi, psi)
    coarse, fine = out[1 / 32], out[1 / 64]
    ok_bound = all(v <= 5e-2 for v in fine.values())
    ok_shrink = all(fine[k] <= coarse[k] or fine[k] <= ROUNDING_FLOOR
                    for k in fine)
    quad = _quadratic_potential([[2.0, 0.5], [0.5, 1.0]])
    psi_q = legendre.legendre_transform(quad, quad.h)
    quad_res = legendre.duality_residuals(quad, psi_q)
    ok_quad = all(v <= 1e-12 for v in quad_res.values())
    return CriterionResult(2, "Legendre duality residuals",
                           ok_bound and ok_shrink and ok_quad, {
        "disk_h32": coarse, "disk_h64": fine, "quadratic": quad_res})


def criterion_3() -> CriterionResult:
    """Mirror involution on the disk; two-path W metric on quadratics."""
    phi, _ = _disk_solution(1 / 64)
    trip = semiflat.mirror_roundtrip(phi)
    quad = _quadratic_potential([[3.0, 1.0], [1.0, 2.0]])
    psi_q = legendre.legendre_transform(quad, quad.h)
    two_paths = semiflat.gw_two_paths_residual(quad, psi_q)
    ok = trip["involution"] <= 5e-2 and two_paths <= 1e-8
    return CriterionResult(3, "mirror transform inversion property", ok, {
        "roundtrip": trip, "quadratic_two_paths": two_paths})


def _random_unimodular_pd(rng: random.Random, n: int):
    """Exact positive-definite Fraction matrix with determinant one."""
    L = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        L[j][j] = Fraction(1)
        for k in range(j):
            L[j][k] = Fraction(rng.randrange(-3, 4), rng.randrange(1, 5))
    d = [Fraction(rng.randrange(1, 6), rng.randrange(1, 6))
         for _ in range(n - 1)]
    prod = Fraction(1)
    for v in d:
        prod *= v
    d.append(1 / prod)
    A = [[sum(L[i][a] * d[a] * L[j][a] for a in range(n)) for j in range(n)]
         for i in range(n)]
    return A


def criterion_4(seed: int) -> CriterionResult:
    """Exact Calabi-Yau normalization for 500 unimodular Hessians."""
    rng = random.Random(seed)
    trials = 0
    worst = None
    ok = True
    while trials < 500:
        n = rng.choice((1, 2, 3))
        A = _random_unimodular_pd(rng, n)
        S = semiflat.structure_from_hessian(A, side="M")
        r = semiflat.cy_normalization_residual(S)
        if r != QC(0):
            ok = False
            worst = (n, [[str(v) for v in row] for row in A], str(r))
        trials += 1
    return CriterionResult(4, "Calabi-Yau normalization exact", ok, {
        "trials": trials, "first_failure": worst})


def criterion_5() -> CriterionResult:
    """t-family: exact volume invariance and quadratic fiber shrinking."""
    A = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(1)]]
    ts = [Fraction(1, 2 ** k) for k in range(6)]
    rows = semiflat.rescaled_limit_report(A, ts)
    vol_ok = all(r["volume_residual"] == 0 for r in rows)
    ratios = [rows[i]["fiber_block_norm"] / rows[i + 1]["fiber_block_norm"]
              for i in range(len(rows) - 1)]
    ratio_ok = all(abs(Fraction(r) - 4) <= Fraction(1, 10 ** 9)
                   for r in ratios)
    return CriterionResult(5, "degenerating family volume and fiber rates",
                           vol_ok and ratio_ok, {
        "volume_residuals": [str(r["volume_residual"]) for r in rows],
        "fiber_ratios": [str(r) for r in ratios]})


def criterion_6(seed: int) -> CriterionResult:
    """Multiple cover formula forward and inverted, plus 100 round trips."""
    b = gvbps.BpsTable(20, 0, {(1, 0): 1})
    N = gvbps.gw_from_bps(b, 20, 0)
    cover_ok = all(N.get(d, 0) == Fraction(1, d ** 3) for d in range(1, 21))
    unit_ok = gvbps.bps_from_gw(N).entries == {(1, 0): Fraction(1)}
    rng = random.Random(seed)
    trips = 0
    trip_ok = True
    while trips < 100:
        D = rng.randrange(2, 9)
        G = rng.randrange(0, 5)
        entries = {(rng.randrange(1, D + 1), rng.randrange(0, G + 1)):
                   rng.randrange(-9, 10)
                   for _ in range(rng.randrange(1, 8))}
        table = gvbps.BpsTable(D, G, entries)
        if gvbps.bps_from_gw(gvbps.gw_from_bps(table, D, G)) != table:
            trip_ok = False
        trips += 1
    return CriterionResult(6, "multiple cover formula and round trips",
                           cover_ok and unit_ok and trip_ok, {
        "cover_ok": cover_ok, "unit_inversion_ok": unit_ok,
        "round_trips": trips, "round_trips_ok": trip_ok})


def criterion_7() -> CriterionResult:
    """Yukawa q-coefficients from the recorded genus-0 invariants."""
    c = gvbps.yukawa_A(5, [2875, 609250, 317206375], 3)
    want = [5, 2875, 4876875, 8564575000]
    ok = [int(v) for v in c] == want and all(v.denominator == 1 for v in c)
    return CriterionResult(7, "Yukawa coupling series assembly", ok, {
        "coefficients": [str(v) for v in c], "expected": want})


def criterion_8() -> CriterionResult:
    """Exact sl(2) x sl(2) commutators, hard Lefschetz, intertwining."""
    details = {}
    ok = True
    for n in (1, 2, 3):
        omega = ExteriorForm(n, {(j, n + j): QC(1) for j in range(n)},
                             mode="exact")
        omega_w = ExteriorForm(n, {(j, n + j): QC(1) for j in range(n)},
                               mode="exact", fiber_dual=True)
        L, A, H = sl2actions.lefschetz_triple(omega, n)
        L2, A2, H2 = sl2actions.mirror_sl2(omega_w, n)
        report = sl2actions.so4_check(L, A, H, L2, A2, H2)
        comm_ok = all(v == 0 for v in report.values())
        ranks = sl2actions.lefschetz_bijectivity(L, n)
        hl_ok = all(r == src == dst for r, src, dst in ranks.values())
        F = sl2actions.fourier_matrix(n)
        L2_plain, _, _ = sl2actions.mirror_sl2(omega, n)
        twine_ok = sl2actions.mat_mul(F, L2_plain.matrix) == \
            sl2actions.mat_mul(L.matrix, F)
        details[f"n={n}"] = {"commutators_zero": comm_ok,
                             "hard_lefschetz_full_rank": hl_ok,
                             "fourier_intertwining": twine_ok}
        ok = ok and comm_ok and hl_ok and twine_ok
    return CriterionResult(8, "sl(2) x sl(2) exact commutation", ok, details)


def criterion_9() -> CriterionResult:
    """BPS extraction from the forward tensor-power decomposition."""
    details = {}
    ok = True
    for g in range(7):
        pairs = {(j, 0): m
                 for j, m in gvbps.tensor_power_decompose(g).items()}
        got = gvbps.bps_from_sl2(gvbps.Sl2Table(pairs))
        good = got == {g: 1}
        details[f"g={g}"] = {str(k): str(v) for k, v in got.items()}
        ok = ok and good
    return CriterionResult(9, "BPS numbers from sl(2) content", ok, details)


def criterion_10(seed: int) -> CriterionResult:
    """Phase solving on 1000 random specs; product-fibration fibers."""
    rng = random.Random(seed)
    count = 0
    worst = 0.0
    while count < 1000:
        n = rng.randrange(1, 4)

        def rand_two_form():
            terms = {}
            for _ in range(rng.randrange(1, 2 * n + 2)):
                pair = tuple(sorted(rng.sample(range(2 * n), 2)))
                terms[pair] = terms.get(pair, 0.0) + rng.uniform(-2, 2)
            return ExteriorForm(n, terms)

        omega = rand_two_form()
        F = rand_two_form().scale(1j)
        beta = rand_two_form() if rng.random() < 0.5 else None
        spec = cycles.CycleSpec("B", n, omega, beta=beta, F=F)
        try:
            theta = cycles.solve_phase(spec)
        except cycles.CycleError:
            continue
        solved = cycles.CycleSpec("B", n, omega, beta=beta, F=F, theta=theta)
        worst = max(worst, cycles.dhym_residual(solved))
        count += 1
    phase_ok = worst <= 1e-12

    fiber_ok = True
    for n in (1, 2, 3):
        basis = [[float(i == j) for i in range(2 * n)] for j in range(n)]
        omega = ExteriorForm(n, {(j, n + j): 1.0 for j in range(n)})
        spec = cycles.CycleSpec("A", n, omega, theta=0.0, subtorus=basis)
        Omega = ExteriorForm.scalar(n, 1.0)
        for j in range(n):
            Omega = cycles.wedge(Omega, ExteriorForm(n, {(j,): 1.0,
                                                         (n + j,): 1j}))
        res = cycles.a_cycle_residuals(spec, Omega)
        fiber_ok = fiber_ok and all(v == 0.0 for v in res.values())
    return CriterionResult(10, "cycle phase solving and fibration fibers",
                           phase_ok and fiber_ok, {
        "random_specs": count, "worst_residual": worst,
        "fibers_all_zero": fiber_ok})


def criterion_11(seed: int) -> CriterionResult:
    """Byte-identical reports for the seeded criteria run twice.

    The end-to-end form of this check (two full command-line verification
    runs compared byte for byte) lives in the acceptance test; here the
    seed-dependent criteria are replayed in process.
    """
    def payload():
        results = [criterion_4(seed), criterion_6(seed), criterion_10(seed)]
        return json.dumps([r.__dict__ for r in results],
                          sort_keys=True, default=str).encode()

    ok = payload() == payload()
    return CriterionResult(11, "deterministic seeded reports", ok, {
        "seed": seed})


def run_all(seed: int = 0) -> list[CriterionResult]:
    return [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(seed),
        criterion_5(),
        criterion_6(seed),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(seed),
        criterion_11(seed),
    ]


def report_json(results: list[CriterionResult]) -> str:
    payload = [{"number": r.number, "name": r.name, "passed": r.passed,
                "details": r.details} for r in results]
    return json.dumps({"criteria": payload,
                       "all_passed": all(r.passed for r in results)},
                      sort_keys=True, indent=2, default=str)
