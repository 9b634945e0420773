"""Command line driver: batch experiments, file artifacts, verification.

Every subcommand is a thin adapter around the library modules: it loads a
JSON configuration, calls the library, and writes CSV/JSON (and SVG plots
for the curve-shaped outputs) into the output directory.

Exit codes: 0 ok, 2 validation error, 3 convergence failure, 4 integrality
failure.  Failures emit a machine-readable error JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import gvbps, legendre as legendre_mod, semiflat, sl2actions, verify
from .cycles import CycleError, CycleSpec, a_cycle_residuals, dhym_residual, \
    solve_phase
from .exterior import DimensionError, ExteriorForm, PrecisionError, QC, wedge
from .gvbps import BpsTable, QTSeries, Sl2Table, TruncationError
from .ma_solver import ConvergenceError, Domain, GridError, read_grid_csv, \
    real_ma_residual, solve_real_ma, write_grid_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_INTEGRALITY = 4


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise GridError("config must be a JSON object")
    return cfg


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(outdir: str, name: str, payload) -> str:
    path = os.path.join(outdir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")
    return path


def _write_csv(outdir: str, name: str, header, rows) -> str:
    path = os.path.join(outdir, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _domain_from_config(cfg: dict) -> Domain:
    spec = cfg.get("domain", {"kind": "disk"})
    kind = spec.get("kind", "disk")
    if kind == "disk":
        return Domain.unit_disk()
    if kind == "ball":
        return Domain.ball(spec["center"], spec["radius"])
    if kind == "box":
        return Domain.box(spec["lo"], spec["hi"])
    raise GridError(f"unknown domain kind {kind!r}")


def _rational(v) -> Fraction:
    return Fraction(str(v))


def _solve_from_config(cfg: dict, h: float):
    if "grid_csv" in cfg:
        return read_grid_csv(cfg["grid_csv"])
    domain = _domain_from_config(cfg)
    return solve_real_ma(domain, float(cfg.get("c", 1.0)), h,
                         tol=float(cfg.get("tol", 1e-8)),
                         seed=cfg.get("seed_guess", "quadratic"))


def cmd_ma_solve(args, cfg: dict) -> int:
    outdir = _outdir(args)
    h_list = [float(h) for h in cfg.get("h_list", [cfg.get("h", 1 / 64)])]
    c = float(cfg.get("c", 1.0))
    solves = []
    for i, h in enumerate(h_list):
        phi = _solve_from_config(cfg, h)
        name = f"solution_{i}.csv" if len(h_list) > 1 else "solution.csv"
        write_grid_csv(phi, os.path.join(outdir, name))
        solves.append({"h": h, "grid": name,
                       "residual": real_ma_residual(phi, c)})
    _write_json(outdir, "report.json", {"command": "ma-solve", "c": c,
                                        "solves": solves})
    if len(solves) > 1:
        from .plots import line_plot

        line_plot(os.path.join(outdir, "convergence.svg"),
                  [s["h"] for s in solves],
                  {"residual": [s["residual"] for s in solves]},
                  "Monge-Ampere residual vs grid spacing", "h", "residual",
                  logx=True, logy=True)
    return EXIT_OK


def cmd_legendre(args, cfg: dict) -> int:
    outdir = _outdir(args)
    h = float(cfg.get("h", 1 / 64))
    phi = _solve_from_config(cfg, h)
    h_dual = float(cfg.get("h_dual", h))
    psi = legendre_mod.legendre_transform(phi, h_dual)
    write_grid_csv(psi, os.path.join(outdir, "dual.csv"))
    res = legendre_mod.duality_residuals(phi, psi)
    _write_json(outdir, "report.json", {"command": "legendre",
                                        "h": h, "h_dual": h_dual,
                                        "duality_residuals": res})
    return EXIT_OK


def cmd_mirror(args, cfg: dict) -> int:
    outdir = _outdir(args)
    h = float(cfg.get("h", 1 / 64))
    phi = _solve_from_config(cfg, h)
    trip = semiflat.mirror_roundtrip(phi, cfg.get("h_dual"))
    _write_json(outdir, "report.json", {"command": "mirror", "h": h,
                                        "roundtrip": trip})
    return EXIT_OK


def cmd_tfamily(args, cfg: dict) -> int:
    outdir = _outdir(args)
    A = [[_rational(v) for v in row] for row in cfg.get(
        "A", [["2", "1"], ["1", "1"]])]
    t_list = [_rational(t) for t in cfg.get(
        "t_list", ["1", "1/2", "1/4", "1/8", "1/16"])]
    rows = semiflat.rescaled_limit_report(A, t_list)
    _write_csv(outdir, "tfamily.csv",
               ["t", "det_gt", "volume_residual", "fiber_block_norm",
                "base_block_defect", "fiber_diameter_scale"],
               [[str(r["t"]), str(r["det_gt"]), str(r["volume_residual"]),
                 str(r["fiber_block_norm"]), str(r["base_block_defect"]),
                 r["fiber_diameter_scale"]] for r in rows])
    _write_json(outdir, "report.json", {"command": "tfamily", "rows": rows})
    from .plots import line_plot

    line_plot(os.path.join(outdir, "decay.svg"),
              [float(r["t"]) for r in rows],
              {"fiber block norm": [float(r["fiber_block_norm"])
                                    for r in rows]},
              "Fiber shrinking along the degenerating family", "t",
              "sup-norm of the fiber block of t g_t", logx=True, logy=True)
    return EXIT_OK


def cmd_sl2(args, cfg: dict) -> int:
    outdir = _outdir(args)
    n = int(cfg.get("n", 2))
    if n < 1:
        raise DimensionError("n must be at least 1")
    omega = ExteriorForm(n, {(j, n + j): QC(1) for j in range(n)},
                         mode="exact")
    omega_w = ExteriorForm(n, {(j, n + j): QC(1) for j in range(n)},
                           mode="exact", fiber_dual=True)
    L, A, H = sl2actions.lefschetz_triple(omega, n)
    L2, A2, H2 = sl2actions.mirror_sl2(omega_w, n)
    report = sl2actions.so4_check(L, A, H, L2, A2, H2)
    rows = sl2actions.weight_table(H, H2)
    _write_csv(outdir, "weights.csv",
               ["weight_1", "weight_2", "multiplicity"],
               [[r["weight_1"], r["weight_2"], r["multiplicity"]]
                for r in rows])
    _write_json(outdir, "report.json", {
        "command": "sl2", "n": n,
        "commutator_norms": {k: str(v) for k, v in report.items()},
        "weights": rows})
    return EXIT_OK


def _parse_bps(cfg: dict) -> BpsTable:
    entries = {}
    for key, v in cfg.get("entries", {}).items():
        d, g = (int(p) for p in key.split(","))
        entries[(d, g)] = _rational(v)
    return BpsTable(int(cfg.get("D", 10)), int(cfg.get("G", 0)), entries)


def _parse_series(cfg: dict) -> QTSeries:
    coeffs = {}
    for key, v in cfg.get("coefficients", {}).items():
        d, r = (int(p) for p in key.split(","))
        coeffs[(d, r)] = _rational(v)
    return QTSeries(int(cfg.get("D", 10)), int(cfg.get("R", 0)), coeffs)


def cmd_gv(args, cfg: dict) -> int:
    outdir = _outdir(args)
    if args.mode == "forward":
        b = _parse_bps(cfg)
        D = int(cfg.get("D", b.D))
        R = int(cfg.get("R", b.G))
        N = gvbps.gw_from_bps(b, D, R)
        rows = [[d, r, str(v)] for (d, r), v in
                sorted(N.coefficients.items())]
        _write_csv(outdir, "gw_series.csv", ["d", "r", "N"], rows)
        _write_json(outdir, "report.json", {
            "command": "gv forward", "D": D, "R": R,
            "coefficients": {f"{d},{r}": str(v)
                             for (d, r), v in sorted(N.coefficients.items())}})
        return EXIT_OK
    if args.mode == "invert":
        N = _parse_series(cfg)
        b = gvbps.bps_from_gw(N)
        check = gvbps.integrality_check(b)
        rows = [[d, g, str(v)] for (d, g), v in sorted(b.entries.items())]
        _write_csv(outdir, "bps_table.csv", ["d", "g", "n"], rows)
        _write_json(outdir, "report.json", {
            "command": "gv invert",
            "entries": {f"{d},{g}": str(v)
                        for (d, g), v in sorted(b.entries.items())},
            "integral": check["integral"],
            "violations": {f"{d},{g}": str(v)
                           for (d, g), v in sorted(check["violations"].items())}})
        return EXIT_OK
    # mode == "check"
    b = _parse_bps(cfg)
    check = gvbps.integrality_check(b)
    _write_json(outdir, "report.json", {
        "command": "gv check", "integral": check["integral"],
        "violations": {f"{d},{g}": str(v)
                       for (d, g), v in sorted(check["violations"].items())}})
    return EXIT_OK if check["integral"] else EXIT_INTEGRALITY


def cmd_yukawa(args, cfg: dict) -> int:
    outdir = _outdir(args)
    classical = _rational(cfg.get("classical", 5))
    N0 = [_rational(v) for v in cfg.get(
        "N0", [2875, 609250, 317206375])]
    D = int(cfg.get("D", len(N0)))
    coeffs = gvbps.yukawa_A(classical, N0, D)
    _write_csv(outdir, "yukawa.csv", ["m", "c_m"],
               [[m, str(c)] for m, c in enumerate(coeffs)])
    _write_json(outdir, "report.json", {
        "command": "yukawa",
        "coefficients": [str(c) for c in coeffs]})
    from .plots import line_plot

    line_plot(os.path.join(outdir, "series.svg"),
              list(range(1, D + 1)),
              {"c_m": [float(c) for c in coeffs[1:]]},
              "Yukawa coupling q-coefficients", "m", "c_m", logy=True)
    return EXIT_OK


def _cycle_from_json(spec: dict, mode: str) -> tuple:
    kind = spec["kind"]
    m = int(spec["m"])
    n = int(spec.get("n", m))

    def form(key):
        if key not in spec or spec[key] is None:
            return None
        return ExteriorForm.from_text(n, spec[key], mode=mode)

    omega = form("omega")
    if omega is None:
        raise CycleError("cycle spec needs an omega form")
    c = CycleSpec(kind, m, omega, beta=form("beta"), F=form("F"),
                  theta=spec.get("theta"),
                  subtorus=spec.get("subtorus"))
    Omega = form("Omega")
    if Omega is None and kind == "A":
        Omega = ExteriorForm.scalar(n, 1 if mode == "exact" else 1.0,
                                    mode=mode)
        i_unit = QC.i() if mode == "exact" else 1j
        for j in range(n):
            dz = ExteriorForm.dx(n, j + 1, mode=mode) + \
                ExteriorForm.dy(n, j + 1, mode=mode).scale(i_unit)
            Omega = wedge(Omega, dz)
    return c, Omega


def cmd_cycle(args, cfg: dict) -> int:
    outdir = _outdir(args)
    with open(args.spec) as fh:
        spec = json.load(fh)
    c, Omega = _cycle_from_json(spec, args.precision)
    if c.kind == "B":
        theta = c.theta if c.theta is not None else solve_phase(c)
        solved = CycleSpec("B", c.m, c.omega, beta=c.beta, F=c.F, theta=theta)
        payload = {"command": "cycle check", "kind": "B", "theta": theta,
                   "dhym_residual": dhym_residual(solved)}
    else:
        payload = {"command": "cycle check", "kind": "A",
                   "residuals": a_cycle_residuals(c, Omega)}
    _write_json(outdir, "report.json", payload)
    return EXIT_OK


def cmd_verify_all(args, cfg: dict) -> int:
    outdir = _outdir(args)
    results = verify.run_all(args.seed)
    table = "\n".join(r.line() for r in results)
    print(table)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(verify.report_json(results))
        fh.write("\n")
    with open(os.path.join(outdir, "summary.txt"), "w") as fh:
        fh.write(table + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONVERGENCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syzlab",
        description="Computational laboratory for semi-flat mirror symmetry")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", help="output directory (default: cwd)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized drivers")
    parser.add_argument("--precision", choices=("exact", "double"),
                        default="double")
    parser.add_argument("--threads", type=int, default=1,
                        help="thread budget passed to numeric backends")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ma-solve", help="solve the real Monge-Ampere equation")
    sub.add_parser("legendre", help="Legendre transform of a solved potential")
    sub.add_parser("mirror", help="mirror transform round trip residuals")
    sub.add_parser("tfamily", help="degenerating metric family report")
    sub.add_parser("sl2", help="sl(2) x sl(2) commutator and weight report")
    gv = sub.add_parser("gv", help="BPS / Gromov-Witten conversions")
    gv.add_argument("mode", choices=("forward", "invert", "check"))
    sub.add_parser("yukawa", help="Yukawa coupling series assembly")
    cycle = sub.add_parser("cycle", help="supersymmetric cycle residuals")
    cycle.add_argument("action", choices=("check",))
    cycle.add_argument("--spec", required=True,
                       help="JSON file with the cycle data")
    sub.add_parser("verify-all", help="run the full acceptance suite")
    return parser


_HANDLERS = {
    "ma-solve": cmd_ma_solve,
    "legendre": cmd_legendre,
    "mirror": cmd_mirror,
    "tfamily": cmd_tfamily,
    "sl2": cmd_sl2,
    "gv": cmd_gv,
    "yukawa": cmd_yukawa,
    "cycle": cmd_cycle,
    "verify-all": cmd_verify_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(args.threads))
    try:
        cfg = _load_config(args.config)
        return _HANDLERS[args.command](args, cfg)
    except ConvergenceError as exc:
        _emit_error("convergence", exc)
        return EXIT_CONVERGENCE
    except (GridError, CycleError, DimensionError, PrecisionError,
            TruncationError, KeyError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        _emit_error("validation", exc)
        return EXIT_VALIDATION


def _emit_error(kind: str, exc: Exception) -> None:
    print(json.dumps({"error": {"kind": kind,
                                "type": type(exc).__name__,
                                "message": str(exc)}}, sort_keys=True),
          file=sys.stderr)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
