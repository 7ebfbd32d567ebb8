"""Batch front door: `hodgevar <command> --scenario <file> --out <dir>`.

One scenario file per run; outputs are CSV/JSON plus a run manifest with the
scenario hash, seed and versions.  Grid rows are processed by a parallel map
with deterministic output ordering; per-row numeric domain errors surface as
error codes in the row, never abort the whole grid.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import DomainError, IllConditionedError, ScenarioError
from .hodgemap import (alpha0_weight2, beta_coefficients, extension_residual,
                       membership_residual, operator_norm_A, solve_hodge_map)
from .kuranishi import maurer_cartan_residual, obstruction, sample_base, solve_phi
from .locus import locus_generators, locus_membership, locus_tangent_space, vhc_check
from .model import validate
from .period import (evaluate_and_check_purity, neumann_consistency_residual,
                     period_blocks, strengthened_degree_residual,
                     transversality_residual)
from .scenario import COMMANDS, Scenario, load_scenario, parse_scenario
from .approx import green_rank_weight2, nontriviality_h20_one, pp_criterion, rationality_scan
from .cone import (HermitianMetricModel, deformed_metric, extend_kahler_class,
                   stability_radii, sup_operator_norm)
from .torus import rational_structure


# ---------------------------------------------------------------------------
# deterministic output helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            raise ValueError("non-finite numeric in output row")
        return repr(x)
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _point_cols(num_params: int) -> List[str]:
    cols = []
    for mu in range(num_params):
        cols += [f"t{mu}_re", f"t{mu}_im"]
    return cols


def _point_row(t: np.ndarray) -> List[float]:
    out: List[float] = []
    for z in np.asarray(t, dtype=complex):
        out += [float(z.real), float(z.imag)]
    return out


def parallel_map(fn: Callable, items: Sequence, threads: int) -> List:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _manifest(command: str, scenario_path: Optional[str], seed: int,
              threads: int) -> dict:
    digest = None
    if scenario_path is not None:
        digest = hashlib.sha256(Path(scenario_path).read_bytes()).hexdigest()
    return {
        "command": command,
        "scenario_sha256": digest,
        "seed": seed,
        "threads": threads,
        "versions": {"hodgevar": __version__, "numpy": np.__version__},
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_period_map(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    pm = period_blocks(scen.fm, scen.ab, phi)
    points = scen.grid_points()

    def row_block(t):
        rows = []
        try:
            val = pm.at(t)
            for (i, j), B in sorted(val.blocks.items()):
                for r in range(B.shape[0]):
                    for c in range(B.shape[1]):
                        rows.append(_point_row(t) + [f"{i}-{j}", r, c,
                                                     float(B[r, c].real),
                                                     float(B[r, c].imag), ""])
        except (DomainError, IllConditionedError) as exc:
            rows.append(_point_row(t) + ["", 0, 0, 0.0, 0.0, type(exc).__name__])
        return rows

    all_rows = parallel_map(row_block, points, threads)
    write_csv(out / "period_blocks.csv",
              _point_cols(scen.num_params) + ["block", "row", "col", "re", "im", "error"],
              [r for chunk in all_rows for r in chunk])

    residuals = {}
    for mu in range(scen.num_params):
        res, mode = transversality_residual(pm, mu)
        residuals[f"mu{mu}"] = {"residual": res, "mode": mode}
    degrees = {f"{i}-{j}": (blk.min_total_degree() if blk.min_total_degree() is not None else "zero")
               for (i, j), blk in sorted(pm.blocks.items())}
    write_json(out / "period_summary.json", {
        "transversality": residuals,
        "strengthened_degree_violation": strengthened_degree_residual(pm),
        "block_min_degrees": degrees,
    })
    return 0


def cmd_hodge_map(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    pm = period_blocks(scen.fm, scen.ab, phi)
    sigmas = scen.extras.get("sigma_samples")
    if sigmas is None and "sigma" in scen.extras:
        sigmas = [scen.extras["sigma"]]
    if not sigmas:
        print(json.dumps({"error": "hodge-map needs sigma or sigma_samples"}))
        return 2
    from .scenario import parse_class
    classes = [parse_class(s, f"sigma_samples[{k}]", scen.fm, scen.torus_spec)
               for k, s in enumerate(sigmas)]
    p = scen.fm.weight // 2
    points = scen.grid_points()

    def solve_row(args):
        sid, hcv, t = args
        base = [sid] + _point_row(t)
        try:
            val = pm.at(t)
            res = solve_hodge_map(val, scen.ab, hcv.alpha(p))
            comps = np.concatenate(res.components)
            return [base + [k, float(c.real), float(c.imag),
                            extension_residual(val, scen.ab, res),
                            membership_residual(val, res), ""]
                    for k, c in enumerate(comps)]
        except (DomainError, IllConditionedError) as exc:
            return [base + [0, 0.0, 0.0, 0.0, 0.0, type(exc).__name__]]

    tasks = [(sid, hcv, t) for sid, hcv in enumerate(classes) for t in points]
    rows = parallel_map(solve_row, tasks, threads)
    write_csv(out / "hodge_map.csv",
              ["sigma_id"] + _point_cols(scen.num_params) +
              ["component", "re", "im", "system_residual", "membership_residual", "error"],
              [r for chunk in rows for r in chunk])
    return 0


def cmd_extend_kahler(scen: Scenario, out: Path, threads: int) -> int:
    if scen.torus_spec is None:
        print(json.dumps({"error": "extend-kahler needs a torus model"}))
        return 2
    phi = scen.beltrami()
    pm = period_blocks(scen.fm, scen.ab, phi)
    from .scenario import _complex_matrix
    g = _complex_matrix(scen.extras.get("metric"), "metric") \
        if "metric" in scen.extras else np.eye(scen.torus_spec.d, dtype=complex)
    metric = HermitianMetricModel(g)
    points = scen.grid_points()

    def cert_row(t):
        base = _point_row(t)
        try:
            val = pm.at(t)
            mat = phi.matrix_at(t)
            _, cert = extend_kahler_class(scen.fm, scen.ab, val, metric, mat)
            dm = deformed_metric(metric, mat)
            agreement = float(np.max(np.abs(cert.coefficient_matrix - dm)))
            return base + [sup_operator_norm(mat), cert.min_eigenvalue,
                           cert.hermitian_residual, cert.type_residual,
                           agreement, ""]
        except (DomainError, IllConditionedError, ArithmeticError) as exc:
            return base + [0.0, 0.0, 0.0, 0.0, 0.0, type(exc).__name__]

    rows = parallel_map(cert_row, points, threads)
    write_csv(out / "kahler_certificates.csv",
              _point_cols(scen.num_params) +
              ["phi_norm", "min_eigenvalue", "hermitian_residual",
               "type_residual", "metric_agreement", "error"],
              rows)
    return 0


def cmd_stability_radius(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    pm = period_blocks(scen.fm, scen.ab, phi)
    points = scen.grid_points()
    report = stability_radii(scen.fm, scen.ab, phi, points, scen.scan_cap(), pm=pm)
    write_json(out / "stability_report.json", report.as_dict())
    rows = []
    for r in report.records:
        det = r.purity_det if r.purity_det is not None else 0.0
        rows.append(_point_row(r.point) +
                    [r.phi_norm, float(np.real(det)), float(np.imag(det)),
                     r.purity_ok, r.a_norm, r.a_ok])
    write_csv(out / "stability_scan.csv",
              _point_cols(scen.num_params) +
              ["phi_norm", "purity_det_re", "purity_det_im", "purity_ok",
               "a_norm", "a_ok"],
              rows)
    return 0


def cmd_green_check(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    zeta0 = scen.class_vector("zeta0")
    rep = green_rank_weight2(scen.fm, scen.ab, phi, zeta0)
    write_json(out / "green_report.json", rep.as_dict())
    return 0


def cmd_pp_check(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    sigma0 = scen.class_vector("sigma")
    rep = pp_criterion(scen.fm, scen.ab, phi, sigma0,
                       sample_points=scen.grid_points())
    write_json(out / "pp_report.json", rep.as_dict())
    return 0


def cmd_hodge_locus(scen: Scenario, out: Path, threads: int) -> int:
    phi = scen.beltrami()
    sigma = scen.class_vector("sigma")
    ideal = locus_generators(scen.fm, scen.ab, phi, sigma)
    tol = scen.tolerances["membership"]
    points = scen.grid_points()

    def member_row(t):
        ok, res = locus_membership(ideal, t, tol)
        return _point_row(t) + [ok, res]

    rows = parallel_map(member_row, points, threads)
    write_csv(out / "locus_membership.csv",
              _point_cols(scen.num_params) + ["member", "residual"], rows)

    tangent = locus_tangent_space(ideal)
    gens = []
    for k, gen in enumerate(ideal.generators):
        for e in sorted(gen.coeffs):
            c = gen.coeffs[e]
            gens.append({"generator": k, "exponents": list(e),
                         "coeff": [c.real, c.imag]})
    write_json(out / "locus_generators.json", {
        "num_class_generators": len(ideal.class_generators),
        "num_obstruction_generators": len(ideal.obstruction_generators),
        "terms": gens,
        "tangent_dimension": int(tangent.shape[1]),
        "tangent_basis": [[[z.real, z.imag] for z in col] for col in tangent.T],
    })
    return 0


def cmd_vhc_check(scen: Scenario, out: Path, threads: int) -> int:
    if scen.torus_spec is None:
        print(json.dumps({"error": "vhc-check needs a torus model"}))
        return 2
    phi = scen.beltrami()
    Z = scen.subtorus()
    sigma = scen.class_vector("sigma") if "sigma" in scen.extras else None
    rep = vhc_check(scen.torus_spec, Z, scen.fm, scen.ab, phi, scen.grid_points(),
                    tol_lhs=scen.tolerances["lhs"], tol_rhs=scen.tolerances["rhs"],
                    sigma=sigma)
    rows = [_point_row(r.point) + [r.lhs, r.rhs, r.violation] for r in rep.records]
    write_csv(out / "vhc_scan.csv",
              _point_cols(scen.num_params) + ["lhs", "rhs", "violation"], rows)
    write_json(out / "vhc_report.json", {
        "holds": rep.holds,
        "violations": len(rep.violations),
        "tol_lhs": rep.tol_lhs,
        "tol_rhs": rep.tol_rhs,
    })
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _selftest_checks(scen: Scenario):
    """Invariant suite on the scenario's model plus a synthetic cross-check."""
    from .synthetic import lie_deformation_complex, random_form_model
    from .series import ArraySeries
    from .kuranishi import BeltramiSeries
    from .torus import TorusSpec, build_torus_model

    checks = []
    rep = validate(scen.dc, scen.fm, scen.ab)
    for e in rep.entries:
        checks.append((f"model.{e.name}", e.residual, e.tolerance))

    phi = scen.beltrami()
    pm = period_blocks(scen.fm, scen.ab, phi)
    val0 = pm.at(np.zeros(scen.num_params))
    ident = 0.0
    for (i, j), B in val0.blocks.items():
        if B.size:
            ident = max(ident, float(np.max(np.abs(B))))
    checks.append(("period.identity_at_zero", ident, 0.0))
    order = 0.0
    for (i, j), blk in pm.blocks.items():
        md = blk.min_total_degree()
        if md is not None and md < j - i:
            order = max(order, float(j - i - md))
    checks.append(("period.block_order_bound", order, 0.0))
    checks.append(("period.strengthened_order_bound",
                   float(strengthened_degree_residual(pm)), 0.0))
    worst_trans = 0.0
    for mu in range(scen.num_params):
        res, _ = transversality_residual(pm, mu)
        worst_trans = max(worst_trans, res)
    checks.append(("period.transversality_series", worst_trans, 1e-10))

    purity = evaluate_and_check_purity(pm, np.zeros(scen.num_params))
    checks.append(("period.purity_at_zero", 0.0 if purity.pure else 1.0, 0.0))
    if purity.determinant is not None:
        checks.append(("period.purity_det_at_zero",
                       abs(purity.determinant - 1.0), 1e-12))

    # weight-2 extension identity on a small off-center point
    if scen.fm.weight == 2 and scen.torus_spec is not None:
        t = np.full(scen.num_params, 0.05 + 0.02j)
        valt = pm.at(t)
        mat = phi.matrix_at(t)
        metric = HermitianMetricModel(np.eye(scen.torus_spec.d))
        _, cert = extend_kahler_class(scen.fm, scen.ab, valt, metric, mat)
        dm = deformed_metric(metric, mat)
        checks.append(("cone.extension_matches_deformed_metric",
                       float(np.max(np.abs(cert.coefficient_matrix - dm))), 1e-9))
        checks.append(("cone.extension_positive",
                       0.0 if cert.min_eigenvalue > 0 else 1.0, 0.0))

    # synthetic Neumann contract and recursion
    fm_s, ab_s = random_form_model(seed=7)
    N = 2
    coeffs = {}
    rng = np.random.default_rng(11)
    for mu in range(N):
        e = tuple(1 if k == mu else 0 for k in range(N))
        coeffs[e] = 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    dc_lie = lie_deformation_complex(seed=5, dims=(1, 2, 2))
    phi_s = BeltramiSeries(dc=dc_lie, series=ArraySeries(N, 4, (2,), coeffs))
    worst = max(neumann_consistency_residual(fm_s, phi_s, lvl) for lvl in range(3))
    checks.append(("period.neumann_back_substitution", worst, 1e-12))

    phi_lie = solve_phi(dc_lie, dc_lie.harmonic1, 4)
    obs = obstruction(dc_lie, phi_lie)
    base = sample_base(obs, radius=0.2, count=32, tol=scen.tolerances["base_sample"],
                       seed=scen.seed)
    mc = max((maurer_cartan_residual(dc_lie, phi_lie, t) for t in base.points),
             default=0.0)
    checks.append(("kuranishi.maurer_cartan_on_base", mc,
                   10 * scen.tolerances["base_sample"]))
    return checks


def cmd_selftest(scen: Scenario, out: Path, threads: int) -> int:
    checks = _selftest_checks(scen)
    rows = [[name, res, tol, res <= tol] for name, res, tol in checks]
    write_csv(out / "selftest.csv", ["check", "residual", "tolerance", "passed"], rows)
    ok = all(r[3] for r in rows)
    write_json(out / "selftest.json",
               {"passed": ok, "num_checks": len(rows),
                "failures": [r[0] for r in rows if not r[3]]})
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# plot-data reshaping
# ---------------------------------------------------------------------------

def emit_plot_data(results_csv: Path, kind: str, out: Path) -> Path:
    """Reshape a grid command's CSV into a long-form table for external
    plotting; deterministic row order."""
    with open(results_csv, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if kind == "stability-margin":
        i_norm = header.index("phi_norm")
        i_det = header.index("purity_det_re")
        out_rows = sorted([r[i_norm], r[i_det]] for r in rows)
        path = out / "plot_stability_margin.csv"
        write_csv(path, ["phi_norm", "purity_det_re"], out_rows)
        return path
    if kind == "locus-slice":
        i_res = header.index("residual")
        t_cols = [k for k, h in enumerate(header) if h.endswith("_re")]
        out_rows = sorted([r[k] for k in t_cols] + [r[i_res]] for r in rows)
        path = out / "plot_locus_slice.csv"
        write_csv(path, [header[k] for k in t_cols] + ["residual"], out_rows)
        return path
    if kind == "residual-heatmap":
        i_res = [k for k, h in enumerate(header)
                 if h in ("residual", "membership_residual", "lhs", "rhs")]
        out_rows = sorted([v for v in r] for r in rows)
        path = out / "plot_residual_heatmap.csv"
        write_csv(path, header, out_rows)
        return path
    raise ValueError(f"unknown plot kind {kind!r}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

HANDLERS: Dict[str, Callable[[Scenario, Path, int], int]] = {
    "period-map": cmd_period_map,
    "hodge-map": cmd_hodge_map,
    "extend-kahler": cmd_extend_kahler,
    "stability-radius": cmd_stability_radius,
    "green-check": cmd_green_check,
    "pp-check": cmd_pp_check,
    "hodge-locus": cmd_hodge_locus,
    "vhc-check": cmd_vhc_check,
    "selftest": cmd_selftest,
}


def validate_scenario(path: str) -> dict:
    """Schema and cross-dimension checks only; no computation."""
    try:
        load_scenario(path)
        return {"valid": True, "path": path}
    except ScenarioError as exc:
        return {"valid": False, "path": path,
                "field": exc.field_path, "message": str(exc)}
    except FileNotFoundError:
        return {"valid": False, "path": path, "field": "$",
                "message": "file not found"}


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hodgevar",
        description="Deterministic batch computations on finite Hodge-structure models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--threads", type=int, default=1)
    pv = sub.add_parser("validate-scenario")
    pv.add_argument("--scenario", required=True)
    pp = sub.add_parser("plot-data")
    pp.add_argument("--results", required=True)
    pp.add_argument("--kind", required=True)
    pp.add_argument("--out", required=True)

    args = parser.parse_args(argv)

    if args.command == "validate-scenario":
        report = validate_scenario(args.scenario)
        print(json.dumps(report, sort_keys=True))
        return 0 if report["valid"] else 2

    if args.command == "plot-data":
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        try:
            path = emit_plot_data(Path(args.results), args.kind, out)
        except (ValueError, FileNotFoundError) as exc:
            print(json.dumps({"error": str(exc)}))
            return 2
        print(json.dumps({"written": str(path)}))
        return 0

    try:
        scen = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(json.dumps({"error": "scenario", "field": exc.field_path,
                          "message": str(exc)}, sort_keys=True))
        return 2
    except FileNotFoundError:
        print(json.dumps({"error": "scenario", "field": "$",
                          "message": "file not found"}))
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = HANDLERS[args.command](scen, out, args.threads)
    write_json(out / "run_manifest.json",
               _manifest(args.command, args.scenario, scen.seed, args.threads))
    return status


if __name__ == "__main__":
    sys.exit(main())
