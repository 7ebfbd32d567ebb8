"""Scenario files: the single configuration input of the batch CLI.

A scenario is one JSON object; complex scalars are [re, im] pairs, complex
matrices nested lists of such pairs.  See docs/scenario-schema.md for the
full field reference.  Validation walks the object and reports failures
with their field paths; cross-dimension checks (weight vs torus dimension,
coefficient lengths vs model dimensions) run before any computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .errors import ScenarioError
from .hodgemap import HodgeClassVector
from .kuranishi import BeltramiSeries, solve_phi
from .model import AdaptedBasis, DeformationComplex, FormModel, load_model
from .series import ArraySeries
from .torus import SubtorusModel, TorusSpec, build_torus_model, monomials

COMMANDS = ("period-map", "hodge-map", "extend-kahler", "stability-radius",
            "green-check", "pp-check", "hodge-locus", "vhc-check", "selftest")

DEFAULT_TOLERANCES = {
    "membership": 1e-9,
    "lhs": 1e-8,
    "rhs": 1e-10,
    "base_sample": 1e-9,
    "rational": 1e-3,
}


def _complex_scalar(v, path: str) -> complex:
    if (not isinstance(v, (list, tuple))) or len(v) != 2 or \
            not all(isinstance(x, (int, float)) for x in v):
        raise ScenarioError(path, f"expected complex scalar [re, im], got {v!r}")
    return complex(v[0], v[1])


def _complex_matrix(v, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ScenarioError(path, "expected a matrix (list of rows)")
    width = len(v[0])
    rows = []
    for i, row in enumerate(v):
        if len(row) != width:
            raise ScenarioError(f"{path}[{i}]", "ragged matrix rows")
        rows.append([_complex_scalar(c, f"{path}[{i}][{j}]") for j, c in enumerate(row)])
    return np.array(rows, dtype=complex)


def _complex_vector(v, path: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ScenarioError(path, "expected a list of complex scalars")
    return np.array([_complex_scalar(c, f"{path}[{k}]") for k, c in enumerate(v)],
                    dtype=complex)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(path, msg)


@dataclass
class Scenario:
    raw: Dict[str, Any]
    dc: DeformationComplex
    fm: FormModel
    ab: AdaptedBasis
    torus_spec: Optional[TorusSpec]
    cutoff: int
    seed: int
    num_params: int
    beltrami_kind: str
    beltrami_terms: List[Tuple[Tuple[int, ...], np.ndarray]]
    tolerances: Dict[str, float]
    grid: Dict[str, Any]
    extras: Dict[str, Any] = field(default_factory=dict)

    def beltrami(self) -> BeltramiSeries:
        if self.beltrami_kind == "kuranishi":
            return solve_phi(self.dc, self.dc.harmonic1, self.cutoff)
        coeffs: Dict[Tuple[int, ...], np.ndarray] = {}
        for exps, vec in self.beltrami_terms:
            acc = coeffs.get(exps)
            coeffs[exps] = vec if acc is None else acc + vec
        ser = ArraySeries(self.num_params, self.cutoff, (self.dc.dims[1],), coeffs)
        return BeltramiSeries(dc=self.dc, series=ser)

    def grid_points(self) -> List[np.ndarray]:
        return grid_points(self.grid, self.num_params, self.seed)

    def scan_cap(self) -> float:
        g = self.grid
        if g["kind"] == "ball":
            return float(g["radius"])
        cap = 0.0
        for ax in g["axes"]:
            cap = max(cap, abs(ax["re"][0]), abs(ax["re"][1]),
                      abs(ax.get("im", [0, 0, 1])[0]), abs(ax.get("im", [0, 0, 1])[1]))
        return cap

    def class_vector(self, key: str) -> HodgeClassVector:
        spec = self.extras.get(key)
        _require(spec is not None, key, "missing class specification")
        return parse_class(spec, key, self.fm, self.torus_spec)

    def subtorus(self) -> SubtorusModel:
        spec = self.extras.get("subtorus")
        _require(isinstance(spec, dict) and "subset" in spec, "subtorus",
                 "missing subtorus {subset: [...]} block")
        subset = [int(i) - 1 for i in spec["subset"]]   # 1-based in files
        _require(all(0 <= i for i in subset), "subtorus.subset", "indices are 1-based")
        return SubtorusModel(subset=tuple(subset))


def parse_class(spec, path: str, fm: FormModel,
                torus_spec: Optional[TorusSpec]) -> HodgeClassVector:
    """Class specifications: {"level": p, "coeffs": [...]} over the level
    basis, {"kahler": matrix} for [omega_g], or {"subtorus_dual":
    {"subset": [...]}} on torus models."""
    if not isinstance(spec, dict):
        raise ScenarioError(path, "class specification must be an object")
    if "level" in spec:
        level = spec["level"]
        _require(isinstance(level, int) and 0 <= level <= fm.weight,
                 f"{path}.level", f"level must be in 0..{fm.weight}")
        coeffs = _complex_vector(spec.get("coeffs"), f"{path}.coeffs")
        _require(coeffs.shape[0] == fm.level_dims[level], f"{path}.coeffs",
                 f"expected {fm.level_dims[level]} coefficients for level {level}")
        return HodgeClassVector.pure(fm.weight, level, coeffs, fm.level_dims)
    if "kahler" in spec:
        from .cone import kahler_class_components
        g = _complex_matrix(spec["kahler"], f"{path}.kahler")
        alpha1 = kahler_class_components(fm, g)
        return HodgeClassVector.pure(fm.weight, 1, alpha1, fm.level_dims)
    if "subtorus_dual" in spec:
        _require(torus_spec is not None, path, "subtorus_dual needs a torus model")
        from .torus import poincare_dual
        subset = tuple(int(i) - 1 for i in spec["subtorus_dual"]["subset"])
        return poincare_dual(torus_spec, SubtorusModel(subset=subset), fm)
    raise ScenarioError(path, "unknown class specification (level/kahler/subtorus_dual)")


def grid_points(grid: Dict[str, Any], num_params: int, seed: int) -> List[np.ndarray]:
    if grid["kind"] == "ball":
        count = int(grid["count"])
        radius = float(grid["radius"])
        sampler = qmc.Sobol(d=2 * num_params, scramble=True, seed=seed)
        raw = sampler.random(count)
        pts = []
        for k in range(count):
            t = np.empty(num_params, dtype=complex)
            for mu in range(num_params):
                rho = radius * np.sqrt(raw[k, 2 * mu])
                ang = 2 * np.pi * raw[k, 2 * mu + 1]
                t[mu] = rho * np.exp(1j * ang)
            pts.append(t)
        return pts
    # product grid over declared axes, other parameters pinned to 0
    axes_vals = []
    axes_idx = []
    for ax in grid["axes"]:
        mu = int(ax["param"])
        lo, hi, steps = ax["re"]
        re_vals = np.linspace(lo, hi, int(steps))
        if "im" in ax:
            ilo, ihi, isteps = ax["im"]
            im_vals = np.linspace(ilo, ihi, int(isteps))
        else:
            im_vals = np.array([0.0])
        vals = [complex(a, b) for a in re_vals for b in im_vals]
        axes_vals.append(vals)
        axes_idx.append(mu)
    pts = []
    shape = [len(v) for v in axes_vals]
    for flat in range(int(np.prod(shape))):
        rem = flat
        t = np.zeros(num_params, dtype=complex)
        for k in range(len(shape) - 1, -1, -1):
            rem, pos = divmod(rem, shape[k])
            t[axes_idx[k]] = axes_vals[k][pos]
        pts.append(t)
    return pts


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc}") from exc
    return parse_scenario(raw)


def parse_scenario(raw: Dict[str, Any]) -> Scenario:
    _require(isinstance(raw, dict), "$", "scenario must be a JSON object")

    model_spec = raw.get("model")
    _require(isinstance(model_spec, dict), "model", "missing model block")
    torus_spec = None
    if "torus" in model_spec:
        tblock = model_spec["torus"]
        _require(isinstance(tblock, dict), "model.torus", "must be an object")
        for key in ("d", "weight"):
            _require(isinstance(tblock.get(key), int), f"model.torus.{key}",
                     "required integer field")
        d = tblock["d"]
        weight = tblock["weight"]
        _require(d >= 1, "model.torus.d", "dimension must be >= 1")
        _require(0 <= weight <= 2 * d, "model.torus.weight",
                 f"weight must be in 0..{2*d} for a {d}-torus")
        tau = (_complex_matrix(tblock["tau"], "model.torus.tau")
               if "tau" in tblock else 1j * np.eye(d))
        _require(tau.shape == (d, d), "model.torus.tau", f"tau must be {d}x{d}")
        _require(abs(np.linalg.det(tau.imag)) > 1e-12, "model.torus.tau",
                 "Im(tau) must be nonsingular (rational structure undefined)")
        torus_spec = TorusSpec(d=d, tau=tau, weight=weight)
        dc, fm, ab = build_torus_model(torus_spec)
    elif "file" in model_spec:
        dc, fm, ab = load_model(model_spec["file"])
    else:
        raise ScenarioError("model", "need either model.torus or model.file")

    cutoff = raw.get("cutoff", 4)
    _require(isinstance(cutoff, int) and cutoff >= 1, "cutoff", "integer >= 1 required")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int), "seed", "integer required")

    beltrami = raw.get("beltrami", {"kind": "kuranishi"})
    _require(isinstance(beltrami, dict) and "kind" in beltrami, "beltrami",
             "missing beltrami block with kind")
    kind = beltrami["kind"]
    terms: List[Tuple[Tuple[int, ...], np.ndarray]] = []
    if kind == "kuranishi":
        num_params = dc.harmonic1.shape[1]
    elif kind == "family":
        num_params = beltrami.get("num_params")
        _require(isinstance(num_params, int) and num_params >= 1,
                 "beltrami.num_params", "integer >= 1 required")
        raw_terms = beltrami.get("terms")
        _require(isinstance(raw_terms, list) and raw_terms, "beltrami.terms",
                 "need at least one term")
        for k, term in enumerate(raw_terms):
            tpath = f"beltrami.terms[{k}]"
            exps = term.get("exponents")
            _require(isinstance(exps, list) and len(exps) == num_params and
                     all(isinstance(e, int) and e >= 0 for e in exps),
                     f"{tpath}.exponents", f"need {num_params} non-negative ints")
            _require(sum(exps) >= 1, f"{tpath}.exponents",
                     "Beltrami families vanish at t = 0")
            if "matrix" in term:
                _require(dc.chart_dim is not None, f"{tpath}.matrix",
                         "matrix coefficients need a chartwise model (torus)")
                M = _complex_matrix(term["matrix"], f"{tpath}.matrix")
                _require(M.shape == (dc.chart_dim, dc.chart_dim), f"{tpath}.matrix",
                         f"expected {dc.chart_dim}x{dc.chart_dim}")
                vec = np.zeros(dc.dims[1], dtype=complex)
                for m, (a, b) in enumerate(dc.a1_matrix_positions):
                    vec[m] = M[a, b]
            elif "vector" in term:
                vec = _complex_vector(term["vector"], f"{tpath}.vector")
                _require(vec.shape[0] == dc.dims[1], f"{tpath}.vector",
                         f"expected dim A^1 = {dc.dims[1]} entries")
            else:
                raise ScenarioError(tpath, "term needs matrix or vector coefficients")
            terms.append((tuple(exps), vec))
    else:
        raise ScenarioError("beltrami.kind", f"unknown kind {kind!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for k, v in (raw.get("tolerances") or {}).items():
        _require(k in DEFAULT_TOLERANCES, f"tolerances.{k}",
                 f"unknown tolerance (known: {sorted(DEFAULT_TOLERANCES)})")
        _require(isinstance(v, (int, float)) and v >= 0, f"tolerances.{k}",
                 "non-negative number required")
        tolerances[k] = float(v)

    grid = raw.get("grid", {"kind": "ball", "radius": 0.1, "count": 16})
    _require(isinstance(grid, dict) and grid.get("kind") in ("ball", "product"),
             "grid.kind", "grid kind must be ball or product")
    if grid["kind"] == "ball":
        _require(isinstance(grid.get("radius"), (int, float)) and grid["radius"] > 0,
                 "grid.radius", "positive number required")
        _require(isinstance(grid.get("count"), int) and grid["count"] >= 1,
                 "grid.count", "integer >= 1 required")
    else:
        axes = grid.get("axes")
        _require(isinstance(axes, list) and axes, "grid.axes", "need at least one axis")
        for k, ax in enumerate(axes):
            _require(isinstance(ax.get("param"), int) and 0 <= ax["param"] < num_params,
                     f"grid.axes[{k}].param", f"parameter index in 0..{num_params - 1}")
            for fieldname in ("re",) + (("im",) if "im" in ax else ()):
                v = ax.get(fieldname)
                _require(isinstance(v, list) and len(v) == 3, f"grid.axes[{k}].{fieldname}",
                         "[lo, hi, steps] required")
                _require(int(v[2]) >= 1, f"grid.axes[{k}].{fieldname}", "steps must be >= 1")

    extras = {k: v for k, v in raw.items()
              if k not in ("model", "cutoff", "seed", "beltrami", "tolerances", "grid")}

    scen = Scenario(raw=raw, dc=dc, fm=fm, ab=ab, torus_spec=torus_spec,
                    cutoff=cutoff, seed=seed, num_params=num_params,
                    beltrami_kind=kind, beltrami_terms=terms,
                    tolerances=tolerances, grid=grid, extras=extras)

    # eager cross-dimension checks on class blocks
    for key in ("sigma", "zeta0"):
        if key in extras:
            scen.class_vector(key)
    if "sigma_samples" in extras:
        _require(isinstance(extras["sigma_samples"], list) and extras["sigma_samples"],
                 "sigma_samples", "need a nonempty list of class specifications")
        for k, s in enumerate(extras["sigma_samples"]):
            parse_class(s, f"sigma_samples[{k}]", fm, torus_spec)
    if "subtorus" in extras:
        Z = scen.subtorus()
        _require(torus_spec is not None, "subtorus", "subtorus checks need a torus model")
        _require(max(Z.subset) < torus_spec.d, "subtorus.subset",
                 f"coordinate index out of range for d={torus_spec.d}")
        _require(2 * Z.codim == fm.weight, "subtorus.subset",
                 f"codimension {Z.codim} needs weight {2 * Z.codim}, model has {fm.weight}")
    if "metric" in extras:
        g = _complex_matrix(extras["metric"], "metric")
        _require(torus_spec is not None and g.shape == (torus_spec.d, torus_spec.d),
                 "metric", "metric must be d x d on a torus model")
    if "denominator_bound" in extras:
        _require(isinstance(extras["denominator_bound"], int)
                 and extras["denominator_bound"] >= 0,
                 "denominator_bound", "non-negative integer required")
    return scen
