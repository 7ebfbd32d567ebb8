"""Deformation recursion, obstruction series and base sampling.

The Beltrami series phi(t) is determined degree by degree from a harmonic
basis theta_1..theta_N of A^1:

    phi_1 = sum_i theta_i t_i,
    phi_mu = (1/2) dbar* G ( sum_{nu=1..mu-1} [phi_nu, phi_{mu-nu}] ),

and the analytic base is the zero set of the harmonic projection of
[phi(t), phi(t)].  With a vanishing bracket the recursion terminates after
the linear term and the base is the whole polydisk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, ShapeError
from .model import DeformationComplex
from .series import ArraySeries, TruncatedSeries, trust_radius


@dataclass
class BeltramiSeries:
    """phi(t) as an A^1-coordinate-valued truncated series.

    ``series`` has shape (dim A^1,); phi(0) = 0 always.  For recursion
    outputs the degree-1 part is exactly sum_i theta_i t_i.
    """
    dc: DeformationComplex
    series: ArraySeries

    def __post_init__(self):
        zero_key = (0,) * self.series.num_vars
        if zero_key in self.series.coeffs and np.any(self.series.coeffs[zero_key]):
            raise DomainError("Beltrami series must vanish at t = 0")

    @property
    def num_vars(self) -> int:
        return self.series.num_vars

    @property
    def cutoff(self) -> int:
        return self.series.cutoff

    def component(self, m: int) -> TruncatedSeries:
        return self.series.component(m)

    def at(self, point) -> np.ndarray:
        """A^1 coefficient vector at a numeric parameter point."""
        return self.series.evaluate(point)

    def matrix_at(self, point) -> np.ndarray:
        """Chartwise constant coefficient matrix at t (models with chart data)."""
        return self.dc.phi_matrix(self.at(point))

    def trust_radius(self, cap: float = 1e3) -> float:
        return trust_radius(self.series, cap)


@dataclass
class ObstructionSeries:
    """Components of the harmonic projection of [phi(t), phi(t)], one scalar
    series per harmonic A^2 basis element; lowest degree >= 2."""
    series: ArraySeries   # shape (dim harmonic A^2,)

    @property
    def num_components(self) -> int:
        return self.series.shape[0]

    def component(self, k: int) -> TruncatedSeries:
        return self.series.component(k)

    def at(self, point) -> np.ndarray:
        return self.series.evaluate(point)

    def max_residual_at(self, point) -> float:
        vals = self.at(point)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def is_zero(self, floor: float = 1e-13) -> bool:
        return self.series.is_zero(floor)


def bracket_series(dc: DeformationComplex, u: ArraySeries, v: ArraySeries) -> ArraySeries:
    """[u(t), v(t)] in A^2 coordinates from the structure constants."""
    n2 = dc.dims[2]
    out: Dict[Tuple[int, ...], np.ndarray] = {}
    D = u.cutoff
    for e, ue in u.coeffs.items():
        de = sum(e)
        for f, vf in v.coeffs.items():
            if de + sum(f) > D:
                continue
            g = tuple(x + y for x, y in zip(e, f))
            val = np.einsum("a,b,abk->k", ue, vf, dc.bracket)
            acc = out.get(g)
            out[g] = val if acc is None else acc + val
    return ArraySeries(u.num_vars, D, (n2,), out)


def solve_phi(dc: DeformationComplex, theta: np.ndarray, cutoff: int) -> BeltramiSeries:
    """Solve the deformation recursion up to total degree ``cutoff``.

    ``theta`` has one column per deformation parameter; each column must be
    harmonic in A^1.
    """
    theta = np.asarray(theta, dtype=complex)
    if theta.ndim != 2 or theta.shape[0] != dc.dims[1]:
        raise ShapeError(f"theta must be (dim A^1, N), got {theta.shape}")
    if cutoff < 1:
        raise ShapeError("cutoff must be >= 1")
    res = dc.harm1 @ theta - theta
    if res.size and np.max(np.abs(res)) > 1e-10:
        raise ValueError("theta columns must be harmonic (H theta = theta)")

    N = theta.shape[1]
    n1 = dc.dims[1]
    coeffs: Dict[Tuple[int, ...], np.ndarray] = {}
    for i in range(N):
        e = tuple(1 if j == i else 0 for j in range(N))
        coeffs[e] = theta[:, i].copy()

    half_dstar_g = 0.5 * (dc.dbar_star2 @ dc.green2)
    if np.any(dc.bracket):
        # degree-by-degree: bracket of all lower-degree parts
        by_degree: Dict[int, Dict[Tuple[int, ...], np.ndarray]] = {1: dict(coeffs)}
        for mu in range(2, cutoff + 1):
            source: Dict[Tuple[int, ...], np.ndarray] = {}
            for nu in range(1, mu):
                for e, ue in by_degree.get(nu, {}).items():
                    for f, vf in by_degree.get(mu - nu, {}).items():
                        g = tuple(x + y for x, y in zip(e, f))
                        val = np.einsum("a,b,abk->k", ue, vf, dc.bracket)
                        acc = source.get(g)
                        source[g] = val if acc is None else acc + val
            level: Dict[Tuple[int, ...], np.ndarray] = {}
            for g, val in source.items():
                w = half_dstar_g @ val
                if np.any(w):
                    level[g] = w
            if level:
                by_degree[mu] = level
                coeffs.update(level)
    series = ArraySeries(N, cutoff, (n1,), coeffs)
    return BeltramiSeries(dc=dc, series=series)


def obstruction(dc: DeformationComplex, phi: BeltramiSeries) -> ObstructionSeries:
    """Harmonic components of [phi(t), phi(t)]; identically zero series when
    the bracket vanishes."""
    br = bracket_series(dc, phi.series, phi.series)
    harm_basis = dc.harmonic2
    comps = br.apply_matrix(harm_basis.conj().T)
    return ObstructionSeries(series=comps)


def maurer_cartan_residual(dc: DeformationComplex, phi: BeltramiSeries, point) -> float:
    """Norm of dbar phi(t) - (1/2)[phi(t), phi(t)] in A^2 at a numeric t."""
    v = phi.at(point)
    val = dc.dbar1 @ v - 0.5 * dc.bracket_pair(v, v)
    return float(np.linalg.norm(val))


@dataclass
class BaseSample:
    """Accepted base points with their obstruction residuals."""
    points: List[np.ndarray]
    residuals: List[float]
    attempted: int

    def __len__(self) -> int:
        return len(self.points)


def sample_base(obs: ObstructionSeries, radius: float, count: int, tol: float,
                seed: int = 0, max_trust_radius: Optional[float] = None,
                polish_steps: int = 60) -> BaseSample:
    """Quasi-random points in the polydisk filtered and polished onto the
    zero set of the obstruction.

    Low-discrepancy (Sobol) samples in |t_mu| <= radius are polished by a
    damped Gauss-Newton descent on |obstruction|^2 and kept when the largest
    component magnitude drops below ``tol``.  Deterministic for a fixed seed.
    """
    N = obs.series.num_vars
    trust = trust_radius(obs.series) if max_trust_radius is None else max_trust_radius
    if radius > trust:
        raise DomainError(f"radius {radius} exceeds series trust radius {trust:.3g}")

    sampler = qmc.Sobol(d=2 * N, scramble=True, seed=seed)
    raw = sampler.random(count)
    pts = np.empty((count, N), dtype=complex)
    for mu in range(N):
        rho = radius * np.sqrt(raw[:, 2 * mu])
        ang = 2 * np.pi * raw[:, 2 * mu + 1]
        pts[:, mu] = rho * np.exp(1j * ang)

    if obs.is_zero():
        return BaseSample(points=[pts[k] for k in range(count)],
                          residuals=[0.0] * count, attempted=count)

    grads = [obs.series.partial_derivative(mu) for mu in range(N)]
    accepted: List[np.ndarray] = []
    residuals: List[float] = []
    for k in range(count):
        t = pts[k].copy()
        for _ in range(polish_steps):
            F = obs.at(t)
            if np.max(np.abs(F)) < 0.1 * tol:
                break
            J = np.stack([g.evaluate(t) for g in grads], axis=1)  # (m, N) complex
            # real Gauss-Newton step on stacked (Re F, Im F)
            Jr = np.concatenate([np.concatenate([J.real, -J.imag], axis=1),
                                 np.concatenate([J.imag, J.real], axis=1)], axis=0)
            Fr = np.concatenate([F.real, F.imag])
            step, *_ = np.linalg.lstsq(Jr, -Fr, rcond=None)
            dt = step[:N] + 1j * step[N:]
            scale = 1.0
            base_norm = np.linalg.norm(Fr)
            for _ in range(20):
                cand = t + scale * dt
                if np.max(np.abs(cand)) <= radius * (1 + 1e-9):
                    Fc = obs.at(cand)
                    if np.linalg.norm(np.concatenate([Fc.real, Fc.imag])) < base_norm:
                        t = cand
                        break
                scale *= 0.5
            else:
                break
        r = obs.max_residual_at(t)
        if r < tol and np.max(np.abs(t)) <= radius * (1 + 1e-9):
            accepted.append(t)
            residuals.append(r)
    return BaseSample(points=accepted, residuals=residuals, attempted=count)
