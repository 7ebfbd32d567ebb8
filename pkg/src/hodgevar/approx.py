"""Openness and rank criteria for approximation by projective structures and
by Hodge classes, plus a demonstrational rationality scan.

Openness of a holomorphic map cannot be decided by finite sampling, so all
verdicts are layered: a first-order rank pass, a sampled-submersion pass, or
inconclusive.  The reports never claim openness itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ShapeError
from .hodgemap import HodgeClassVector, alpha0_weight2
from .kuranishi import BeltramiSeries, obstruction
from .model import AdaptedBasis, FormModel, contraction_at, harmonic_coefficients
from .period import PeriodMatrixSeries, contraction_series
from .series import ArraySeries
from .torus import RationalStructure

VERDICT_FIRST_ORDER = "passes-first-order"
VERDICT_SAMPLED = "passes-sampled-openness"
VERDICT_INCONCLUSIVE = "inconclusive"
VERDICT_FAILS = "fails-first-order-necessarily"


@dataclass
class CriterionReport:
    criterion_id: str
    linear_rank: int
    linear_target: int
    sampled_ranks: List[int] = field(default_factory=list)
    sampled_target: Optional[int] = None
    verdict: str = VERDICT_INCONCLUSIVE
    notes: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "linear_rank": self.linear_rank,
            "linear_target": self.linear_target,
            "sampled_ranks": self.sampled_ranks,
            "sampled_target": self.sampled_target,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def _rank(M: np.ndarray, tol: float = 1e-10) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def contraction_rank_matrix(fm: FormModel, theta: np.ndarray, form: np.ndarray,
                            target_level: int) -> np.ndarray:
    """Matrix of theta_i -> H(i_theta form) in the harmonic basis of the
    target level; columns indexed by the theta basis."""
    cols = []
    for i in range(theta.shape[1]):
        img = contraction_at(fm, theta[:, i]) @ form
        cols.append(harmonic_coefficients(fm, target_level, img))
    return np.stack(cols, axis=1) if cols else np.zeros((fm.level_dims[target_level], 0))


def _restricted_obstruction_ok(phi: BeltramiSeries, L: np.ndarray,
                               rank: int) -> Tuple[bool, str]:
    """Check that the obstruction vanishes identically on a rank-achieving
    coordinate subspace of parameters (vacuous for zero brackets)."""
    obs = obstruction(phi.dc, phi)
    if obs.is_zero():
        return True, "obstruction vanishes identically (zero bracket)"
    # greedy column choice achieving the rank
    chosen: List[int] = []
    current = 0
    for col in range(L.shape[1]):
        r = _rank(L[:, chosen + [col]])
        if r > current:
            chosen.append(col)
            current = r
        if current == rank:
            break
    keep = set(chosen)
    restricted = ArraySeries(
        obs.series.num_vars, obs.series.cutoff, obs.series.shape,
        {e: arr for e, arr in obs.series.coeffs.items()
         if all(k in keep or e[k] == 0 for k in range(len(e)))})
    if restricted.is_zero():
        return True, f"obstruction vanishes on the parameter subspace {sorted(keep)}"
    return False, "obstruction does not vanish on any tested rank-achieving subspace"


def green_rank_weight2(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                       zeta0: HodgeClassVector) -> CriterionReport:
    """First-order density criterion for strong approximation by projective
    structures: rank of theta -> H(i_theta zeta~_0) into the (0,2) level
    against h^{0,2}, with the restricted-obstruction proviso."""
    if fm.weight != 2:
        raise ShapeError("green criterion needs a weight-2 model")
    target = fm.level_dims[2]
    theta = phi.dc.harmonic1
    form = zeta0.to_form(fm)
    L = contraction_rank_matrix(fm, theta, form, 2)
    rank = _rank(L)
    rep = CriterionReport(criterion_id="green-weight2",
                          linear_rank=rank, linear_target=target)
    if target == 0:
        rep.verdict = VERDICT_FIRST_ORDER
        rep.notes.append("target space is zero-dimensional: passes vacuously")
        return rep
    if np.max(np.abs(L)) < 1e-14:
        rep.verdict = VERDICT_FAILS
        rep.notes.append("contraction map is identically zero")
        return rep
    if rank == target:
        ok, note = _restricted_obstruction_ok(phi, L, rank)
        rep.notes.append(note)
        rep.verdict = VERDICT_FIRST_ORDER if ok else VERDICT_INCONCLUSIVE
    else:
        rep.verdict = VERDICT_INCONCLUSIVE
        rep.notes.append(f"rank {rank} below target {target}")
    return rep


def pp_criterion(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                 sigma0: HodgeClassVector,
                 sample_points: Sequence[np.ndarray] = ()) -> CriterionReport:
    """Criterion for approximation of a real (p,p)-class by Hodge classes:
    (a) linear rank of theta -> H(i_theta sigma~_0) against h^{p-1,p+1};
    (b) complex Jacobian rank of the truncated map
        t -> (H(i_phi sigma~_0), .., H(i_phi^p sigma~_0)/p!)
    at sampled points against sum_k h^{p-k,p+k}."""
    n = fm.weight
    if n % 2 != 0:
        raise ShapeError("pp criterion needs even weight")
    p = n // 2
    theta = phi.dc.harmonic1
    form = sigma0.to_form(fm)
    L = contraction_rank_matrix(fm, theta, form, p + 1)
    rank = _rank(L)
    target_first = fm.level_dims[p + 1]
    sampled_target = sum(fm.level_dims[p + k] for k in range(1, p + 1))
    rep = CriterionReport(criterion_id=f"pp-weight{n}",
                          linear_rank=rank, linear_target=target_first,
                          sampled_target=sampled_target)

    if sampled_target == 0:
        rep.verdict = VERDICT_FIRST_ORDER
        rep.notes.append("all target spaces are zero-dimensional: passes vacuously")
        return rep

    # truncated criterion map as stacked series
    iphi = contraction_series(fm, phi)
    v = ArraySeries.constant(form, phi.num_vars, phi.cutoff)
    comps: List[ArraySeries] = []
    y = v
    for k in range(1, p + 1):
        y = iphi.matmul(y)
        reader = fm.harm[p + k].conj().T @ fm.gram
        comps.append(y.apply_matrix(reader).scale(1.0 / factorial(k)))
    identically_zero = all(c.is_zero() for c in comps)

    grads = [[c.partial_derivative(mu) for mu in range(phi.num_vars)] for c in comps]
    for t in sample_points:
        t = np.asarray(t, dtype=complex)
        J = np.concatenate(
            [np.stack([g.evaluate(t) for g in row], axis=1) for row in grads], axis=0)
        rep.sampled_ranks.append(_rank(J, tol=1e-8))

    if identically_zero:
        rep.verdict = VERDICT_FAILS
        rep.notes.append("criterion map is identically zero")
        return rep
    if p == 1 and rank == target_first:
        ok, note = _restricted_obstruction_ok(phi, L, rank)
        rep.notes.append(note)
        if ok:
            rep.verdict = VERDICT_FIRST_ORDER
            return rep
    if p >= 2:
        rep.notes.append(
            "first-order Jacobian necessarily degenerates for p >= 2; "
            "higher-order sampled test applies")
    if any(r == sampled_target for r in rep.sampled_ranks):
        rep.verdict = VERDICT_SAMPLED
    else:
        rep.verdict = VERDICT_INCONCLUSIVE
        if rank < target_first:
            rep.notes.append(f"linear rank {rank} below target {target_first}")
    return rep


@dataclass
class NontrivialityReport:
    contraction_nonzero: bool
    phi01_nonzero: bool
    phi12_nonzero: bool
    period_map_nonzero: bool
    equivalences_agree: bool

    def as_dict(self) -> dict:
        return self.__dict__.copy()


def nontriviality_h20_one(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                          pm: Optional[PeriodMatrixSeries] = None) -> NontrivialityReport:
    """For weight 2 with one-dimensional (2,0) level: test whether the
    contraction series H(i_phi(t) eta~) vanishes identically and cross-check
    the equivalent block statements Phi^(0,1) = 0 <=> Phi^(1,2) = 0 <=>
    Phi = identity."""
    if fm.weight != 2 or fm.level_dims[0] != 1:
        raise ShapeError("needs weight 2 with h^{2,0} = 1")
    from .period import period_blocks
    if pm is None:
        pm = period_blocks(fm, ab, phi)
    eta = fm.harm[0][:, 0]
    iphi = contraction_series(fm, phi)
    img = iphi.matmul(ArraySeries.constant(eta, phi.num_vars, phi.cutoff))
    reader = fm.harm[1].conj().T @ fm.gram
    contraction_nonzero = not img.apply_matrix(reader).is_zero()
    phi01_nonzero = not pm.block(0, 1).is_zero()
    phi12_nonzero = not pm.block(1, 2).is_zero()
    phi02_nonzero = not pm.block(0, 2).is_zero()
    nonzero = phi01_nonzero or phi12_nonzero or phi02_nonzero
    agree = (phi01_nonzero == phi12_nonzero == nonzero)
    return NontrivialityReport(
        contraction_nonzero=contraction_nonzero,
        phi01_nonzero=phi01_nonzero,
        phi12_nonzero=phi12_nonzero,
        period_map_nonzero=nonzero,
        equivalences_agree=agree)


# ---------------------------------------------------------------------------
# rationality scan (demonstrational)
# ---------------------------------------------------------------------------

@dataclass
class RationalCandidate:
    sigma_id: int
    point: np.ndarray
    distance: float
    denominator: int
    rational_vector: List[str]


def nearest_rational_distance(vec: np.ndarray, max_denominator: int
                              ) -> Tuple[float, int, List[Fraction]]:
    """Distance (sup over coordinates, imaginary part included) from a
    complex vector to the nearest rational vector with a common denominator
    bounded by max(1, Q); Q = 0 admits integer vectors only."""
    re = vec.real
    imag_err = float(np.max(np.abs(vec.imag))) if vec.size else 0.0
    best = (np.inf, 1, [Fraction(0)] * len(re))
    for q in range(1, max(1, max_denominator) + 1):
        rounded = np.round(re * q) / q
        err = float(np.max(np.abs(re - rounded))) if vec.size else 0.0
        err = max(err, imag_err)
        if err < best[0]:
            best = (err, q, [Fraction(int(round(x * q)), q) for x in re])
    return best


def rationality_scan(rat: RationalStructure, values_fn, ab: AdaptedBasis,
                     sigmas: Sequence[np.ndarray],
                     points: Sequence[np.ndarray],
                     max_denominator: int, tol: float) -> List[RationalCandidate]:
    """Scan (sigma, t) pairs for extended classes close to rational vectors.

    ``values_fn(t)`` must return a weight-2 period value at t; each sigma is
    a middle-component row alpha_(1).  A heuristic demonstration: proximity
    to a rational vector with a bounded denominator is recorded, nothing is
    certified.
    """
    candidates: List[RationalCandidate] = []
    for t in points:
        t = np.asarray(t, dtype=complex)
        value = values_fn(t)
        for sid, alpha1 in enumerate(sigmas):
            alpha1 = np.asarray(alpha1, dtype=complex).ravel()
            alpha0 = alpha0_weight2(value, ab, alpha1)
            comps = [alpha0, alpha1, np.conj(alpha0) @ ab.kmats[0]]
            hcv = HodgeClassVector(weight=2, components=comps)
            full = np.concatenate(hcv.components)
            rvec = rat.to_rational @ full
            dist, q, fracs = nearest_rational_distance(rvec, max_denominator)
            if dist < tol:
                candidates.append(RationalCandidate(
                    sigma_id=sid, point=t, distance=dist, denominator=q,
                    rational_vector=[str(f) for f in fracs]))
    candidates.sort(key=lambda c: (c.distance, c.sigma_id,
                                   tuple(np.round(c.point.view(float), 12))))
    return candidates
