"""Hodge-locus generators, membership, tangent spaces, and the
deformation-of-cycles criterion on subtorus models.

For a real (p,p)-class sigma at the center the locus where sigma stays of
type (p,p) is cut out (inside the analytic base) by the harmonic projection
of i_{phi(t)} (I + T i_phi(t))^{-1} sigma~, whose components coincide with
the entries of alpha_(p) . Phi^(p,p+1)(t); the obstruction components are
appended so the zero set sits inside the base.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ShapeError
from .hodgemap import HodgeClassVector
from .kuranishi import BeltramiSeries, obstruction
from .model import AdaptedBasis, FormModel, contraction_at, harmonic_coefficients
from .series import ArraySeries, TruncatedSeries
from .torus import SubtorusModel, TorusSpec, normal_restriction, poincare_dual


@dataclass
class LocusIdeal:
    """Generator series for the locus of a fixed class, with the obstruction
    generators appended; all vanish at t = 0."""
    sigma: HodgeClassVector
    class_generators: List[TruncatedSeries]
    obstruction_generators: List[TruncatedSeries]
    num_vars: int
    cutoff: int

    @property
    def generators(self) -> List[TruncatedSeries]:
        return self.class_generators + self.obstruction_generators

    def residual_at(self, point) -> float:
        vals = [abs(g.evaluate(point)) for g in self.generators]
        return max(vals) if vals else 0.0


def locus_generators(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                     sigma: HodgeClassVector,
                     cutoff: Optional[int] = None) -> LocusIdeal:
    """Series components of H( i_phi(t) (I + T i_phi(t))^{-1} sigma~ ) in the
    level p+1 harmonic basis, plus the obstruction generators."""
    from .period import contraction_series

    n = fm.weight
    p = n // 2
    if n % 2 != 0:
        raise ShapeError("locus generators need even weight 2p")
    if not sigma.is_pure(p, tol=1e-12):
        raise DomainError("sigma must be of pure type (p,p) at the center")
    if not sigma.is_real(ab, tol=1e-10):
        raise DomainError("sigma must be real")
    if cutoff is not None and cutoff != phi.cutoff:
        phi = BeltramiSeries(dc=phi.dc, series=phi.series.truncate(cutoff))
    D = phi.cutoff

    iphi = contraction_series(fm, phi)
    u = iphi.apply_matrix(fm.tform)
    v = ArraySeries.constant(sigma.to_form(fm), phi.num_vars, D)
    w = v
    term = v
    for _ in range(D):
        term = u.matmul(term).scale(-1.0)
        if not term.coeffs:
            break
        w = w + term
    y = iphi.matmul(w)
    reader = fm.harm[p + 1].conj().T @ fm.gram
    comp = y.apply_matrix(reader)   # shape (h_{p+1},)
    class_gens = [comp.component(k) for k in range(fm.level_dims[p + 1])]

    obs = obstruction(phi.dc, phi)
    obs_gens = [] if obs.is_zero() else [obs.component(k)
                                         for k in range(obs.num_components)]
    return LocusIdeal(sigma=sigma, class_generators=class_gens,
                      obstruction_generators=obs_gens,
                      num_vars=phi.num_vars, cutoff=D)


def locus_membership(ideal: LocusIdeal, point, tol: float) -> Tuple[bool, float]:
    r = ideal.residual_at(point)
    return r < tol, r


def locus_tangent_space(ideal: LocusIdeal, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of the degree-1 coefficient
    matrix of the class generators; obstruction generators have no degree-1
    part and contribute nothing."""
    N = ideal.num_vars
    rows = []
    for gen in ideal.class_generators:
        lin = gen.degree_part(1)
        row = np.zeros(N, dtype=complex)
        for e, c in lin.coeffs.items():
            row[e.index(1)] = c
        rows.append(row)
    if not rows:
        return np.eye(N, dtype=complex)
    L = np.stack(rows)
    u, s, vh = np.linalg.svd(L)
    if s.size:
        rank = int(np.sum(s > rank_tol * max(s[0], 1.0)))
    else:
        rank = 0
    return vh[rank:, :].conj().T


# ---------------------------------------------------------------------------
# deformation-of-cycles implication on subtorus models
# ---------------------------------------------------------------------------

@dataclass
class VhcRecord:
    point: np.ndarray
    lhs: float
    rhs: float
    violation: bool


@dataclass
class VhcReport:
    """Per-point test of: nonzero normal-bundle obstruction implies nonzero
    contraction against the dual class."""
    records: List[VhcRecord]
    tol_lhs: float
    tol_rhs: float

    @property
    def violations(self) -> List[VhcRecord]:
        return [r for r in self.records if r.violation]

    @property
    def holds(self) -> bool:
        return not self.violations


def vhc_check(spec: TorusSpec, Z: SubtorusModel, fm: FormModel, ab: AdaptedBasis,
              phi: BeltramiSeries, points: Sequence[np.ndarray],
              tol_lhs: float = 1e-8, tol_rhs: float = 1e-10,
              sigma: Optional[HodgeClassVector] = None) -> VhcReport:
    """On a torus model: lhs = norm of the normal-bundle component of phi(t)
    restricted to the coordinate subtorus, rhs = norm of H(i_phi(t) sigma~_Z).
    A point with lhs > tol_lhs and rhs < tol_rhs violates the implication.

    ``sigma`` overrides the subtorus dual class (used to engineer violating
    configurations); by default the dual class of Z is used.
    """
    if max(Z.subset) >= spec.d:
        raise ShapeError(f"subset {Z.subset} out of range for d={spec.d}")
    if sigma is None:
        sigma = poincare_dual(spec, Z, fm)
    sig_form = sigma.to_form(fm)

    records: List[VhcRecord] = []
    for t in points:
        t = np.asarray(t, dtype=complex)
        mat = phi.matrix_at(t)
        lhs = float(np.linalg.norm(normal_restriction(Z, mat)))
        contracted = contraction_at(fm, phi.at(t)) @ sig_form
        p = fm.weight // 2
        coeffs = harmonic_coefficients(fm, p + 1, contracted)
        rhs = float(np.linalg.norm(coeffs))
        records.append(VhcRecord(point=t, lhs=lhs, rhs=rhs,
                                 violation=(lhs > tol_lhs and rhs < tol_rhs)))
    return VhcReport(records=records, tol_lhs=tol_lhs, tol_rhs=tol_rhs)
