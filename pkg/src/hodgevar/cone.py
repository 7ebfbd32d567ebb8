"""Kahler-cone machinery on chartwise-constant models.

The deformed metric solves the fixed point G' = g + S(G') for the operator
S: G |-> conj(phi)^T G^T phi, which contracts when the supremum operator
norm of phi is below one; positivity of G' then follows term by term from
the Neumann sum.  Extensions of Kahler classes are assembled from the
weight-2 extension of the class of omega_g, re-expanded in the deformed
coframe dw = dz + phi dz, whose (1,1)-coefficient matrix reproduces the
deformed metric and certifies positivity by its smallest eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ShapeError
from .hodgemap import HodgeClassVector, alpha0_weight2, operator_norm_A
from .kuranishi import BeltramiSeries
from .model import AdaptedBasis, FormModel
from .period import PeriodMatrixSeries, PeriodMatrixValue, evaluate_and_check_purity
from .torus import monomials


@dataclass
class HermitianMetricModel:
    """Constant-coefficient Kahler form omega = i sum g_ab dz_a ^ dzbar_b."""
    g: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=complex)
        if self.g.ndim != 2 or self.g.shape[0] != self.g.shape[1]:
            raise ShapeError("metric must be a square matrix")
        if np.max(np.abs(self.g - self.g.conj().T)) > 1e-12:
            raise DomainError("metric must be Hermitian")
        if np.linalg.eigvalsh(self.g).min() <= 0:
            raise DomainError("metric must be positive definite")

    @property
    def d(self) -> int:
        return self.g.shape[0]


def sup_operator_norm(phi_matrices) -> float:
    """Largest singular value over the chartwise coefficient matrices."""
    if isinstance(phi_matrices, np.ndarray) and phi_matrices.ndim == 2:
        phi_matrices = [phi_matrices]
    worst = 0.0
    for M in phi_matrices:
        M = np.asarray(M, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ShapeError("chart coefficient matrices must be square")
        if M.size:
            worst = max(worst, float(np.linalg.norm(M, 2)))
    return worst


def _s_operator(phi: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    pc = np.conj(phi).T
    return lambda G: pc @ G.T @ phi


def deformed_metric(g, phi: np.ndarray, agree_tol: float = 1e-8) -> np.ndarray:
    """Solve G' = g + S(G') two ways (direct vectorized solve and Neumann
    summation) and return the direct solution after checking agreement.

    Requires sup_operator_norm(phi) < 1; the output is Hermitian and
    positive definite whenever g is.
    """
    if isinstance(g, HermitianMetricModel):
        g = g.g
    g = np.asarray(g, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    d = g.shape[0]
    norm = sup_operator_norm(phi)
    if norm >= 1.0:
        raise DomainError(f"sup operator norm {norm:.6g} >= 1, Neumann contract violated")
    S = _s_operator(phi)

    # (a) direct solve of the vectorized linear map X - S(X) = g
    L = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d * d):
        E = np.zeros((d, d), dtype=complex)
        E[k // d, k % d] = 1.0
        L[:, k] = (E - S(E)).ravel()
    direct = np.linalg.solve(L, g.ravel()).reshape(d, d)

    # (b) Neumann summation sum_k S^k(g)
    total = g.copy()
    term = g.copy()
    for _ in range(100000):
        term = S(term)
        total += term
        if np.max(np.abs(term)) < 1e-16 * max(1.0, np.max(np.abs(g))):
            break
    if np.max(np.abs(direct - total)) > agree_tol:
        raise ArithmeticError(
            f"direct solve and Neumann sum disagree by {np.max(np.abs(direct - total)):.3g}")
    return (direct + direct.conj().T) / 2


# ---------------------------------------------------------------------------
# deformed-coframe expansion (weight 2)
# ---------------------------------------------------------------------------

def coframe_expansion_weight2(d: int, phi: np.ndarray, form: np.ndarray,
                              mono_index: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], int]):
    """Expand a constant 2-form (coefficients over dz/dzbar monomials) in the
    deformed coframe dw_a = dz_a + phi^a_b dzbar_b.

    Returns (g11, offdiag) where g11 is the matrix with form^{1,1} =
    i sum g11[a,b] dw_a ^ dwbar_b and offdiag the largest magnitude among
    (2,0)/(0,2) dw-components.
    """
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    M[:d, :d] = np.eye(d)
    M[:d, d:] = phi
    M[d:, :d] = np.conj(phi)
    M[d:, d:] = np.eye(d)
    Minv = np.linalg.inv(M)

    subsets = list(combinations(range(2 * d), 2))
    pos = {S: k for k, S in enumerate(subsets)}
    c = np.zeros(len(subsets), dtype=complex)
    for (I, J), k in mono_index.items():
        gens = tuple(list(I) + [d + j for j in J])
        c[pos[gens]] += form[k]
    out = np.zeros(len(subsets), dtype=complex)
    for cs, Sgen in enumerate(subsets):
        if c[cs] == 0:
            continue
        rows = Minv[list(Sgen), :]
        for ct, Tgen in enumerate(subsets):
            sub = rows[:, list(Tgen)]
            out[ct] += c[cs] * (sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0])

    g11 = np.zeros((d, d), dtype=complex)
    offdiag = 0.0
    for ct, (u, v) in enumerate(subsets):
        if u < d and v >= d:
            g11[u, v - d] = out[ct] / 1j
        elif abs(out[ct]) > offdiag:
            offdiag = float(abs(out[ct]))
    return g11, offdiag


@dataclass
class ConeCertificate:
    coefficient_matrix: np.ndarray
    min_eigenvalue: float
    hermitian_residual: float
    type_residual: float

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue > 0


def kahler_class_components(fm: FormModel, g: np.ndarray) -> np.ndarray:
    """alpha_(1) row of [omega_g] = [i sum g_ab dz_a ^ dzbar_b] over the
    level-1 monomial basis of a weight-2 torus-type model."""
    d = int(round(np.sqrt(fm.level_dims[1])))
    if d * d != fm.level_dims[1]:
        raise ShapeError("level 1 is not a full dz ^ dzbar monomial block")
    alpha = np.zeros(fm.level_dims[1], dtype=complex)
    monos = monomials(d, 1, 1)
    for k, (I, J) in enumerate(monos):
        alpha[k] = 1j * g[I[0], J[0]]
    return alpha


def extend_kahler_class(fm: FormModel, ab: AdaptedBasis, value: PeriodMatrixValue,
                        g, phi_matrix: np.ndarray
                        ) -> Tuple[HodgeClassVector, ConeCertificate]:
    """Transport the class of omega_g to the fiber at t and certify
    positivity of the representative in the deformed coframe."""
    if isinstance(g, HermitianMetricModel):
        metric = g
    else:
        metric = HermitianMetricModel(np.asarray(g, dtype=complex))
    d = metric.d
    if fm.weight != 2:
        raise ShapeError("Kahler extension needs a weight-2 model")
    alpha1 = kahler_class_components(fm, metric.g)
    alpha0 = alpha0_weight2(value, ab, alpha1)
    comps = [alpha0, alpha1, np.conj(alpha0) @ ab.kmats[0]]
    hcv = HodgeClassVector(weight=2, components=comps)

    form = hcv.to_form(fm)
    mono_index: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], int] = {}
    offset = 0
    for i in range(3):
        for k, m in enumerate(monomials(d, 2 - i, i)):
            mono_index[m] = offset + k
        offset += fm.level_dims[i]
    g11, offdiag = coframe_expansion_weight2(d, phi_matrix, form, mono_index)
    herm_res = float(np.max(np.abs(g11 - g11.conj().T)))
    g11h = (g11 + g11.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(g11h).min())
    cert = ConeCertificate(coefficient_matrix=g11, min_eigenvalue=min_eig,
                           hermitian_residual=herm_res, type_residual=offdiag)
    return hcv, cert


# ---------------------------------------------------------------------------
# stability radii
# ---------------------------------------------------------------------------

@dataclass
class StabilityRecord:
    point: np.ndarray
    phi_norm: float
    purity_ok: bool
    purity_det: Optional[complex]
    a_norm: float
    a_ok: bool
    error: Optional[str] = None


@dataclass
class StabilityReport:
    """Grid-certified lower bounds: c1 for purity, c2 for ||A(t)|| < 1,
    c0 = min(c1, c2).  These certify only the sampled points."""
    scan_cap: float
    c0: float
    c1: float
    c2: float
    records: List[StabilityRecord] = field(default_factory=list)
    grid_certified: bool = True

    def as_dict(self) -> dict:
        return {
            "scan_cap": self.scan_cap,
            "c0": self.c0, "c1": self.c1, "c2": self.c2,
            "grid_certified_lower_bound": self.grid_certified,
            "num_points": len(self.records),
        }


def stability_radii(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                    points: Sequence[np.ndarray], scan_cap: float,
                    pm: Optional[PeriodMatrixSeries] = None,
                    phi_matrix_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                    value_fn: Optional[Callable[[np.ndarray], PeriodMatrixValue]] = None
                    ) -> StabilityReport:
    """Scan a weight-2 family: collect per-point Beltrami norms, purity
    determinants and ||A(t)||, then extract radii.

    c1 is the largest c such that every sampled point with phi-norm < c
    passes purity; c2 likewise for ||A(t)|| < 1; with no failures the radii
    cap at the scan cap.  Engineered scans can inject ``phi_matrix_fn`` and
    ``value_fn`` overrides.
    """
    if fm.weight != 2:
        raise ShapeError("stability radii need a weight-2 model")
    if not len(points):
        raise ShapeError("empty scan grid")
    if pm is None and value_fn is None:
        from .period import period_blocks
        pm = period_blocks(fm, ab, phi)

    records: List[StabilityRecord] = []
    for t in points:
        t = np.asarray(t, dtype=complex)
        mat = phi_matrix_fn(t) if phi_matrix_fn is not None else phi.matrix_at(t)
        norm = sup_operator_norm(mat)
        if value_fn is not None:
            val = value_fn(t)
            purity = _purity_of_value(val, ab)
        else:
            purity = evaluate_and_check_purity(pm, t)
            val = purity.value
        a_norm = operator_norm_A(val)
        records.append(StabilityRecord(
            point=t, phi_norm=norm, purity_ok=purity.pure,
            purity_det=purity.determinant, a_norm=a_norm, a_ok=a_norm < 1.0))

    c1 = _largest_radius(records, lambda r: r.purity_ok, scan_cap)
    c2 = _largest_radius(records, lambda r: r.a_ok, scan_cap)
    return StabilityReport(scan_cap=scan_cap, c0=min(c1, c2), c1=c1, c2=c2,
                           records=records)


def _purity_of_value(val: PeriodMatrixValue, ab: AdaptedBasis):
    """Purity test for an injected numeric period value."""
    from .period import PurityResult, conjugate_coefficient_rows
    U = val.full_matrix()
    offs = np.concatenate([[0], np.cumsum(val.level_dims)])
    total = int(offs[-1])
    pure = True
    n = val.weight
    for p in range(1, n + 1):
        f_rows = U[: offs[n - p + 1], :]
        conj_rows = conjugate_coefficient_rows(ab, U[: offs[p], :], list(range(n + 1)))
        stack = np.vstack([f_rows, conj_rows])
        if stack.shape[0] != total:
            pure = False
            continue
        s = np.linalg.svd(stack, compute_uv=False)
        if s[0] == 0 or s[-1] / s[0] <= 1e-8:
            pure = False
    det = None
    if n == 2:
        conj0 = conjugate_coefficient_rows(ab, U[: offs[1], :], [0, 1, 2])
        M = np.vstack([U[: offs[2], :], conj0])
        det = complex(np.linalg.det(M)) if M.shape[0] == M.shape[1] else None
    return PurityResult(value=val, pure=pure, determinant=det,
                        min_rank_ratio=0.0 if not pure else 1.0)


def _largest_radius(records: List[StabilityRecord], ok, scan_cap: float) -> float:
    """Smallest failing norm, or the scan cap when every point passes."""
    failing = sorted(r.phi_norm for r in records if not ok(r))
    return failing[0] if failing else scan_cap
