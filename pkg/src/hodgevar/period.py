"""Period-matrix blocks from the Beltrami series.

For each adapted-basis level i the block column is produced by

    (1/k!) H( i_phi(t)^k (I + T i_phi(t))^{-1} eta~_(i) ) = Phi^(i,i+k)(t) . eta~_(i+k)

realized as truncated series algebra: the operator u = T i_phi(t) has no
constant term, so (I + u)^{-1} is the alternating geometric sum; repeated
contraction then shifts the result down the levels, and expansion in the
orthonormal harmonic bases reads the blocks off.

The blocks form a unipotent upper-triangular matrix: Phi(0) = I and every
entry of Phi^(i,j) has lowest total degree >= j - i by construction (each
contraction consumes at least one power of t).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import factorial
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ShapeError
from .kuranishi import BeltramiSeries
from .model import AdaptedBasis, FormModel
from .series import ArraySeries


def contraction_series(fm: FormModel, phi: BeltramiSeries) -> ArraySeries:
    """i_{phi(t)} as a matrix-valued series Sum_m phi_m(t) C_m on W; it has
    no constant term since phi(0) = 0."""
    if phi.series.shape[0] != len(fm.contractions):
        raise ShapeError(
            f"Beltrami series over {phi.series.shape[0]} A^1 elements, model has "
            f"{len(fm.contractions)} contraction tensors")
    dim = fm.dim
    out: Dict[Tuple[int, ...], np.ndarray] = {}
    for e, vec in phi.series.coeffs.items():
        M = np.zeros((dim, dim), dtype=complex)
        for m, c in enumerate(vec):
            if c != 0:
                M += c * fm.contractions[m]
        if np.any(M):
            out[e] = M
    return ArraySeries(phi.num_vars, phi.cutoff, (dim, dim), out)


def _apply_operator(op: ArraySeries, vs: ArraySeries) -> ArraySeries:
    """Apply a sparse matrix-valued series to a vector/matrix-valued series."""
    return op.matmul(vs)


@dataclass
class PeriodMatrixSeries:
    """Unipotent block matrix of truncated series; diagonal blocks are the
    implicit identity.  blocks[(i, j)] has shape (h_i, h_j) for i < j."""
    weight: int
    num_vars: int
    cutoff: int
    level_dims: List[int]
    blocks: Dict[Tuple[int, int], ArraySeries]
    ab: AdaptedBasis

    def block(self, i: int, j: int) -> ArraySeries:
        return self.blocks[(i, j)]

    def at(self, point) -> "PeriodMatrixValue":
        vals = {key: blk.evaluate(point) for key, blk in self.blocks.items()}
        return PeriodMatrixValue(weight=self.weight, level_dims=list(self.level_dims),
                                 blocks=vals, ab=self.ab, point=np.asarray(point, dtype=complex))

    def full_matrix_at(self, point) -> np.ndarray:
        return self.at(point).full_matrix()


@dataclass
class PeriodMatrixValue:
    """Numeric period matrix at a parameter point."""
    weight: int
    level_dims: List[int]
    blocks: Dict[Tuple[int, int], np.ndarray]
    ab: AdaptedBasis
    point: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.eye(self.level_dims[i], dtype=complex)
        if i > j:
            return np.zeros((self.level_dims[i], self.level_dims[j]), dtype=complex)
        return self.blocks[(i, j)]

    def full_matrix(self) -> np.ndarray:
        n = self.weight
        offs = np.concatenate([[0], np.cumsum(self.level_dims)])
        total = int(offs[-1])
        M = np.eye(total, dtype=complex)
        for (i, j), B in self.blocks.items():
            M[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = B
        return M


def period_blocks(fm: FormModel, ab: AdaptedBasis, phi: BeltramiSeries,
                  cutoff: Optional[int] = None) -> PeriodMatrixSeries:
    """Compute all blocks Phi^(i,j), 0 <= i < j <= n, to the given cutoff."""
    n = fm.weight
    D = phi.cutoff if cutoff is None else cutoff
    if cutoff is not None and cutoff != phi.cutoff:
        phi = BeltramiSeries(dc=phi.dc, series=phi.series.truncate(cutoff))
    if D < 1:
        raise ShapeError("cutoff must be >= 1")
    if D < n:
        warnings.warn(
            f"cutoff {D} below weight {n}: the longest blocks cannot carry "
            "their lowest-order terms", stacklevel=2)

    iphi = contraction_series(fm, phi)
    u = iphi.apply_matrix(fm.tform)   # T i_phi(t), no constant term

    blocks: Dict[Tuple[int, int], ArraySeries] = {}
    for i in range(n + 1):
        h_i = fm.level_dims[i]
        E_i = fm.harm[i]
        if h_i == 0:
            for j in range(i + 1, n + 1):
                blocks[(i, j)] = ArraySeries.zero(phi.num_vars, D,
                                                  (0, fm.level_dims[j]))
            continue
        # Neumann inversion applied to the column stack of eta~_(i)
        w = ArraySeries.constant(E_i, phi.num_vars, D)
        term = w
        for _ in range(D):
            term = _apply_operator(u, term).scale(-1.0)
            if not term.coeffs:
                break
            w = w + term
        # successive contractions, block read-off in orthonormal bases
        y = w
        for k in range(1, n - i + 1):
            y = _apply_operator(iphi, y)
            j = i + k
            h_j = fm.level_dims[j]
            if h_j == 0:
                blocks[(i, j)] = ArraySeries.zero(phi.num_vars, D, (h_i, 0))
                continue
            reader = fm.harm[j].conj().T @ fm.gram
            coeff = y.apply_matrix(reader).scale(1.0 / factorial(k))
            # coeff[e] is (h_j, h_i): target rows, source columns; block is
            # (source rows, target columns)
            blk = ArraySeries(phi.num_vars, D, (h_i, h_j),
                              {e: m.T for e, m in coeff.coeffs.items()})
            blocks[(i, j)] = blk
    return PeriodMatrixSeries(weight=n, num_vars=phi.num_vars, cutoff=D,
                              level_dims=list(fm.level_dims), blocks=blocks, ab=ab)


def neumann_consistency_residual(fm: FormModel, phi: BeltramiSeries, level: int) -> float:
    """Apply (I + T i_phi(t)) back to the inverted series for eta~_(level);
    the result must equal eta~_(level) modulo degree cutoff + 1."""
    D = phi.cutoff
    iphi = contraction_series(fm, phi)
    u = iphi.apply_matrix(fm.tform)
    E = fm.harm[level]
    w = ArraySeries.constant(E, phi.num_vars, D)
    term = w
    for _ in range(D):
        term = _apply_operator(u, term).scale(-1.0)
        if not term.coeffs:
            break
        w = w + term
    back = w + _apply_operator(u, w)
    diff = back - ArraySeries.constant(E, phi.num_vars, D)
    return diff.max_abs_coeff()


def transversality_residual(pm: PeriodMatrixSeries, mu: int,
                            base_points: Optional[List[np.ndarray]] = None
                            ) -> Tuple[float, str]:
    """Defect of (Phi^(p,p+i))'_mu = (Phi^(p,p+1))'_mu Phi^(p+1,p+i).

    Without base points the defect is measured coefficientwise to degree
    cutoff - 1 (valid for unobstructed families, where the identity holds on
    the whole polydisk).  With base points the defect is evaluated
    pointwise, which is where the identity is asserted for obstructed
    families; the returned mode flags which test ran.
    """
    n = pm.weight
    worst = 0.0
    if base_points is None:
        for p in range(n + 1):
            for i in range(2, n - p + 1):
                lhs = pm.block(p, p + i).partial_derivative(mu)
                rhs = pm.block(p, p + 1).partial_derivative(mu).matmul(pm.block(p + 1, p + i))
                defect = (lhs - rhs).truncate(pm.cutoff - 1)
                worst = max(worst, defect.max_abs_coeff())
        return worst, "series"
    for t in base_points:
        val = pm.at(t)
        for p in range(n + 1):
            for i in range(2, n - p + 1):
                lhs = pm.block(p, p + i).partial_derivative(mu).evaluate(t)
                rhs = pm.block(p, p + 1).partial_derivative(mu).evaluate(t) @ val.block(p + 1, p + i)
                if lhs.size:
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, "pointwise"


def strengthened_degree_residual(pm: PeriodMatrixSeries) -> int:
    """Largest violation of min-degree(Phi^(p,p+i)) >= 1 + min-degree(
    Phi^(p+1,p+i)); 0 when the strengthened bound holds everywhere.

    A lower block that vanishes to the cutoff forces the upper block to
    vanish as well (its true lowest order would exceed the cutoff + 1)."""
    worst = 0
    n = pm.weight
    for p in range(n):
        for i in range(2, n - p + 1):
            upper = pm.block(p, p + i).min_total_degree()
            lower = pm.block(p + 1, p + i).min_total_degree()
            if upper is None:
                continue
            if lower is None:
                worst = max(worst, 1)
            elif upper < lower + 1:
                worst = max(worst, lower + 1 - upper)
    return worst


@dataclass
class PurityResult:
    value: PeriodMatrixValue
    pure: bool
    determinant: Optional[complex]   # weight 2 only
    min_rank_ratio: float


def conjugate_coefficient_rows(ab: AdaptedBasis, rows: np.ndarray,
                               levels: List[int]) -> np.ndarray:
    """Coefficient rows of the conjugated classes: a class with row blocks
    alpha_(i) conjugates to blocks conj(alpha_(i)) K_(i) at level n - i."""
    n = ab.weight
    offs = np.concatenate([[0], np.cumsum(ab.level_dims)])
    out = np.zeros_like(rows)
    for i in levels:
        src = rows[:, offs[i]:offs[i + 1]]
        tgt_lo, tgt_hi = offs[n - i], offs[n - i + 1]
        out[:, tgt_lo:tgt_hi] += np.conj(src) @ ab.kmats[i]
    return out


def evaluate_and_check_purity(pm: PeriodMatrixSeries, point,
                              rank_tol: float = 1e-8) -> PurityResult:
    """Numeric blocks at t plus the pure-Hodge-structure test.

    Purity holds when, for every p, the row span of the filtration levels
    Omega_(0..n-p)(t) together with the conjugates of Omega_(0..p-1)(t)
    fills the whole space (smallest singular value > rank_tol * largest).
    For weight 2 the determinant of the 3x3 block matrix built from
    (Omega_(0), Omega_(1), conj(Omega_(0))) is returned as well.
    """
    val = pm.at(point)
    n = pm.weight
    U = val.full_matrix()
    offs = np.concatenate([[0], np.cumsum(pm.level_dims)])
    total = int(offs[-1])
    pure = True
    min_ratio = np.inf
    for p in range(1, n + 1):
        f_rows = U[: offs[n - p + 1], :]
        conj_src = U[: offs[p], :]
        conj_rows = conjugate_coefficient_rows(pm.ab, conj_src, list(range(n + 1)))
        stack = np.vstack([f_rows, conj_rows])
        if stack.shape[0] == 0:
            continue
        if stack.shape[0] != total:
            pure = False
            min_ratio = 0.0
            continue
        s = np.linalg.svd(stack, compute_uv=False)
        ratio = float(s[-1] / s[0]) if s[0] > 0 else 0.0
        min_ratio = min(min_ratio, ratio)
        if ratio <= rank_tol:
            pure = False
    det = None
    if n == 2:
        conj0 = conjugate_coefficient_rows(pm.ab, U[: offs[1], :], [0, 1, 2])
        M = np.vstack([U[: offs[2], :], conj0])
        det = complex(np.linalg.det(M)) if M.shape[0] == M.shape[1] else None
    if min_ratio is np.inf:
        min_ratio = 1.0
    return PurityResult(value=val, pure=pure, determinant=det,
                        min_rank_ratio=float(min_ratio))
