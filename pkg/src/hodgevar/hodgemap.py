"""Extension of real (p,p)-classes across the family.

A weight-2p class sigma = sum_i alpha_(i) . eta_(i) is a real (p,p)-class on
the fiber at t exactly when its expansion coefficients beta_(i)(t) in the
moving frame Omega_(i)(t) vanish above level p and the alpha's satisfy the
conjugation pairing.  The beta's come from the triangular system

    beta_(k) = alpha_(k) - sum_{i<k} beta_(i) Phi^(i,k)(t),

and the extension solves, for given middle component alpha_(p),

    F_j = conj(alpha_(p-j)) K_(p-j) - sum_{i<=p} beta_(i)(t) Phi^(i,p+j)(t) = 0,
    j = 1..p,

for the lower components.  For fixed t this system is affine real-linear in
(Re alpha_(i), Im alpha_(i)), i < p, so it is solved directly; degeneracy of
the underlying Jacobian shows up as ill-conditioning of the linear system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DomainError, IllConditionedError, ShapeError
from .model import AdaptedBasis, FormModel
from .period import PeriodMatrixValue

COND_LIMIT = 1e12


@dataclass
class HodgeClassVector:
    """Row-vector components alpha_(0)..alpha_(n) over the adapted basis."""
    weight: int
    components: List[np.ndarray]

    def __post_init__(self):
        if len(self.components) != self.weight + 1:
            raise ShapeError(
                f"need {self.weight + 1} component rows, got {len(self.components)}")
        self.components = [np.asarray(c, dtype=complex).ravel()
                           for c in self.components]

    @classmethod
    def pure(cls, weight: int, level: int, coeffs, level_dims) -> "HodgeClassVector":
        comps = [np.zeros(h, dtype=complex) for h in level_dims]
        comps[level] = np.asarray(coeffs, dtype=complex).ravel()
        return cls(weight=weight, components=comps)

    def alpha(self, i: int) -> np.ndarray:
        return self.components[i]

    def scale(self, c: complex) -> "HodgeClassVector":
        return HodgeClassVector(self.weight, [c * a for a in self.components])

    def add(self, other: "HodgeClassVector") -> "HodgeClassVector":
        return HodgeClassVector(self.weight,
                                [a + b for a, b in zip(self.components, other.components)])

    def reality_residual(self, ab: AdaptedBasis) -> float:
        """max |alpha_(n-i) - conj(alpha_(i)) K_(i)| over all levels."""
        n = self.weight
        worst = 0.0
        for i in range(n + 1):
            lhs = self.components[n - i]
            rhs = np.conj(self.components[i]) @ ab.kmats[i]
            if lhs.size:
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def is_real(self, ab: AdaptedBasis, tol: float = 1e-10) -> bool:
        return self.reality_residual(ab) <= tol

    def purity_residual(self, p: int) -> float:
        """max component magnitude outside level p."""
        worst = 0.0
        for i, a in enumerate(self.components):
            if i != p and a.size:
                worst = max(worst, float(np.max(np.abs(a))))
        return worst

    def is_pure(self, p: int, tol: float = 1e-12) -> bool:
        return self.purity_residual(p) <= tol

    def to_form(self, fm: FormModel) -> np.ndarray:
        """Harmonic representative in W coordinates."""
        v = np.zeros(fm.dim, dtype=complex)
        for i, a in enumerate(self.components):
            if a.size:
                v += fm.harm[i] @ a
        return v

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(a))) for a in self.components if a.size),
                   default=0.0)


@dataclass
class BetaCoefficients:
    """Row vectors beta_(0)(t)..beta_(n)(t) at a numeric parameter point."""
    weight: int
    rows: List[np.ndarray]

    def beta(self, k: int) -> np.ndarray:
        return self.rows[k]


def beta_coefficients(value: PeriodMatrixValue, alpha: HodgeClassVector) -> BetaCoefficients:
    """Forward substitution through the triangular system."""
    n = alpha.weight
    if value.weight != n:
        raise ShapeError(f"period value weight {value.weight} != class weight {n}")
    rows: List[np.ndarray] = []
    for k in range(n + 1):
        b = alpha.components[k].copy()
        for i in range(k):
            if rows[i].size and value.level_dims[k]:
                b = b - rows[i] @ value.block(i, k)
        rows.append(b)
    return BetaCoefficients(weight=n, rows=rows)


def beta_closed_form(value: PeriodMatrixValue, alpha: HodgeClassVector) -> BetaCoefficients:
    """Alternating-chain closed form: beta_(i) = alpha_(i) - sum over strict
    chains l < j_1 < ... < j_mu < i of (-1)^mu alpha_(l) Phi^(l,j_1) ...
    Phi^(j_mu,i).  Equivalent to inverting the unipotent block matrix."""
    n = alpha.weight
    rows: List[np.ndarray] = []
    for i in range(n + 1):
        b = alpha.components[i].copy()
        for l in range(i):
            if not alpha.components[l].size or not value.level_dims[i]:
                continue
            total = np.zeros((value.level_dims[l], value.level_dims[i]), dtype=complex)
            for chain in _chains(l, i):
                prod = np.eye(value.level_dims[l], dtype=complex)
                prev = l
                for j in chain + (i,):
                    prod = prod @ value.block(prev, j)
                    prev = j
                total += ((-1) ** len(chain)) * prod
            b = b - alpha.components[l] @ total
        rows.append(b)
    return BetaCoefficients(weight=n, rows=rows)


def _chains(l: int, i: int):
    """All strictly increasing tuples (j_1..j_mu) with l < j_1 < ... < j_mu < i,
    including the empty chain."""
    from itertools import combinations
    inner = range(l + 1, i)
    for mu in range(0, i - l):
        yield from combinations(inner, mu)


def _extension_residual(value: PeriodMatrixValue, ab: AdaptedBasis,
                        alpha: HodgeClassVector, p: int) -> np.ndarray:
    """Stacked F_j, j = 1..p (complex)."""
    beta = beta_coefficients(value, alpha)
    parts = []
    for j in range(1, p + 1):
        lhs = np.conj(alpha.components[p - j]) @ ab.kmats[p - j]
        rhs = np.zeros(value.level_dims[p + j], dtype=complex)
        for i in range(p + 1):
            if beta.rows[i].size and value.level_dims[p + j]:
                rhs = rhs + beta.rows[i] @ value.block(i, p + j)
        parts.append(lhs - rhs)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def extension_residual(value: PeriodMatrixValue, ab: AdaptedBasis,
                       hcv: HodgeClassVector) -> float:
    """max |F_j| of the defining system at a candidate extension."""
    p = hcv.weight // 2
    r = _extension_residual(value, ab, hcv, p)
    return float(np.max(np.abs(r))) if r.size else 0.0


def membership_residual(value: PeriodMatrixValue, hcv: HodgeClassVector) -> float:
    """max |beta_(p+j)| for j >= 1: vanishing means the class lies in
    F^p on the fiber at t."""
    p = hcv.weight // 2
    beta = beta_coefficients(value, hcv)
    worst = 0.0
    for j in range(p + 1, hcv.weight + 1):
        if beta.rows[j].size:
            worst = max(worst, float(np.max(np.abs(beta.rows[j]))))
    return worst


def _assemble(weight: int, lower: List[np.ndarray], alpha_p: np.ndarray,
              ab: AdaptedBasis) -> HodgeClassVector:
    """Class with given lower components, middle alpha_p and conjugate-paired
    upper components alpha_(p+j) = conj(alpha_(p-j)) K_(p-j)."""
    p = weight // 2
    comps: List[np.ndarray] = []
    for i in range(weight + 1):
        if i < p:
            comps.append(lower[i])
        elif i == p:
            comps.append(alpha_p)
        else:
            comps.append(np.conj(lower[weight - i]) @ ab.kmats[weight - i])
    return HodgeClassVector(weight=weight, components=comps)


def solve_hodge_map(value: PeriodMatrixValue, ab: AdaptedBasis,
                    alpha_p: np.ndarray,
                    cond_limit: float = COND_LIMIT) -> HodgeClassVector:
    """Extend a real middle component alpha_(p) to a real (p,p)-class on the
    fiber at the evaluation point of ``value``.

    Raises :class:`DomainError` when alpha_(p) violates the middle reality
    condition and :class:`IllConditionedError` when the linear system falls
    outside the guaranteed neighborhood (condition number > cond_limit).
    """
    n = value.weight
    if n % 2 != 0:
        raise ShapeError("the extension needs an even weight 2p")
    p = n // 2
    alpha_p = np.asarray(alpha_p, dtype=complex).ravel()
    if alpha_p.shape[0] != value.level_dims[p]:
        raise ShapeError(
            f"alpha_(p) has {alpha_p.shape[0]} entries, level {p} has {value.level_dims[p]}")
    mid = alpha_p - np.conj(alpha_p) @ ab.kmats[p]
    if mid.size and np.max(np.abs(mid)) > 1e-8:
        raise DomainError("alpha_(p) violates the middle reality condition")

    sizes = [value.level_dims[i] for i in range(p)]
    M = sum(sizes)
    if M == 0:
        return _assemble(n, [], alpha_p, ab)

    def unpack(x: np.ndarray) -> List[np.ndarray]:
        lower, pos = [], 0
        for h in sizes:
            re = x[pos:pos + h]
            im = x[M + pos:M + pos + h]
            lower.append(re + 1j * im)
            pos += h
        return lower

    def residual(x: np.ndarray) -> np.ndarray:
        hcv = _assemble(n, unpack(x), alpha_p, ab)
        F = _extension_residual(value, ab, hcv, p)
        return np.concatenate([F.real, F.imag])

    zero = np.zeros(2 * M)
    F0 = residual(zero)
    A = np.empty((F0.shape[0], 2 * M))
    for k in range(2 * M):
        e = np.zeros(2 * M)
        e[k] = 1.0
        A[:, k] = residual(e) - F0
    cond = np.linalg.cond(A) if A.size else 1.0
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"extension system outside guaranteed neighborhood (cond={cond:.3g})")
    x = np.linalg.lstsq(A, -F0, rcond=None)[0]
    return _assemble(n, unpack(x), alpha_p, ab)


def alpha0_weight2(value: PeriodMatrixValue, ab: AdaptedBasis,
                   alpha_1: np.ndarray, tol: float = 1e-14,
                   max_iter: int = 20000) -> np.ndarray:
    """Weight-2 specialization: solve conj(alpha_(0)) K_(0) =
    alpha_(1) Phi^(1,2) + alpha_(0) A(t), A = Phi^(0,2) - Phi^(0,1) Phi^(1,2),
    by the conjugate-linear fixed-point iteration (contractive for
    ||A(t)|| < 1)."""
    if value.weight != 2:
        raise ShapeError("alpha0_weight2 needs a weight-2 period value")
    alpha_1 = np.asarray(alpha_1, dtype=complex).ravel()
    A = value.block(0, 2) - value.block(0, 1) @ value.block(1, 2)
    a_norm = float(np.linalg.norm(A, 2)) if A.size else 0.0
    if a_norm >= 1.0:
        raise DomainError(f"operator norm ||A(t)|| = {a_norm:.6g} >= 1")
    h0 = value.level_dims[0]
    if h0 == 0:
        return np.zeros(0, dtype=complex)
    K0inv = np.linalg.inv(ab.kmats[0])
    c = alpha_1 @ value.block(1, 2)
    alpha = np.zeros(h0, dtype=complex)
    for _ in range(max_iter):
        new = np.conj((c + alpha @ A) @ K0inv)
        if np.max(np.abs(new - alpha)) <= tol:
            return new
        alpha = new
    raise ArithmeticError("fixed-point iteration did not converge")


def operator_norm_A(value: PeriodMatrixValue) -> float:
    """||Phi^(0,2)(t) - Phi^(0,1)(t) Phi^(1,2)(t)|| (weight 2)."""
    A = value.block(0, 2) - value.block(0, 1) @ value.block(1, 2)
    return float(np.linalg.norm(A, 2)) if A.size else 0.0
