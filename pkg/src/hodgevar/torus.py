"""Complex tori as built-in, exactly solvable models.

On X = C^d / Lambda every harmonic form has constant coefficients, so

* A^q = constant T^{1,0}-valued (0,q)-forms, dbar = 0, G = 0, H = id and
  the bracket vanishes (derivatives of constants are zero);
* W^{p,q} = constant (p,q)-forms with the monomial basis dz_I ^ dzbar_J,
  declared orthonormal;
* T = 0, and each contraction tensor acts as the derivation substituting
  dzbar_b for dz_a.

The lattice tau enters only through the rational structure (the dx/dy basis
dual to Lambda), used by the rationality scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DomainError, ShapeError
from .model import AdaptedBasis, DeformationComplex, FormModel, adapted_basis


@dataclass
class TorusSpec:
    """Complex dimension, lattice matrix (Z^d + tau Z^d) and model weight."""
    d: int
    tau: np.ndarray
    weight: int

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=complex).reshape(self.d, self.d)
        if self.d < 1:
            raise ShapeError("torus dimension must be >= 1")
        if not 0 <= self.weight <= 2 * self.d:
            raise ShapeError(
                f"weight {self.weight} out of range for a {self.d}-torus (0..{2*self.d})")
        if abs(np.linalg.det(self.tau.imag)) < 1e-12:
            raise DomainError("Im(tau) must be nonsingular")


@dataclass
class SubtorusModel:
    """Coordinate subtorus Z = {z_i = 0 : i in subset}; the subset also
    indexes the normal bundle directions."""
    subset: Tuple[int, ...]   # 0-based coordinate indices

    def __post_init__(self):
        self.subset = tuple(sorted(set(int(i) for i in self.subset)))
        if not self.subset:
            raise ShapeError("subtorus needs a nonempty coordinate subset")

    @property
    def codim(self) -> int:
        return len(self.subset)


# ---------------------------------------------------------------------------
# monomial bookkeeping
# ---------------------------------------------------------------------------

def monomials(d: int, p: int, q: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """All (I, J) with I, J sorted index tuples, |I| = p, |J| = q."""
    return [(I, J)
            for I in combinations(range(d), p)
            for J in combinations(range(d), q)]


def _label(I: Tuple[int, ...], J: Tuple[int, ...]) -> str:
    parts = [f"dz{i+1}" for i in I] + [f"dzb{j+1}" for j in J]
    return "^".join(parts) if parts else "1"


def _insert_sorted(J: Tuple[int, ...], b: int):
    """Insert index b into the sorted tuple J; returns (new tuple, sign) or
    None when b already occurs (the wedge dies)."""
    if b in J:
        return None
    pos = sum(1 for j in J if j < b)
    sign = (-1) ** pos
    return tuple(sorted(J + (b,))), sign


def _contract_monomial(I: Tuple[int, ...], J: Tuple[int, ...], a: int, b: int):
    """i_{d/dz_a (x) dzbar_b} on dz_I ^ dzbar_J; derivation, at most one hit."""
    if a not in I:
        return None
    s = I.index(a)              # 0-based slot of dz_a
    p = len(I)
    newI = I[:s] + I[s + 1:]
    ins = _insert_sorted(J, b)
    if ins is None:
        return None
    newJ, sign_ins = ins
    # dzbar_b starts in slot s of the dz factors; move it right past the
    # remaining p - 1 - s dz's, then into sorted position among the dzbar's
    sign = (-1) ** (p - 1 - s) * sign_ins
    return newI, newJ, sign


# ---------------------------------------------------------------------------
# model builder
# ---------------------------------------------------------------------------

def build_torus_model(spec: TorusSpec) -> Tuple[DeformationComplex, FormModel, AdaptedBasis]:
    """Instantiate the constant-form model of weight n on a d-torus."""
    d, n = spec.d, spec.weight

    # deformation complex: A^q = T^{1,0}-valued constant (0,q)-forms
    a_dims = [d * comb(d, q) for q in range(3)]
    a1_basis = [(a, b) for a in range(d) for b in range(d)]  # d/dz_a (x) dzbar_b
    n0, n1, n2 = a_dims
    dc = DeformationComplex(
        dims=(n0, n1, n2),
        dbar0=np.zeros((n1, n0), dtype=complex),
        dbar1=np.zeros((n2, n1), dtype=complex),
        dbar_star1=np.zeros((n0, n1), dtype=complex),
        dbar_star2=np.zeros((n1, n2), dtype=complex),
        green0=np.zeros((n0, n0), dtype=complex),
        green1=np.zeros((n1, n1), dtype=complex),
        green2=np.zeros((n2, n2), dtype=complex),
        harm0=np.eye(n0, dtype=complex),
        harm1=np.eye(n1, dtype=complex),
        harm2=np.eye(n2, dtype=complex),
        harmonic1=np.eye(n1, dtype=complex),
        harmonic2=np.eye(n2, dtype=complex),
        bracket=np.zeros((n1, n1, n2), dtype=complex),
        chart_dim=d,
        a1_matrix_positions=a1_basis,
    )

    # weight-n form model, levels i = q with p = n - i
    level_monos = [monomials(d, n - i, i) for i in range(n + 1)]
    level_dims = [len(m) for m in level_monos]
    offsets = np.concatenate([[0], np.cumsum(level_dims)])
    blocks = [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(n + 1)]
    total = int(offsets[-1])
    index: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], int] = {}
    labels: List[List[str]] = []
    for i, monos in enumerate(level_monos):
        labels.append([_label(I, J) for I, J in monos])
        for k, m in enumerate(monos):
            index[m] = int(offsets[i]) + k

    contractions = []
    for a, b in a1_basis:
        C = np.zeros((total, total), dtype=complex)
        for (I, J), col in index.items():
            hit = _contract_monomial(I, J, a, b)
            if hit is not None:
                newI, newJ, sign = hit
                C[index[(newI, newJ)], col] = sign
        contractions.append(C)

    jmat = np.zeros((total, total), dtype=complex)
    for (I, J), col in index.items():
        # conj(dz_I ^ dzbar_J) = dzbar_I ^ dz_J = (-1)^{|I||J|} dz_J ^ dzbar_I
        jmat[index[(J, I)], col] = (-1) ** (len(I) * len(J))

    harm = []
    for i in range(n + 1):
        E = np.zeros((total, level_dims[i]), dtype=complex)
        for k in range(level_dims[i]):
            E[int(offsets[i]) + k, k] = 1.0
        harm.append(E)

    fm = FormModel(
        weight=n,
        level_dims=level_dims,
        blocks=blocks,
        labels=labels,
        tform=np.zeros((total, total), dtype=complex),
        contractions=contractions,
        jmat=jmat,
        gram=np.eye(total, dtype=complex),
        harm=harm,
    )
    ab = adapted_basis(fm, labels=[list(l) for l in labels])
    return dc, fm, ab


def monomial_index(fm: FormModel, level: int, I: Sequence[int], J: Sequence[int]) -> int:
    """Position of dz_I ^ dzbar_J inside the level's harmonic basis."""
    lab = _label(tuple(sorted(I)), tuple(sorted(J)))
    return fm.labels[level].index(lab)


# ---------------------------------------------------------------------------
# subtorus dual class
# ---------------------------------------------------------------------------

def poincare_dual(spec: TorusSpec, Z: SubtorusModel, fm: FormModel):
    """Dual class of a coordinate subtorus: wedge of sqrt(-1) dz_i ^ dzbar_i
    over i in the subset; real of pure type (p, p), p = codim.

    Returns the class as a :class:`hodgevar.hodgemap.HodgeClassVector`.
    Fixed only up to positive rational scale (lattice covolumes are not
    tracked); every downstream use is a zero-test.
    """
    from .hodgemap import HodgeClassVector

    p = Z.codim
    if 2 * p != fm.weight:
        raise ShapeError(
            f"subtorus of codimension {p} needs a weight-{2*p} model, got {fm.weight}")
    S = Z.subset
    # wedge_{i in S} (i dz_i ^ dzbar_i) = i^p * sign * dz_S ^ dzbar_S with
    # sign from sorting the interleaved factors: (-1)^{p(p-1)/2}
    sign = (-1) ** (p * (p - 1) // 2)
    coeff = (1j ** p) * sign
    comps = [np.zeros(h, dtype=complex) for h in fm.level_dims]
    k = monomial_index(fm, p, S, S)
    comps[p][k] = coeff
    return HodgeClassVector(weight=fm.weight, components=comps)


def normal_restriction(Z: SubtorusModel, phi_matrix: np.ndarray) -> np.ndarray:
    """Normal-bundle component of a constant Beltrami matrix restricted to
    the subtorus: rows in the subset (normal directions), columns outside it
    (dzbar_i for i in the subset restrict to zero on Z)."""
    S = list(Z.subset)
    comp = [b for b in range(phi_matrix.shape[0]) if b not in Z.subset]
    return phi_matrix[np.ix_(S, comp)]


# ---------------------------------------------------------------------------
# rational structure
# ---------------------------------------------------------------------------

@dataclass
class RationalStructure:
    """Change of basis between the dz/dzbar monomials of weight n and the
    rational dx/dy monomials dual to the lattice.

    ``to_rational`` maps coefficient vectors over the FormModel monomial
    basis to coefficients over the rational monomial basis (sorted subsets
    of dx_1..dx_d, dy_1..dy_d); ``to_complex`` is its inverse.
    """
    d: int
    weight: int
    h1_matrix: np.ndarray          # rows dz_1..dz_d, dzbar_1..dzbar_d over dx, dy
    to_rational: np.ndarray
    to_complex: np.ndarray
    rational_labels: List[str]


def rational_structure(spec: TorusSpec, fm: FormModel) -> RationalStructure:
    d, n = spec.d, spec.weight
    if fm.weight != n:
        raise ShapeError(f"form model weight {fm.weight} != spec weight {n}")
    tau = spec.tau
    # dz_k = dx_k + sum_l tau_{kl} dy_l ; dzbar_k = dx_k + conj(tau)_{kl} dy_l
    P = np.zeros((2 * d, 2 * d), dtype=complex)
    P[:d, :d] = np.eye(d)
    P[:d, d:] = tau
    P[d:, :d] = np.eye(d)
    P[d:, d:] = np.conj(tau)

    # weight-n monomials as sorted subsets of {0..2d-1}; complex generators
    # 0..d-1 = dz, d..2d-1 = dzbar; rational generators 0..d-1 = dx, d.. = dy
    subsets = list(combinations(range(2 * d), n))
    sub_pos = {S: k for k, S in enumerate(subsets)}

    # FormModel basis order -> subset order permutation
    fm_to_subset = []
    for i in range(n + 1):
        for I, J in monomials(d, n - i, i):
            fm_to_subset.append(sub_pos[tuple(list(I) + [d + j for j in J])])

    m = len(subsets)
    M = np.zeros((m, m), dtype=complex)   # rational coeffs = M @ complex coeffs
    for cs, S in enumerate(subsets):
        rows = P[list(S), :]
        for ct, T in enumerate(subsets):
            M[ct, cs] = _det(rows[:, list(T)])

    perm = np.zeros((m, m))
    for fm_col, sub_col in enumerate(fm_to_subset):
        perm[sub_col, fm_col] = 1.0
    to_rational = M @ perm
    to_complex = np.linalg.inv(to_rational)

    names = [f"dx{i+1}" for i in range(d)] + [f"dy{i+1}" for i in range(d)]
    rational_labels = ["^".join(names[g] for g in S) for S in subsets]
    return RationalStructure(d=d, weight=n, h1_matrix=P,
                             to_rational=to_rational, to_complex=to_complex,
                             rational_labels=rational_labels)


def _det(M: np.ndarray) -> complex:
    if M.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(M))
