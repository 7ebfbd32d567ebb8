"""Finite-dimensional stand-ins for the harmonic theory of a compact Kahler
manifold.

Two structures are carried:

* :class:`DeformationComplex` -- the spaces A^0, A^1, A^2 modeling
  T^{1,0}-valued (0,q)-forms, with dbar, its adjoint, the Green operator,
  the harmonic projection and the bracket, all as explicit matrices.
* :class:`FormModel` -- the bigraded space W = (+) W^{p,q} of weight-n forms
  with the type-shifting operators: T (raises p), the contraction tensors
  C_m (lower p, one per A^1 basis element), the antilinear conjugation J and
  a Hermitian inner product.

Conventions.  All inner products are v^H G u (linear in the first slot).
The bracket on A^1 is graded symmetric, [a, b] = [b, a], as required for
[phi, phi] to drive the deformation recursion.  Adjoints are with respect to
the stored Gram data; the builders in :mod:`hodgevar.torus` and
:mod:`hodgevar.synthetic` use orthonormal coordinates so adjoints are plain
conjugate transposes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ShapeError


# ---------------------------------------------------------------------------
# deformation complex
# ---------------------------------------------------------------------------

@dataclass
class DeformationComplex:
    """Three-term complex A^0 -> A^1 -> A^2 with harmonic theory and bracket.

    The bracket tensor has entries ``bracket[a, b, k]`` giving the k-th A^2
    coordinate of [e_a, e_b] for A^1 basis vectors e_a, e_b, and is graded
    symmetric in (a, b).  ``harmonic1`` / ``harmonic2`` hold orthonormal
    bases of the harmonic subspaces as columns.
    """

    dims: Tuple[int, int, int]
    dbar0: np.ndarray          # A^0 -> A^1
    dbar1: np.ndarray          # A^1 -> A^2
    dbar_star1: np.ndarray     # A^1 -> A^0
    dbar_star2: np.ndarray     # A^2 -> A^1
    green0: np.ndarray
    green1: np.ndarray
    green2: np.ndarray
    harm0: np.ndarray
    harm1: np.ndarray
    harm2: np.ndarray
    harmonic1: np.ndarray      # columns: orthonormal basis of harmonic A^1
    harmonic2: np.ndarray      # columns: orthonormal basis of harmonic A^2
    bracket: np.ndarray        # (n1, n1, n2), symmetric in first two axes
    # for chartwise-constant models: position (a, b) of each A^1 basis
    # element in the coefficient matrix phi^a_b, plus the chart dimension d
    chart_dim: Optional[int] = None
    a1_matrix_positions: Optional[List[Tuple[int, int]]] = None

    def bracket_pair(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """[u, v] in A^2 coordinates for numeric A^1 vectors u, v."""
        return np.einsum("a,b,abk->k", u, v, self.bracket)

    def num_parameters(self) -> int:
        return self.harmonic1.shape[1]

    def phi_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        """Assemble the chartwise constant d x d coefficient matrix from A^1
        coordinates; only available when the model declares chart data."""
        if self.chart_dim is None or self.a1_matrix_positions is None:
            raise ShapeError("model carries no chartwise matrix structure")
        mat = np.zeros((self.chart_dim, self.chart_dim), dtype=complex)
        for m, (a, b) in enumerate(self.a1_matrix_positions):
            mat[a, b] += coeffs[m]
        return mat


# ---------------------------------------------------------------------------
# weight-n form model
# ---------------------------------------------------------------------------

@dataclass
class FormModel:
    """Bigraded weight-n space with type-shifting operators.

    Coordinates on W concatenate the (p, q) blocks in order of increasing q
    (level i = q, p = n - i).  ``blocks[i]`` is the slice of level i,
    ``labels[i]`` the human-readable names of its basis monomials.
    ``harm[i]`` has orthonormal (w.r.t. gram) columns spanning the harmonic
    subspace of level i, supported inside the level's slice.
    """

    weight: int
    level_dims: List[int]
    blocks: List[slice]
    labels: List[List[str]]
    tform: np.ndarray                 # W -> W, (p,q) -> (p+1,q-1)
    contractions: List[np.ndarray]    # per A^1 basis element, (p,q) -> (p-1,q+1)
    jmat: np.ndarray                  # J(v) = jmat @ conj(v), (p,q) -> (q,p)
    gram: np.ndarray                  # Hermitian positive definite, block diagonal
    harm: List[np.ndarray]            # per level, (dim W, h_i)

    @property
    def dim(self) -> int:
        return self.tform.shape[0]

    @property
    def hodge_numbers(self) -> List[int]:
        return [E.shape[1] for E in self.harm]

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.conj(v) @ self.gram @ u)

    def conj_form(self, v: np.ndarray) -> np.ndarray:
        return self.jmat @ np.conj(v)

    def level_of(self, q: int) -> slice:
        return self.blocks[q]


def harmonic_project(fm: FormModel, v: np.ndarray) -> np.ndarray:
    """Gram-orthogonal projection of v onto the total harmonic subspace."""
    v = np.asarray(v, dtype=complex)
    out = np.zeros_like(v)
    for E in fm.harm:
        if E.shape[1]:
            out += E @ (E.conj().T @ (fm.gram @ v))
    return out


def harmonic_coefficients(fm: FormModel, i: int, v: np.ndarray) -> np.ndarray:
    """Coefficients of the level-i harmonic part of v in the basis harm[i]."""
    return fm.harm[i].conj().T @ (fm.gram @ v)


def contraction_at(fm: FormModel, coeffs: Sequence[complex]) -> np.ndarray:
    """The contraction operator for a fixed A^1 coefficient vector,
    Sum_m coeffs[m] * C_m; shifts type (p,q) -> (p-1,q+1)."""
    coeffs = np.asarray(coeffs, dtype=complex).ravel()
    if coeffs.shape[0] != len(fm.contractions):
        raise ShapeError(
            f"{coeffs.shape[0]} coefficients for {len(fm.contractions)} contraction tensors")
    out = np.zeros((fm.dim, fm.dim), dtype=complex)
    for c, C in zip(coeffs, fm.contractions):
        if c != 0:
            out += c * C
    return out


# ---------------------------------------------------------------------------
# adapted basis
# ---------------------------------------------------------------------------

@dataclass
class AdaptedBasis:
    """Cohomology classes eta_(i) with harmonic representatives in a
    FormModel, plus the conjugation pairing J(eta~_(i)) = K_(i) . eta~_(n-i)."""

    weight: int
    labels: List[List[str]]
    level_dims: List[int]
    kmats: List[np.ndarray]   # K_(i), shape (h_i, h_{n-i})

    @property
    def total_dim(self) -> int:
        return sum(self.level_dims)


def adapted_basis(fm: FormModel, labels: Optional[List[List[str]]] = None) -> AdaptedBasis:
    """Derive the adapted basis bookkeeping (dimensions, conjugation pairing)
    from a form model with orthonormal harmonic bases."""
    n = fm.weight
    kmats = []
    for i in range(n + 1):
        E_i, E_conj = fm.harm[i], fm.harm[n - i]
        # J(eta~_(i),r) expanded in eta~_(n-i): K[r, c]
        JE = fm.jmat @ np.conj(E_i)
        kmats.append((E_conj.conj().T @ (fm.gram @ JE)).T)
    if labels is None:
        labels = [[f"eta{i}_{r}" for r in range(fm.hodge_numbers[i])]
                  for i in range(n + 1)]
    return AdaptedBasis(weight=n, labels=labels,
                        level_dims=list(fm.hodge_numbers), kmats=kmats)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationEntry:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass
class ValidationReport:
    entries: List[ValidationEntry] = field(default_factory=list)

    def add(self, name: str, residual: float, tolerance: float) -> None:
        self.entries.append(ValidationEntry(name, float(residual), tolerance))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> List[ValidationEntry]:
        return [e for e in self.entries if not e.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [
                {"name": e.name, "residual": e.residual,
                 "tolerance": e.tolerance, "passed": e.passed}
                for e in self.entries
            ],
        }


def _opnorm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def validate(dc: DeformationComplex, fm: FormModel, ab: AdaptedBasis) -> ValidationReport:
    """Check every structural identity the machinery relies on; failures are
    report entries, never exceptions."""
    rep = ValidationReport()
    n0, n1, n2 = dc.dims

    # Hodge identities on the deformation complex
    rep.add("dc.complex: dbar1 @ dbar0 = 0", _opnorm(dc.dbar1 @ dc.dbar0), 1e-10)
    rep.add("dc.adjoint: dbar_star1 = dbar0^H", _opnorm(dc.dbar_star1 - dc.dbar0.conj().T), 1e-10)
    rep.add("dc.adjoint: dbar_star2 = dbar1^H", _opnorm(dc.dbar_star2 - dc.dbar1.conj().T), 1e-10)
    box0 = dc.dbar_star1 @ dc.dbar0
    box1 = dc.dbar0 @ dc.dbar_star1 + dc.dbar_star2 @ dc.dbar1
    box2 = dc.dbar1 @ dc.dbar_star2
    for q, (box, G, H, dim) in enumerate(
            [(box0, dc.green0, dc.harm0, n0),
             (box1, dc.green1, dc.harm1, n1),
             (box2, dc.green2, dc.harm2, n2)]):
        eye = np.eye(dim)
        rep.add(f"dc.hodge[{q}]: I = H + G box", _opnorm(eye - H - G @ box), 1e-10)
        rep.add(f"dc.hodge[{q}]: H idempotent", _opnorm(H @ H - H), 1e-10)
        rep.add(f"dc.hodge[{q}]: H self-adjoint", _opnorm(H - H.conj().T), 1e-10)
    rep.add("dc: H1 @ dbar0 = 0", _opnorm(dc.harm1 @ dc.dbar0), 1e-10)
    rep.add("dc: dbar_star1 @ H1 = 0", _opnorm(dc.dbar_star1 @ dc.harm1), 1e-10)
    rep.add("dc: bracket graded symmetry [a,b] = [b,a]",
            float(np.max(np.abs(dc.bracket - np.swapaxes(dc.bracket, 0, 1)))) if dc.bracket.size else 0.0,
            1e-12)
    rep.add("dc: harmonic1 orthonormal",
            _opnorm(dc.harmonic1.conj().T @ dc.harmonic1 - np.eye(dc.harmonic1.shape[1])), 1e-10)
    rep.add("dc: harmonic1 harmonic", _opnorm(dc.harm1 @ dc.harmonic1 - dc.harmonic1), 1e-10)

    # form-model type shifts
    n = fm.weight
    rep.add("fm.T type-shift (p,q)->(p+1,q-1)",
            _type_shift_residual(fm, fm.tform, -1), 1e-12)
    cmax = 0.0
    for C in fm.contractions:
        cmax = max(cmax, _type_shift_residual(fm, C, +1))
    rep.add("fm.C type-shift (p,q)->(p-1,q+1)", cmax, 1e-12)

    # conjugation and Gram
    JJ = fm.jmat @ np.conj(fm.jmat)
    rep.add("fm.J involution", _opnorm(JJ - np.eye(fm.dim)), 1e-10)
    rep.add("fm.J swaps (p,q)<->(q,p)", _conj_shift_residual(fm), 1e-12)
    rep.add("fm.gram Hermitian", _opnorm(fm.gram - fm.gram.conj().T), 1e-12)
    eigs = np.linalg.eigvalsh((fm.gram + fm.gram.conj().T) / 2)
    rep.add("fm.gram positive definite (residual = max(0, -min eig))",
            max(0.0, -float(eigs.min())), 0.0)
    for i, E in enumerate(fm.harm):
        if E.shape[1]:
            rep.add(f"fm.harm[{i}] orthonormal",
                    _opnorm(E.conj().T @ fm.gram @ E - np.eye(E.shape[1])), 1e-10)

    # K pairing involution
    for i in range(n + 1):
        Ki, Kni = ab.kmats[i], ab.kmats[n - i]
        if Ki.size:
            rep.add(f"ab.K[{n-i}] conj(K[{i}]) = I",
                    _opnorm(Kni @ np.conj(Ki) - np.eye(Ki.shape[0])), 1e-10)
    return rep


def _type_shift_residual(fm: FormModel, M: np.ndarray, dq: int) -> float:
    """Norm of the part of M that does not shift level i to level i + dq."""
    worst = 0.0
    for i in range(fm.weight + 1):
        src = fm.blocks[i]
        img = M[:, src]
        if img.size == 0:
            continue
        tgt = i + dq
        for j in range(fm.weight + 1):
            if j == tgt:
                continue
            part = img[fm.blocks[j], :]
            if part.size:
                worst = max(worst, float(np.max(np.abs(part))))
        if not (0 <= tgt <= fm.weight):
            worst = max(worst, float(np.max(np.abs(img))))
    return worst


def _conj_shift_residual(fm: FormModel) -> float:
    worst = 0.0
    n = fm.weight
    for i in range(n + 1):
        img = fm.jmat[:, fm.blocks[i]]
        if img.size == 0:
            continue
        for j in range(n + 1):
            if j == n - i:
                continue
            part = img[fm.blocks[j], :]
            if part.size:
                worst = max(worst, float(np.max(np.abs(part))))
    return worst


# ---------------------------------------------------------------------------
# JSON serialization (model-definition files)
# ---------------------------------------------------------------------------

def _mat_to_json(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _mat_from_json(data, rows: int, cols: int) -> np.ndarray:
    M = np.array([[complex(c[0], c[1]) for c in row] for row in data],
                 dtype=complex).reshape(rows, cols)
    return M


def _tensor_to_json(B: np.ndarray) -> list:
    return [[[[float(z.real), float(z.imag)] for z in row] for row in page]
            for page in B]


def _tensor_from_json(data, shape) -> np.ndarray:
    B = np.zeros(shape, dtype=complex)
    for a, page in enumerate(data):
        for b, row in enumerate(page):
            for k, c in enumerate(row):
                B[a, b, k] = complex(c[0], c[1])
    return B


def model_to_dict(dc: DeformationComplex, fm: FormModel, ab: AdaptedBasis) -> dict:
    n0, n1, n2 = dc.dims
    return {
        "deformation_complex": {
            "dims": list(dc.dims),
            "dbar0": _mat_to_json(dc.dbar0),
            "dbar1": _mat_to_json(dc.dbar1),
            "dbar_star1": _mat_to_json(dc.dbar_star1),
            "dbar_star2": _mat_to_json(dc.dbar_star2),
            "green0": _mat_to_json(dc.green0),
            "green1": _mat_to_json(dc.green1),
            "green2": _mat_to_json(dc.green2),
            "harm0": _mat_to_json(dc.harm0),
            "harm1": _mat_to_json(dc.harm1),
            "harm2": _mat_to_json(dc.harm2),
            "harmonic1": _mat_to_json(dc.harmonic1),
            "harmonic2": _mat_to_json(dc.harmonic2),
            "bracket": _tensor_to_json(dc.bracket),
            "chart_dim": dc.chart_dim,
            "a1_matrix_positions": [list(p) for p in dc.a1_matrix_positions]
            if dc.a1_matrix_positions is not None else None,
        },
        "form_model": {
            "weight": fm.weight,
            "level_dims": list(fm.level_dims),
            "labels": fm.labels,
            "tform": _mat_to_json(fm.tform),
            "contractions": [_mat_to_json(C) for C in fm.contractions],
            "jmat": _mat_to_json(fm.jmat),
            "gram": _mat_to_json(fm.gram),
            "harm": [_mat_to_json(E) for E in fm.harm],
        },
        "adapted_basis": {
            "weight": ab.weight,
            "labels": ab.labels,
            "level_dims": list(ab.level_dims),
            "kmats": [_mat_to_json(K) for K in ab.kmats],
        },
    }


def model_from_dict(data: dict) -> Tuple[DeformationComplex, FormModel, AdaptedBasis]:
    d = data["deformation_complex"]
    n0, n1, n2 = d["dims"]
    dc = DeformationComplex(
        dims=(n0, n1, n2),
        dbar0=_mat_from_json(d["dbar0"], n1, n0),
        dbar1=_mat_from_json(d["dbar1"], n2, n1),
        dbar_star1=_mat_from_json(d["dbar_star1"], n0, n1),
        dbar_star2=_mat_from_json(d["dbar_star2"], n1, n2),
        green0=_mat_from_json(d["green0"], n0, n0),
        green1=_mat_from_json(d["green1"], n1, n1),
        green2=_mat_from_json(d["green2"], n2, n2),
        harm0=_mat_from_json(d["harm0"], n0, n0),
        harm1=_mat_from_json(d["harm1"], n1, n1),
        harm2=_mat_from_json(d["harm2"], n2, n2),
        harmonic1=_mat_from_json(d["harmonic1"], n1, len(d["harmonic1"][0]) if d["harmonic1"] else 0),
        harmonic2=_mat_from_json(d["harmonic2"], n2, len(d["harmonic2"][0]) if d["harmonic2"] else 0),
        bracket=_tensor_from_json(d["bracket"], (n1, n1, n2)),
        chart_dim=d.get("chart_dim"),
        a1_matrix_positions=[tuple(p) for p in d["a1_matrix_positions"]]
        if d.get("a1_matrix_positions") is not None else None,
    )
    f = data["form_model"]
    dims = f["level_dims"]
    total = sum(dims)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    blocks = [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(len(dims))]
    fm = FormModel(
        weight=f["weight"],
        level_dims=list(dims),
        blocks=blocks,
        labels=f["labels"],
        tform=_mat_from_json(f["tform"], total, total),
        contractions=[_mat_from_json(C, total, total) for C in f["contractions"]],
        jmat=_mat_from_json(f["jmat"], total, total),
        gram=_mat_from_json(f["gram"], total, total),
        harm=[_mat_from_json(E, total, dims_h) for E, dims_h in
              zip(f["harm"], [len(E[0]) if E and total else 0 for E in f["harm"]])],
    )
    a = data["adapted_basis"]
    ab = AdaptedBasis(
        weight=a["weight"],
        labels=a["labels"],
        level_dims=list(a["level_dims"]),
        kmats=[_mat_from_json(K, a["level_dims"][i],
                              a["level_dims"][a["weight"] - i])
               for i, K in enumerate(a["kmats"])],
    )
    return dc, fm, ab


def save_model(path, dc: DeformationComplex, fm: FormModel, ab: AdaptedBasis) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(dc, fm, ab), fh, sort_keys=True, indent=1)


def load_model(path) -> Tuple[DeformationComplex, FormModel, AdaptedBasis]:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
