"""Independent oracles for the test suite.

Everything here recomputes expected values through representations that
share nothing with the library pipelines: dense dict-of-generator-tuples
exterior algebra, naive double-loop convolutions, finite differences, and
deformed-coframe substitution.  Oracles are deliberately slow and literal.
"""

from __future__ import annotations

from itertools import combinations, permutations
from typing import Dict, List, Tuple

import numpy as np


# ---------------------------------------------------------------------------
# naive series oracles
# ---------------------------------------------------------------------------

def convolve_coeffs(a: Dict[tuple, complex], b: Dict[tuple, complex],
                    cutoff: int) -> Dict[tuple, complex]:
    """Double-loop Cauchy product over all index pairs."""
    out: Dict[tuple, complex] = {}
    for e, ce in a.items():
        for f, cf in b.items():
            g = tuple(x + y for x, y in zip(e, f))
            if sum(g) <= cutoff:
                out[g] = out.get(g, 0.0) + ce * cf
    return {k: v for k, v in out.items() if v != 0}


def finite_difference(fn, point: np.ndarray, mu: int, h: float = 1e-6) -> complex:
    """Central difference along the complex coordinate t_mu."""
    up = point.copy(); up[mu] += h
    dn = point.copy(); dn[mu] -= h
    return (fn(up) - fn(dn)) / (2 * h)


# ---------------------------------------------------------------------------
# dense exterior algebra on generators (dz_1..dz_d, dzbar_1..dzbar_d)
# ---------------------------------------------------------------------------
# forms are dicts: sorted generator tuple -> coefficient; generator g < d is
# dz_{g+1}, generator g >= d is dzbar_{g-d+1}

Form = Dict[Tuple[int, ...], complex]


def wedge(a: Form, b: Form) -> Form:
    out: Form = {}
    for ga, ca in a.items():
        for gb, cb in b.items():
            gens = ga + gb
            if len(set(gens)) != len(gens):
                continue
            order = np.argsort(gens, kind="stable")
            sign = perm_sign(list(order))
            key = tuple(sorted(gens))
            out[key] = out.get(key, 0.0) + sign * ca * cb
    return {k: v for k, v in out.items() if v != 0}


def perm_sign(order: List[int]) -> int:
    sign = 1
    seen = [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


def form_conjugate(d: int, form: Form) -> Form:
    """Complex conjugation: swaps dz_k <-> dzbar_k and conjugates coefficients."""
    out: Form = {}
    for gens, c in form.items():
        swapped = [g + d if g < d else g - d for g in gens]
        order = np.argsort(swapped, kind="stable")
        out[tuple(sorted(swapped))] = out.get(tuple(sorted(swapped)), 0.0) \
            + perm_sign(list(order)) * np.conj(c)
    return {k: v for k, v in out.items() if v != 0}


def contract(d: int, phi: np.ndarray, form: Form) -> Form:
    """i_phi as a derivation: dz_a -> sum_b phi[a,b] dzbar_b, dzbar -> 0."""
    out: Form = {}
    for gens, c in form.items():
        for slot, g in enumerate(gens):
            if g >= d:
                continue
            rest = gens[:slot] + gens[slot + 1:]
            for b in range(d):
                coeff = phi[g, b]
                if coeff == 0:
                    continue
                target = d + b
                if target in rest:
                    continue
                seq = gens[:slot] + (target,) + gens[slot + 1:]
                order = np.argsort(seq, kind="stable")
                key = tuple(sorted(seq))
                out[key] = out.get(key, 0.0) + perm_sign(list(order)) * c * coeff
    return {k: v for k, v in out.items() if v != 0}


def monomial_form(d: int, I, J, coeff: complex = 1.0) -> Form:
    gens = tuple(sorted(tuple(I) + tuple(d + j for j in J)))
    assert len(gens) == len(I) + len(J)
    return {gens: coeff}


def form_to_vector(fm, d: int, form: Form) -> np.ndarray:
    """Express an oracle form in the FormModel monomial coordinates."""
    v = np.zeros(fm.dim, dtype=complex)
    offset = 0
    for i in range(fm.weight + 1):
        p, q = fm.weight - i, i
        for k, label in enumerate(fm.labels[i]):
            I, J = label_to_IJ(label)
            gens = tuple(sorted(tuple(I) + tuple(d + j for j in J)))
            if gens in form:
                v[offset + k] = form[gens]
        offset += fm.level_dims[i]
    return v


def vector_to_form(fm, d: int, v: np.ndarray) -> Form:
    out: Form = {}
    offset = 0
    for i in range(fm.weight + 1):
        for k, label in enumerate(fm.labels[i]):
            c = v[offset + k]
            if c != 0:
                I, J = label_to_IJ(label)
                gens = tuple(sorted(tuple(I) + tuple(d + j for j in J)))
                out[gens] = out.get(gens, 0.0) + c
        offset += fm.level_dims[i]
    return out


def label_to_IJ(label: str):
    I, J = [], []
    if label == "1":
        return tuple(I), tuple(J)
    for part in label.split("^"):
        if part.startswith("dzb"):
            J.append(int(part[3:]) - 1)
        else:
            I.append(int(part[2:]) - 1)
    return tuple(I), tuple(J)


# ---------------------------------------------------------------------------
# deformed-coframe oracle
# ---------------------------------------------------------------------------

def coframe_change(d: int, phi: np.ndarray) -> np.ndarray:
    """Matrix C with dw-monomial coeffs = C @ dz-monomial coeffs is built per
    weight; here: generator rows (dw; dwbar) = M (dz; dzbar)."""
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    M[:d, :d] = np.eye(d)
    M[:d, d:] = phi
    M[d:, :d] = np.conj(phi)
    M[d:, d:] = np.eye(d)
    return M


def dz_to_dw_matrix(d: int, weight: int, phi: np.ndarray) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """Coefficient transport: a form sum c_S e_S (dz-monomials, S = sorted
    generator subsets) equals sum (out @ c)_T f_T (dw-monomials)."""
    Minv = np.linalg.inv(coframe_change(d, phi))
    subsets = list(combinations(range(2 * d), weight))
    m = len(subsets)
    out = np.zeros((m, m), dtype=complex)
    for cs, S in enumerate(subsets):
        rows = Minv[list(S), :]
        for ct, T in enumerate(subsets):
            out[ct, cs] = minor_det(rows[:, list(T)])
    return out, subsets


def minor_det(M: np.ndarray) -> complex:
    """Leibniz-expansion determinant (independent of np.linalg.det)."""
    k = M.shape[0]
    if k == 0:
        return 1.0
    total = 0.0 + 0.0j
    for perm in permutations(range(k)):
        sign = perm_sign(list(perm))
        prod = 1.0 + 0.0j
        for i, j in enumerate(perm):
            prod *= M[i, j]
        total += sign * prod
    return total


def unbarred_count(subset: Tuple[int, ...], d: int) -> int:
    return sum(1 for g in subset if g < d)


def in_deformed_fp(fm, d: int, phi: np.ndarray, v: np.ndarray, p: int,
                   tol: float = 1e-9) -> Tuple[bool, float]:
    """Membership of a class (FormModel coordinates) in F^p of the deformed
    structure: dw-components with fewer than p unbarred generators vanish."""
    C, subsets = dz_to_dw_matrix(d, fm.weight, phi)
    c = _fm_vector_to_subset_coeffs(fm, d, v, subsets)
    dw = C @ c
    worst = 0.0
    for k, S in enumerate(subsets):
        if unbarred_count(S, d) < p:
            worst = max(worst, abs(dw[k]))
    return worst < tol, worst


def _fm_vector_to_subset_coeffs(fm, d: int, v: np.ndarray,
                                subsets: List[Tuple[int, ...]]) -> np.ndarray:
    pos = {S: k for k, S in enumerate(subsets)}
    c = np.zeros(len(subsets), dtype=complex)
    offset = 0
    for i in range(fm.weight + 1):
        for k, label in enumerate(fm.labels[i]):
            I, J = label_to_IJ(label)
            gens = tuple(sorted(tuple(I) + tuple(d + j for j in J)))
            c[pos[gens]] += v[offset + k]
        offset += fm.level_dims[i]
    return c


def oracle_hodge_extension(fm, ab, d: int, phi: np.ndarray, alpha_p: np.ndarray):
    """Solve the extension problem by brute force in the deformed coframe:
    find the class with prescribed middle component that is real and lies in
    F^p of the deformed structure.  Returns the class in FormModel monomial
    coordinates."""
    n = fm.weight
    p = n // 2
    offs = np.concatenate([[0], np.cumsum(fm.level_dims)])
    total = int(offs[-1])

    fixed = np.zeros(total, dtype=complex)
    fixed[offs[p]:offs[p + 1]] = alpha_p
    free_idx = [k for k in range(total) if not offs[p] <= k < offs[p + 1]]

    C, subsets = dz_to_dw_matrix(d, n, phi)
    bad_rows = [k for k, S in enumerate(subsets) if unbarred_count(S, d) < p]

    # conjugation on monomial coefficients (own construction)
    conj_mat = np.zeros((total, total), dtype=complex)
    labels_flat = []
    for i in range(n + 1):
        labels_flat += [(i, lab) for lab in fm.labels[i]]
    pos = {}
    for k, (i, lab) in enumerate(labels_flat):
        I, J = label_to_IJ(lab)
        pos[(tuple(I), tuple(J))] = k
    for k, (i, lab) in enumerate(labels_flat):
        I, J = label_to_IJ(lab)
        conj_mat[pos[(J, I)], k] = (-1) ** (len(I) * len(J))

    def conditions(v: np.ndarray) -> np.ndarray:
        subset_c = _fm_vector_to_subset_coeffs(fm, d, v, subsets)
        dw = C @ subset_c
        fp = dw[bad_rows] if bad_rows else np.zeros(0, dtype=complex)
        real = conj_mat @ np.conj(v) - v
        return np.concatenate([fp, real])

    m = len(free_idx)
    base = conditions(fixed)
    A = np.zeros((2 * base.shape[0], 2 * m))
    for col, k in enumerate(free_idx):
        e = np.zeros(total, dtype=complex); e[k] = 1.0
        dr = conditions(fixed + e) - base
        di = conditions(fixed + 1j * e) - base
        A[: base.shape[0], col] = dr.real
        A[base.shape[0]:, col] = dr.imag
        A[: base.shape[0], m + col] = di.real
        A[base.shape[0]:, m + col] = di.imag
    rhs = -np.concatenate([base.real, base.imag])
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    v = fixed.copy()
    for col, k in enumerate(free_idx):
        v[k] += x[col] + 1j * x[m + col]
    residual = float(np.max(np.abs(conditions(v)))) if conditions(v).size else 0.0
    return v, residual


# ---------------------------------------------------------------------------
# misc oracles
# ---------------------------------------------------------------------------

def singular_values_via_eigs(M: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh(M.conj().T @ M)
    return np.sqrt(np.clip(eigs, 0.0, None))[::-1]


def quadratic_phi_oracle(dc, theta: np.ndarray) -> Dict[tuple, np.ndarray]:
    """Single-step tensor contraction for the degree-2 recursion term:
    (1/2) dbar* G [theta_i, theta_j] t_i t_j, returned per multi-index."""
    N = theta.shape[1]
    out: Dict[tuple, np.ndarray] = {}
    op = 0.5 * dc.dbar_star2 @ dc.green2
    for i in range(N):
        for j in range(N):
            br = np.einsum("a,b,abk->k", theta[:, i], theta[:, j], dc.bracket)
            val = op @ br
            e = [0] * N
            e[i] += 1
            e[j] += 1
            e = tuple(e)
            out[e] = out.get(e, np.zeros(dc.dims[1], dtype=complex)) + val
    return {k: v for k, v in out.items() if np.any(np.abs(v) > 0)}
