"""Seeded synthetic models for exercising the machinery off the torus.

Three families:

* :func:`random_deformation_complex` -- random dbar maps with honest Hodge
  decompositions (adjoints are conjugate transposes, G is the pseudoinverse
  of the Laplacian) and an optional random graded-symmetric bracket.  The
  linear-algebra identities hold exactly; no compatibility between the
  bracket and dbar is imposed, so these models exercise the recursion and
  the operator algebra but not the integrability statements.
* :func:`lie_deformation_complex` -- dbar = 0, G = 0, H = id with a random
  graded-symmetric bracket: the Beltrami series is exactly linear and
  dbar phi - (1/2)[phi, phi] = -(1/2)[phi, phi], so the integrability
  residual vanishes exactly on the obstruction zero set.
* :func:`random_form_model` -- a weight-2 bigraded space with nonzero T and
  random contraction tensors respecting the type shifts, for the Neumann
  back-substitution contract.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .model import AdaptedBasis, DeformationComplex, FormModel, adapted_basis


def _orthonormal_kernel_basis(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker(M) as columns (M acting on column vectors)."""
    if M.shape[1] == 0:
        return np.zeros((0, 0), dtype=complex)
    u, s, vh = np.linalg.svd(M)
    tol = max(M.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > max(tol, 1e-12)))
    return vh[rank:, :].conj().T


def random_deformation_complex(seed: int, dims: Tuple[int, int, int] = (2, 4, 3),
                               rank0: int = 1, rank1: int = 1,
                               bracket_scale: float = 1.0,
                               with_bracket: bool = True) -> DeformationComplex:
    rng = np.random.default_rng(seed)
    n0, n1, n2 = dims

    def cmat(r, c):
        return rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))

    d0 = cmat(n1, n0)
    if rank0 < min(n0, n1):
        u, s, vh = np.linalg.svd(d0, full_matrices=False)
        s[rank0:] = 0.0
        d0 = (u * s) @ vh
    # dbar1 kills the image of dbar0
    u, s, vh = np.linalg.svd(d0, full_matrices=True)
    img_rank = int(np.sum(s > 1e-12)) if s.size else 0
    proj_perp = np.eye(n1) - u[:, :img_rank] @ u[:, :img_rank].conj().T
    d1 = cmat(n2, n1) @ proj_perp
    if rank1 < min(n1, n2):
        uu, ss, vvh = np.linalg.svd(d1, full_matrices=False)
        ss[rank1:] = 0.0
        d1 = (uu * ss) @ vvh

    ds1 = d0.conj().T
    ds2 = d1.conj().T
    box0 = ds1 @ d0
    box1 = d0 @ ds1 + ds2 @ d1
    box2 = d1 @ ds2
    g0, g1, g2 = (np.linalg.pinv(b, hermitian=True) for b in (box0, box1, box2))
    h0 = np.eye(n0) - g0 @ box0
    h1 = np.eye(n1) - g1 @ box1
    h2 = np.eye(n2) - g2 @ box2

    if with_bracket:
        B = bracket_scale * (rng.standard_normal((n1, n1, n2))
                             + 1j * rng.standard_normal((n1, n1, n2)))
        B = (B + np.swapaxes(B, 0, 1)) / 2
    else:
        B = np.zeros((n1, n1, n2), dtype=complex)

    return DeformationComplex(
        dims=dims, dbar0=d0, dbar1=d1, dbar_star1=ds1, dbar_star2=ds2,
        green0=g0, green1=g1, green2=g2, harm0=h0, harm1=h1, harm2=h2,
        harmonic1=_orthonormal_kernel_basis(np.vstack([d1, ds1])),
        harmonic2=_orthonormal_kernel_basis(ds2),
        bracket=B)


def lie_deformation_complex(seed: int, dims: Tuple[int, int, int] = (1, 3, 2),
                            bracket_scale: float = 1.0) -> DeformationComplex:
    """Formal model with zero differential: phi(t) stays linear and the base
    is the zero set of the (purely quadratic) obstruction."""
    rng = np.random.default_rng(seed)
    n0, n1, n2 = dims
    B = bracket_scale * (rng.standard_normal((n1, n1, n2))
                         + 1j * rng.standard_normal((n1, n1, n2)))
    B = (B + np.swapaxes(B, 0, 1)) / 2
    zeros = lambda r, c: np.zeros((r, c), dtype=complex)
    return DeformationComplex(
        dims=dims,
        dbar0=zeros(n1, n0), dbar1=zeros(n2, n1),
        dbar_star1=zeros(n0, n1), dbar_star2=zeros(n1, n2),
        green0=zeros(n0, n0), green1=zeros(n1, n1), green2=zeros(n2, n2),
        harm0=np.eye(n0, dtype=complex), harm1=np.eye(n1, dtype=complex),
        harm2=np.eye(n2, dtype=complex),
        harmonic1=np.eye(n1, dtype=complex), harmonic2=np.eye(n2, dtype=complex),
        bracket=B)


def random_form_model(seed: int, dims: Tuple[int, int, int] = (1, 3, 1),
                      num_contractions: int = 2, tscale: float = 0.7
                      ) -> Tuple[FormModel, AdaptedBasis]:
    """Weight-2 model with nonzero T; harmonic bases span the full blocks
    and the level dims are conjugation-symmetric (dims[0] == dims[2])."""
    rng = np.random.default_rng(seed)
    h20, h11, h02 = dims
    if h20 != h02:
        raise ValueError("conjugation needs dims[0] == dims[2]")
    total = h20 + h11 + h02
    offs = np.cumsum([0, h20, h11, h02])
    blocks = [slice(int(offs[i]), int(offs[i + 1])) for i in range(3)]

    def cmat(r, c, scale=1.0):
        return scale * (rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c)))

    # T raises level i to i-1; contractions lower level i to i+1
    tform = np.zeros((total, total), dtype=complex)
    tform[blocks[0], blocks[1]] = cmat(h20, h11, tscale)
    tform[blocks[1], blocks[2]] = cmat(h11, h02, tscale)
    contractions = []
    for _ in range(num_contractions):
        C = np.zeros((total, total), dtype=complex)
        C[blocks[1], blocks[0]] = cmat(h11, h20)
        C[blocks[2], blocks[1]] = cmat(h02, h11)
        contractions.append(C)

    # J: swap levels 0 <-> 2 entrywise, pick a unitary middle involution
    jmat = np.zeros((total, total), dtype=complex)
    jmat[blocks[2], blocks[0]] = np.eye(h20)
    jmat[blocks[0], blocks[2]] = np.eye(h02)
    jmat[blocks[1], blocks[1]] = np.eye(h11)

    harm = []
    for i in range(3):
        E = np.zeros((total, int(offs[i + 1] - offs[i])), dtype=complex)
        for k in range(E.shape[1]):
            E[int(offs[i]) + k, k] = 1.0
        harm.append(E)

    labels = [[f"w{i}_{k}" for k in range(int(offs[i + 1] - offs[i]))] for i in range(3)]
    fm = FormModel(weight=2, level_dims=[h20, h11, h02], blocks=blocks,
                   labels=labels, tform=tform, contractions=contractions,
                   jmat=jmat, gram=np.eye(total, dtype=complex), harm=harm)
    return fm, adapted_basis(fm, labels=labels)
