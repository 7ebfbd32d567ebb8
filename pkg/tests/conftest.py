from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hodgevar import BeltramiSeries, TorusSpec, build_torus_model
from hodgevar.series import ArraySeries


@pytest.fixture
def torus2():
    """Standard d=2 weight-2 torus model."""
    spec = TorusSpec(d=2, tau=1j * np.eye(2), weight=2)
    dc, fm, ab = build_torus_model(spec)
    return spec, dc, fm, ab


@pytest.fixture
def torus3w2():
    spec = TorusSpec(d=3, tau=1j * np.eye(3), weight=2)
    dc, fm, ab = build_torus_model(spec)
    return spec, dc, fm, ab


def linear_torus_family(dc, matrix_coeffs, cutoff=4):
    """Beltrami family from a list of (exponents, d x d matrix) terms."""
    n1 = dc.dims[1]
    coeffs = {}
    for exps, M in matrix_coeffs:
        vec = np.zeros(n1, dtype=complex)
        for m, (a, b) in enumerate(dc.a1_matrix_positions):
            vec[m] = M[a, b]
        key = tuple(exps)
        coeffs[key] = coeffs.get(key, 0) + vec
    num_vars = len(matrix_coeffs[0][0])
    return BeltramiSeries(dc=dc, series=ArraySeries(num_vars, cutoff, (n1,), coeffs))


def full_linear_family(dc, cutoff=4, scale=1.0):
    """The N = d^2 family phi = sum_{ab} t_{ab} (d/dz_a (x) dzbar_b)."""
    n1 = dc.dims[1]
    coeffs = {}
    for m in range(n1):
        e = tuple(1 if k == m else 0 for k in range(n1))
        vec = np.zeros(n1, dtype=complex)
        vec[m] = scale
        coeffs[e] = vec
    return BeltramiSeries(dc=dc, series=ArraySeries(n1, cutoff, (n1,), coeffs))


def random_torus_family(dc, rng, cutoff=4, num_vars=None, max_extra_degree=2,
                        scale=0.5):
    """Random family: random linear part plus a few random higher terms."""
    n1 = dc.dims[1]
    N = n1 if num_vars is None else num_vars
    coeffs = {}
    for mu in range(N):
        e = tuple(1 if k == mu else 0 for k in range(N))
        coeffs[e] = scale * (rng.standard_normal(n1) + 1j * rng.standard_normal(n1)) / n1
    for _ in range(max_extra_degree):
        deg = int(rng.integers(2, cutoff + 1))
        e = [0] * N
        for _ in range(deg):
            e[int(rng.integers(0, N))] += 1
        key = tuple(e)
        coeffs[key] = coeffs.get(key, 0) + \
            scale * (rng.standard_normal(n1) + 1j * rng.standard_normal(n1)) / n1
    return BeltramiSeries(dc=dc, series=ArraySeries(N, cutoff, (n1,), coeffs))
