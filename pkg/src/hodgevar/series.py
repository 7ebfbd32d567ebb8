"""Truncated multivariate power series over the complex numbers.

All holomorphic-in-t quantities in this package (Beltrami coefficients,
period-matrix entries, locus generators) are polynomials in the deformation
parameters t_1..t_N truncated at a fixed total degree D.  Two carriers are
provided:

* :class:`TruncatedSeries` -- scalar-valued, the public series type;
* :class:`ArraySeries` -- ndarray-valued coefficients, the vectorized
  workhorse used for form-valued and matrix-valued series.

Coefficients are stored sparsely as a dict keyed by exponent multi-indices
(tuples of ints).  Absent keys mean zero.  Truncation is by total degree,
matching the |t|-filtration all order estimates are phrased in.
"""

from __future__ import annotations

from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import DomainError, ShapeError

#: magnitude below which coefficients are considered zero in equality tests
COEFF_FLOOR = 1e-13

MultiIndex = Tuple[int, ...]


def _check_compatible(a, b) -> None:
    if a.num_vars != b.num_vars or a.cutoff != b.cutoff:
        raise ShapeError(
            f"incompatible series: ({a.num_vars} vars, cutoff {a.cutoff}) vs "
            f"({b.num_vars} vars, cutoff {b.cutoff})"
        )


def _add_exponents(e: MultiIndex, f: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(e, f))


class TruncatedSeries:
    """A complex polynomial in N variables modulo total degree > D."""

    __slots__ = ("num_vars", "cutoff", "coeffs")

    def __init__(self, num_vars: int, cutoff: int,
                 coeffs: Dict[MultiIndex, complex] | None = None):
        if num_vars < 1:
            raise ShapeError("num_vars must be positive")
        if cutoff < 0:
            raise ShapeError("cutoff must be non-negative")
        self.num_vars = num_vars
        self.cutoff = cutoff
        cleaned: Dict[MultiIndex, complex] = {}
        for exps, c in (coeffs or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != num_vars or any(e < 0 for e in exps):
                raise ShapeError(f"bad multi-index {exps} for {num_vars} variables")
            if sum(exps) > cutoff:
                continue
            c = complex(c)
            if c != 0:
                cleaned[exps] = c
        self.coeffs = cleaned

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int, cutoff: int) -> "TruncatedSeries":
        return cls(num_vars, cutoff)

    @classmethod
    def constant(cls, value: complex, num_vars: int, cutoff: int) -> "TruncatedSeries":
        return cls(num_vars, cutoff, {(0,) * num_vars: value})

    @classmethod
    def one(cls, num_vars: int, cutoff: int) -> "TruncatedSeries":
        return cls.constant(1.0, num_vars, cutoff)

    @classmethod
    def variable(cls, mu: int, num_vars: int, cutoff: int) -> "TruncatedSeries":
        """The monomial t_mu (mu is 0-based)."""
        if not 0 <= mu < num_vars:
            raise ShapeError(f"variable index {mu} out of range [0, {num_vars})")
        exps = tuple(1 if i == mu else 0 for i in range(num_vars))
        return cls(num_vars, cutoff, {exps: 1.0})

    @classmethod
    def monomial(cls, exps: Iterable[int], coeff: complex,
                 cutoff: int) -> "TruncatedSeries":
        exps = tuple(exps)
        return cls(len(exps), cutoff, {exps: coeff})

    # -- ring operations ----------------------------------------------

    def __add__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.num_vars, self.cutoff)
        _check_compatible(self, other)
        out = dict(self.coeffs)
        for exps, c in other.coeffs.items():
            out[exps] = out.get(exps, 0.0) + c
        return TruncatedSeries(self.num_vars, self.cutoff, out)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.num_vars, self.cutoff,
                               {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.num_vars, self.cutoff)
        return self + (-other)

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.num_vars, self.cutoff,
                                   {e: c * other for e, c in self.coeffs.items()})
        _check_compatible(self, other)
        # contributions are summed in an order symmetric in the two factors,
        # so a*b == b*a holds bitwise
        terms = []
        D = self.cutoff
        for e, ce in self.coeffs.items():
            de = sum(e)
            for f, cf in other.coeffs.items():
                if de + sum(f) > D:
                    continue
                g = _add_exponents(e, f)
                terms.append((g, min(e, f), max(e, f), ce * cf))
        terms.sort(key=lambda t: (t[0], t[1], t[2]))
        out: Dict[MultiIndex, complex] = {}
        for g, _, _, v in terms:
            out[g] = out.get(g, 0.0) + v
        return TruncatedSeries(self.num_vars, self.cutoff, out)

    __rmul__ = __mul__

    def mul(self, other: "TruncatedSeries") -> "TruncatedSeries":
        """Cauchy product truncated at the common total-degree cutoff."""
        return self * other

    def neumann_inverse(self) -> "TruncatedSeries":
        """(1 + u)^{-1} = sum_{k<=D} (-u)^k for u = self with u(0) = 0.

        Raises :class:`DomainError` when the constant term is nonzero, since
        the geometric-series inversion is only guaranteed for perturbations
        of the identity.
        """
        const = self.coeffs.get((0,) * self.num_vars, 0.0)
        if abs(const) > 0:
            raise DomainError(
                f"neumann_inverse needs zero constant term, got {const}")
        acc = TruncatedSeries.one(self.num_vars, self.cutoff)
        term = acc
        for _ in range(self.cutoff):
            term = term * (-self)
            if not term.coeffs:
                break
            acc = acc + term
        return acc

    def partial_derivative(self, mu: int) -> "TruncatedSeries":
        """Formal d/dt_mu (mu is 0-based); degrees above D-1 are exact only
        if the source was exact at D."""
        if not 0 <= mu < self.num_vars:
            raise ShapeError(f"variable index {mu} out of range [0, {self.num_vars})")
        out: Dict[MultiIndex, complex] = {}
        for e, c in self.coeffs.items():
            k = e[mu]
            if k == 0:
                continue
            f = list(e)
            f[mu] = k - 1
            out[tuple(f)] = c * k
        return TruncatedSeries(self.num_vars, self.cutoff, out)

    def evaluate(self, point) -> complex:
        """Evaluate at a complex N-tuple via a per-variable power table."""
        point = np.asarray(point, dtype=complex).ravel()
        if point.shape[0] != self.num_vars:
            raise ShapeError(
                f"point has {point.shape[0]} entries, series has {self.num_vars} variables")
        powers = _power_table(point, self.cutoff)
        total = 0.0 + 0.0j
        for e, c in self.coeffs.items():
            m = c
            for i, k in enumerate(e):
                if k:
                    m = m * powers[i][k]
            total += m
        return total

    # -- inspection ----------------------------------------------------

    def coefficient(self, exps: Iterable[int]) -> complex:
        return self.coeffs.get(tuple(exps), 0.0)

    def min_total_degree(self, floor: float = COEFF_FLOOR):
        """Lowest total degree carrying a coefficient above the floor; None
        if the series is (numerically) zero."""
        degs = [sum(e) for e, c in self.coeffs.items() if abs(c) > floor]
        return min(degs) if degs else None

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def degree_part(self, k: int) -> "TruncatedSeries":
        return TruncatedSeries(self.num_vars, self.cutoff,
                               {e: c for e, c in self.coeffs.items() if sum(e) == k})

    def is_zero(self, floor: float = COEFF_FLOOR) -> bool:
        return all(abs(c) <= floor for c in self.coeffs.values())

    def almost_equal(self, other: "TruncatedSeries",
                     floor: float = COEFF_FLOOR) -> bool:
        _check_compatible(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) <= floor
                   for k in keys)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if self.num_vars != other.num_vars or self.cutoff != other.cutoff:
            return False
        return self.almost_equal(other)

    def __hash__(self):
        raise TypeError("TruncatedSeries is not hashable (floored equality)")

    def __repr__(self) -> str:
        if not self.coeffs:
            return "<series 0>"
        parts = []
        for e in sorted(self.coeffs, key=lambda e: (sum(e), e)):
            mono = "*".join(f"t{i}^{k}" if k > 1 else f"t{i}"
                            for i, k in enumerate(e) if k)
            c = self.coeffs[e]
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return "<series " + " + ".join(parts[:8]) + (" + ..." if len(parts) > 8 else "") + ">"


def _power_table(point: np.ndarray, max_pow: int):
    table = []
    for z in point:
        row = [1.0 + 0.0j]
        for _ in range(max_pow):
            row.append(row[-1] * z)
        table.append(row)
    return table


class ArraySeries:
    """A truncated series whose coefficients are complex ndarrays of a fixed
    shape.  Used for form-valued (vectors over W or A^q) and matrix-valued
    (period blocks, contraction operators) holomorphic quantities."""

    __slots__ = ("num_vars", "cutoff", "shape", "coeffs")

    def __init__(self, num_vars: int, cutoff: int, shape: Tuple[int, ...],
                 coeffs: Dict[MultiIndex, np.ndarray] | None = None):
        self.num_vars = num_vars
        self.cutoff = cutoff
        self.shape = tuple(shape)
        cleaned: Dict[MultiIndex, np.ndarray] = {}
        for exps, arr in (coeffs or {}).items():
            exps = tuple(int(e) for e in exps)
            if sum(exps) > cutoff:
                continue
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != self.shape:
                raise ShapeError(f"coefficient shape {arr.shape} != {self.shape}")
            if np.any(arr != 0):
                cleaned[exps] = arr
        self.coeffs = cleaned

    @classmethod
    def zero(cls, num_vars: int, cutoff: int, shape) -> "ArraySeries":
        return cls(num_vars, cutoff, tuple(shape))

    @classmethod
    def constant(cls, arr, num_vars: int, cutoff: int) -> "ArraySeries":
        arr = np.asarray(arr, dtype=complex)
        return cls(num_vars, cutoff, arr.shape, {(0,) * num_vars: arr})

    @classmethod
    def from_components(cls, components) -> "ArraySeries":
        """Stack scalar series into a vector-valued series."""
        components = list(components)
        if not components:
            raise ShapeError("need at least one component")
        nv, D = components[0].num_vars, components[0].cutoff
        out: Dict[MultiIndex, np.ndarray] = {}
        for i, s in enumerate(components):
            _check_compatible(components[0], s)
            for e, c in s.coeffs.items():
                if e not in out:
                    out[e] = np.zeros(len(components), dtype=complex)
                out[e][i] = c
        return cls(nv, D, (len(components),), out)

    def component(self, index) -> TruncatedSeries:
        """Extract one entry as a scalar series; index may be an int or a
        tuple matching the coefficient shape."""
        out: Dict[MultiIndex, complex] = {}
        for e, arr in self.coeffs.items():
            c = arr[index]
            if c != 0:
                out[e] = complex(c)
        return TruncatedSeries(self.num_vars, self.cutoff, out)

    def components(self):
        """Iterate (index, scalar series) over all entries."""
        for idx in np.ndindex(*self.shape):
            yield idx, self.component(idx)

    # -- linear operations ---------------------------------------------

    def __add__(self, other: "ArraySeries") -> "ArraySeries":
        _check_compatible(self, other)
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        out = {e: arr.copy() for e, arr in self.coeffs.items()}
        for e, arr in other.coeffs.items():
            if e in out:
                out[e] = out[e] + arr
            else:
                out[e] = arr
        return ArraySeries(self.num_vars, self.cutoff, self.shape, out)

    def __neg__(self) -> "ArraySeries":
        return ArraySeries(self.num_vars, self.cutoff, self.shape,
                           {e: -arr for e, arr in self.coeffs.items()})

    def __sub__(self, other: "ArraySeries") -> "ArraySeries":
        return self + (-other)

    def scale(self, c: complex) -> "ArraySeries":
        return ArraySeries(self.num_vars, self.cutoff, self.shape,
                           {e: c * arr for e, arr in self.coeffs.items()})

    def scalar_mul(self, s: TruncatedSeries) -> "ArraySeries":
        """Multiply by a scalar series (Cauchy product, truncated)."""
        out: Dict[MultiIndex, np.ndarray] = {}
        for e, ce in s.coeffs.items():
            de = sum(e)
            for f, arr in self.coeffs.items():
                if de + sum(f) > self.cutoff:
                    continue
                g = _add_exponents(e, f)
                acc = out.get(g)
                out[g] = ce * arr if acc is None else acc + ce * arr
        return ArraySeries(self.num_vars, self.cutoff, self.shape, out)

    def apply_matrix(self, M: np.ndarray) -> "ArraySeries":
        """Left-multiply every coefficient by a constant matrix."""
        M = np.asarray(M, dtype=complex)
        new_shape = (M @ np.zeros(self.shape, dtype=complex)).shape
        return ArraySeries(self.num_vars, self.cutoff, new_shape,
                           {e: M @ arr for e, arr in self.coeffs.items()})

    def matmul(self, other: "ArraySeries") -> "ArraySeries":
        """Matrix product of matrix-valued series, truncated by total degree."""
        _check_compatible(self, other)
        new_shape = (np.zeros(self.shape, dtype=complex)
                     @ np.zeros(other.shape, dtype=complex)).shape
        out: Dict[MultiIndex, np.ndarray] = {}
        for e, A in self.coeffs.items():
            de = sum(e)
            for f, B in other.coeffs.items():
                if de + sum(f) > self.cutoff:
                    continue
                g = _add_exponents(e, f)
                P = A @ B
                acc = out.get(g)
                out[g] = P if acc is None else acc + P
        return ArraySeries(self.num_vars, self.cutoff, new_shape, out)

    __matmul__ = matmul

    def partial_derivative(self, mu: int) -> "ArraySeries":
        out: Dict[MultiIndex, np.ndarray] = {}
        for e, arr in self.coeffs.items():
            k = e[mu]
            if k == 0:
                continue
            f = list(e)
            f[mu] = k - 1
            f = tuple(f)
            acc = out.get(f)
            out[f] = k * arr if acc is None else acc + k * arr
        return ArraySeries(self.num_vars, self.cutoff, self.shape, out)

    def evaluate(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=complex).ravel()
        if point.shape[0] != self.num_vars:
            raise ShapeError(
                f"point has {point.shape[0]} entries, series has {self.num_vars} variables")
        powers = _power_table(point, self.cutoff)
        total = np.zeros(self.shape, dtype=complex)
        for e, arr in self.coeffs.items():
            m = 1.0 + 0.0j
            for i, k in enumerate(e):
                if k:
                    m = m * powers[i][k]
            total += m * arr
        return total

    # -- inspection ------------------------------------------------------

    def min_total_degree(self, floor: float = COEFF_FLOOR):
        degs = [sum(e) for e, arr in self.coeffs.items()
                if np.max(np.abs(arr)) > floor]
        return min(degs) if degs else None

    def max_abs_coeff(self) -> float:
        return max((float(np.max(np.abs(arr))) for arr in self.coeffs.values()),
                   default=0.0)

    def degree_part(self, k: int) -> "ArraySeries":
        return ArraySeries(self.num_vars, self.cutoff, self.shape,
                           {e: arr for e, arr in self.coeffs.items() if sum(e) == k})

    def truncate(self, new_cutoff: int) -> "ArraySeries":
        return ArraySeries(self.num_vars, new_cutoff, self.shape,
                           {e: arr for e, arr in self.coeffs.items()
                            if sum(e) <= new_cutoff})

    def is_zero(self, floor: float = COEFF_FLOOR) -> bool:
        return self.max_abs_coeff() <= floor

    def __repr__(self) -> str:
        return (f"<ArraySeries shape={self.shape} vars={self.num_vars} "
                f"cutoff={self.cutoff} terms={len(self.coeffs)}>")


def growth_estimate(series: ArraySeries) -> float:
    """max over degrees k >= 1 of (max |coeff at degree k|)^{1/k}; 0 for
    series with no nonconstant terms."""
    by_deg: Dict[int, float] = {}
    for e, arr in series.coeffs.items():
        k = sum(e)
        if k == 0:
            continue
        by_deg[k] = max(by_deg.get(k, 0.0), float(np.max(np.abs(arr))))
    return max((m ** (1.0 / k) for k, m in by_deg.items() if m > 0), default=0.0)


def trust_radius(series: ArraySeries, cap: float = 1e3) -> float:
    """Heuristic evaluation radius 0.5/growth, capped; keeps geometric tails
    below the coefficient floor.  Reported, never asserted as a theoretical
    convergence radius."""
    g = growth_estimate(series)
    return cap if g == 0.0 else min(cap, 0.5 / g)
