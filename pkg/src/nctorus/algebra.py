"""Exact finite-support arithmetic on the smooth noncommutative n-torus.

Elements are finitely supported maps from modes m in Z^n to complex
coefficients, standing for sums a = sum_m a_m U^m where U^m is the
normal-ordered word U_1^{m_1} ... U_n^{m_n}.  The generators obey
U_k U_j = e^{2 pi i theta_{j,k}} U_j U_k and U_j^* = U_j^{-1}; reordering
U^m U^k into normal form produces the unit-modulus cocycle returned by
`normal_phase`, so multiplication is a twisted convolution.

The deformation matrix theta may be any real skew-symmetric matrix
(rational entries included): finite-support computation never uses the
irrationality or rational-independence assumptions of the analytic theory.
All arithmetic is double precision; coefficients below PRUNE_TOL in
magnitude are dropped after every operation to keep supports finite.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .indices import as_nonneg_index, box_array

PRUNE_TOL = 1e-15

# dense SVD below this GNS matrix size, power iteration above
_SVD_DIM_LIMIT = 1600


class Theta:
    """Real skew-symmetric n x n deformation matrix.

    Only the strict upper triangle matters for the phase cocycle; the
    constructor enforces skew symmetry to 1e-12.
    """

    __slots__ = ("n", "mat", "upper")

    def __init__(self, entries):
        mat = np.array(entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError("theta must be a square matrix")
        if not np.allclose(mat, -mat.T, atol=1e-12):
            raise ValueError("theta must be skew-symmetric")
        mat = 0.5 * (mat - mat.T)  # exact skew symmetry
        self.n = mat.shape[0]
        self.mat = mat
        self.upper = np.triu(mat, 1)
        self.mat.setflags(write=False)
        self.upper.setflags(write=False)

    @classmethod
    def zero(cls, n: int) -> "Theta":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_upper(cls, n: int, upper: Mapping[tuple[int, int], float]) -> "Theta":
        """Build from 0-based strictly-upper entries {(j, k): theta_jk}."""
        mat = np.zeros((n, n))
        for (j, k), v in upper.items():
            if not 0 <= j < k < n:
                raise ValueError(f"entry ({j},{k}) not strictly upper triangular")
            mat[j, k] = v
            mat[k, j] = -v
        return cls(mat)

    @classmethod
    def two_torus(cls, value: float) -> "Theta":
        return cls.from_upper(2, {(0, 1): value})

    def __eq__(self, other) -> bool:
        return isinstance(other, Theta) and self.n == other.n and np.array_equal(self.mat, other.mat)

    def __hash__(self):
        return hash((self.n, self.mat.tobytes()))

    def __repr__(self) -> str:
        return f"Theta(n={self.n})"


def _check_same_theta(a: "TorusElement", b: "TorusElement") -> None:
    if a.theta != b.theta:
        raise ValueError("elements live over different theta matrices")


def normal_phase(theta: Theta, m: Sequence[int], k: Sequence[int]) -> complex:
    """Cocycle w(m, k) with U^m U^k = w(m, k) U^{m+k}.

    w(m, k) = exp(2 pi i sum_{j<l} theta_{j,l} m_l k_j); the sign convention
    is pinned by U_k U_j = e^{2 pi i theta_{j,k}} U_j U_k for j < k.
    """
    m = np.asarray(m, dtype=float)
    k = np.asarray(k, dtype=float)
    if m.shape != (theta.n,) or k.shape != (theta.n,):
        raise ValueError("mode length does not match theta dimension")
    return complex(np.exp(2j * np.pi * (k @ theta.upper @ m)))


class TorusElement:
    """Finitely supported element sum_m a_m U^m of the smooth torus algebra.

    Immutable by convention: no method mutates self; arithmetic returns new
    elements.  Modes are kept lexicographically sorted, which fixes a
    canonical coefficient order for serialization and reports.
    """

    __slots__ = ("theta", "_modes", "_vals", "_coeffs")

    def __init__(self, theta: Theta, coeffs: Mapping[Sequence[int], complex] | None = None):
        self.theta = theta
        n = theta.n
        items = []
        if coeffs:
            for m, v in coeffs.items():
                t = tuple(int(x) for x in m)
                if len(t) != n:
                    raise ValueError(f"mode {t} has length {len(t)}, expected {n}")
                v = complex(v)
                if abs(v) > PRUNE_TOL:
                    items.append((t, v))
        items.sort(key=lambda kv: kv[0])
        self._modes = np.array([t for t, _ in items], dtype=np.int64).reshape(len(items), n)
        self._vals = np.array([v for _, v in items], dtype=np.complex128)
        self._modes.setflags(write=False)
        self._vals.setflags(write=False)
        self._coeffs = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def _from_arrays(cls, theta: Theta, modes: np.ndarray, vals: np.ndarray,
                     sort: bool = True) -> "TorusElement":
        """Internal: build from unpruned arrays (one row per mode, no dups)."""
        el = cls.__new__(cls)
        el.theta = theta
        keep = np.abs(vals) > PRUNE_TOL
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, theta.n)[keep]
        vals = np.asarray(vals, dtype=np.complex128)[keep]
        if sort and len(vals) > 1:
            order = np.lexsort(modes.T[::-1])
            modes = modes[order]
            vals = vals[order]
        el._modes = modes
        el._vals = vals
        el._modes.setflags(write=False)
        el._vals.setflags(write=False)
        el._coeffs = None
        return el

    @classmethod
    def _from_unreduced(cls, theta: Theta, modes: np.ndarray, vals: np.ndarray) -> "TorusElement":
        """Internal: accumulate duplicate rows, then prune and sort."""
        if len(vals) == 0:
            return cls.zero(theta)
        # pack rows into scalar keys so dedup runs on a 1D sort
        offset = int(np.max(np.abs(modes))) + 1
        side = 2 * offset + 1
        keys = np.zeros(len(modes), dtype=np.int64)
        for j in range(theta.n):
            keys = keys * side + (modes[:, j] + offset)
        uniq_keys, inverse = np.unique(keys, return_inverse=True)
        acc = np.zeros(len(uniq_keys), dtype=np.complex128)
        np.add.at(acc, inverse, vals)
        uniq = np.empty((len(uniq_keys), theta.n), dtype=np.int64)
        rem = uniq_keys
        for j in range(theta.n - 1, -1, -1):
            uniq[:, j] = rem % side - offset
            rem = rem // side
        return cls._from_arrays(theta, uniq, acc, sort=False)  # key order is lex order

    @classmethod
    def zero(cls, theta: Theta) -> "TorusElement":
        return cls(theta, {})

    @classmethod
    def one(cls, theta: Theta) -> "TorusElement":
        return cls(theta, {(0,) * theta.n: 1.0})

    @classmethod
    def monomial(cls, theta: Theta, m: Sequence[int], coeff: complex = 1.0) -> "TorusElement":
        return cls(theta, {tuple(m): coeff})

    @classmethod
    def generator(cls, theta: Theta, j: int, power: int = 1) -> "TorusElement":
        """U_j^power for 0-based j."""
        m = [0] * theta.n
        m[j] = power
        return cls.monomial(theta, m)

    # -- views -------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.theta.n

    @property
    def size(self) -> int:
        return len(self._vals)

    @property
    def modes(self) -> np.ndarray:
        return self._modes

    @property
    def values(self) -> np.ndarray:
        return self._vals

    @property
    def coeffs(self) -> dict[tuple[int, ...], complex]:
        if self._coeffs is None:
            self._coeffs = {tuple(int(x) for x in m): complex(v)
                            for m, v in zip(self._modes, self._vals)}
        return self._coeffs

    @property
    def support(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in m) for m in self._modes]

    def coefficient(self, m: Sequence[int]) -> complex:
        return self.coeffs.get(tuple(int(x) for x in m), 0.0 + 0.0j)

    def support_radius(self) -> int:
        """Max infinity-norm over support modes (0 for the zero element)."""
        if self.size == 0:
            return 0
        return int(np.max(np.abs(self._modes)))

    def is_zero(self) -> bool:
        return self.size == 0

    # -- linear structure ----------------------------------------------------

    def __add__(self, other: "TorusElement") -> "TorusElement":
        if not isinstance(other, TorusElement):
            return NotImplemented
        _check_same_theta(self, other)
        if self.size == 0:
            return other
        if other.size == 0:
            return self
        modes = np.vstack([self._modes, other._modes])
        vals = np.concatenate([self._vals, other._vals])
        return TorusElement._from_unreduced(self.theta, modes, vals)

    def __neg__(self) -> "TorusElement":
        return TorusElement._from_arrays(self.theta, self._modes, -self._vals, sort=False)

    def __sub__(self, other: "TorusElement") -> "TorusElement":
        return self + (-other)

    def scale(self, c: complex) -> "TorusElement":
        return TorusElement._from_arrays(self.theta, self._modes, self._vals * complex(c), sort=False)

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return self.mul(other)
        if isinstance(other, (int, float, complex, np.integer, np.floating, np.complexfloating)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.integer, np.floating, np.complexfloating)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, c):
        return self.scale(1.0 / c)

    # -- twisted product and involution --------------------------------------

    def mul(self, other: "TorusElement") -> "TorusElement":
        """Twisted convolution: (ab)_p = sum_{m+k=p} a_m b_k w(m, k)."""
        _check_same_theta(self, other)
        if self.size == 0 or other.size == 0:
            return TorusElement.zero(self.theta)
        ma, va = self._modes, self._vals
        mb, vb = other._modes, other._vals
        # exponent[i, j] = sum_{p<l} theta_{p,l} (ma_i)_l (mb_j)_p
        expo = (ma @ self.theta.upper.T) @ mb.T
        vals = (va[:, None] * vb[None, :]) * np.exp(2j * np.pi * expo)
        modes = (ma[:, None, :] + mb[None, :, :]).reshape(-1, self.n)
        return TorusElement._from_unreduced(self.theta, modes, vals.ravel())

    def star(self) -> "TorusElement":
        """Involution: (a^*)_{-m} = conj(a_m) conj(w(m, -m))."""
        if self.size == 0:
            return self
        m = self._modes
        # w(m, -m) = exp(-2 pi i q_m) with q_m = sum_{j<l} theta_{j,l} m_l m_j
        q = np.einsum("ij,ij->i", m @ self.theta.upper.T, m)
        vals = np.conj(self._vals) * np.exp(2j * np.pi * q)
        return TorusElement._from_arrays(self.theta, -m, vals, sort=True)

    # -- derivations, automorphisms, trace ------------------------------------

    def delta(self, l: Sequence[int]) -> "TorusElement":
        """delta^l: coefficient at m scaled by prod_j m_j^{l_j}."""
        l = as_nonneg_index(l, self.n)
        if self.size == 0 or all(v == 0 for v in l):
            return self
        factors = np.ones(self.size)
        for j, lj in enumerate(l):
            if lj:
                factors *= self._modes[:, j].astype(float) ** lj
        return TorusElement._from_arrays(self.theta, self._modes, self._vals * factors, sort=False)

    def alpha(self, s: Sequence[float]) -> "TorusElement":
        """Torus action: coefficient at m scaled by e^{i s.m}."""
        s = np.asarray(s, dtype=float)
        if s.shape != (self.n,):
            raise ValueError("alpha parameter length does not match dimension")
        if self.size == 0:
            return self
        vals = self._vals * np.exp(1j * (self._modes @ s))
        return TorusElement._from_arrays(self.theta, self._modes, vals, sort=False)

    def trace(self) -> complex:
        return self.coefficient((0,) * self.n)

    def inner(self, other: "TorusElement") -> complex:
        """<a, b> = sum_m conj(b_m) a_m (= tau(b^* a))."""
        _check_same_theta(self, other)
        if self.size == 0 or other.size == 0:
            return 0.0 + 0.0j
        small, big = (self, other) if self.size <= other.size else (other, self)
        bc = big.coeffs
        acc = 0.0 + 0.0j
        for m, v in small.coeffs.items():
            w = bc.get(m)
            if w is not None:
                if small is self:
                    acc += np.conj(w) * v
                else:
                    acc += np.conj(v) * w
        return complex(acc)

    # -- norms ----------------------------------------------------------------

    def h0_norm(self) -> float:
        """l2 norm of coefficients = ||a||_0."""
        return float(np.linalg.norm(self._vals))

    def l1_norm(self) -> float:
        """sum_m |a_m|; an upper bound for the C* norm."""
        return float(np.sum(np.abs(self._vals)))

    # -- misc -------------------------------------------------------------------

    def isclose(self, other: "TorusElement", tol: float = 1e-12) -> bool:
        return (self - other).h0_norm() <= tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorusElement):
            return NotImplemented
        return (self.theta == other.theta
                and np.array_equal(self._modes, other._modes)
                and np.array_equal(self._vals, other._vals))

    def __repr__(self) -> str:
        if self.size == 0:
            return "TorusElement(0)"
        parts = []
        for m, v in list(zip(self._modes, self._vals))[:4]:
            parts.append(f"{v:.3g}*U^{tuple(int(x) for x in m)}")
        tail = " + ..." if self.size > 4 else ""
        return "TorusElement(" + " + ".join(parts) + tail + ")"


# -- truncated GNS representation ------------------------------------------------


def gns_matrix(a: TorusElement, box: int) -> np.ndarray:
    """Matrix of left multiplication by a on the basis {U^k : |k_j| <= box}.

    Basis order is lexicographic over the box (see indices.iter_box).
    Products landing outside the box are truncated.
    """
    if box < 0:
        raise ValueError("box must be nonnegative")
    n = a.n
    basis = box_array(n, box)
    side = 2 * box + 1
    dim = side**n
    radix = side ** np.arange(n - 1, -1, -1)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    for m, am in zip(a.modes, a.values):
        target = basis + m
        valid = np.all(np.abs(target) <= box, axis=1)
        rows = (target[valid] + box) @ radix
        # w(m, k) = exp(2 pi i k . upper . m) over the valid columns k
        phases = np.exp(2j * np.pi * (basis[valid] @ (a.theta.upper @ m.astype(float))))
        mat[rows, cols[valid]] += am * phases
    return mat


def _top_singular_value(mat: np.ndarray) -> float:
    dim = mat.shape[0]
    if dim <= _SVD_DIM_LIMIT:
        return float(np.linalg.svd(mat, compute_uv=False)[0])
    # deterministic power iteration on mat^H mat
    v = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    v += 1e-3 * np.cos(np.arange(dim)) / np.sqrt(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(10000):
        w = mat.conj().T @ (mat @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new_est = float(np.sqrt(norm))
        v = w / norm
        if abs(new_est - est) <= 1e-13 * max(new_est, 1.0):
            return new_est
        est = new_est
    return est


def cstar_norm_bounds(a: TorusElement, box: int) -> tuple[float, float, float]:
    """(lower, upper, estimate) for the C* norm of a.

    lower = ||a||_0, upper = sum |a_m|, estimate = top singular value of the
    truncated left-multiplication matrix.  The estimate is nondecreasing in
    box and sits in [lower, upper] whenever box covers the support of a,
    which is why a too-small box is rejected.
    """
    if a.size == 0:
        return (0.0, 0.0, 0.0)
    radius = a.support_radius()
    if box < radius:
        raise ValueError(
            f"GNS box {box} smaller than support radius {radius}: "
            "the truncated estimate would silently drop products")
    estimate = _top_singular_value(gns_matrix(a, box))
    return (a.h0_norm(), a.l1_norm(), estimate)
