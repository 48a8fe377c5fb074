"""Symbol classes: evaluable maps xi -> TorusElement with derivative oracles.

A symbol of order d is a smooth map rho: R^n -> A with
||delta^i (d^j rho)(xi)||_0 <= C (1 + |xi|)^{d - |j|} for all multi-indices
i, j.  `verify_order` measures the best constant on a radial grid and flags
declared orders that the data contradicts.

Shipped families:

* PolynomialSymbol  -- rho(xi) = sum_alpha xi^alpha c_alpha, exact derivatives.
* LambdaSymbol      -- the central weight (1 + |xi|^2)^{s/2} * 1, exact
                       derivatives via the closed recurrence
                       d_j (1+|xi|^2)^t = 2 t xi_j (1+|xi|^2)^{t-1}.
* ScaledLambdaSymbol-- (1 + |xi|^2)^{s/2} * c for a fixed element c; the
                       simplest non-central symbol of prescribed real order.
* CallbackSymbol    -- arbitrary eval callback; derivatives by central
                       differences with one Richardson step (h, h/2), local
                       accuracy O(h^4), bounded derivative order.
* SeparableModeSymbol - callback symbol built from per-mode scalar
                       functions, exposing them for quadrature cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import Theta, TorusElement
from .indices import as_nonneg_index, factorial_prod, indices_upto


class UnsupportedDerivativeOrder(ValueError):
    """Requested derivative order exceeds what the symbol can deliver."""


def _as_xi(xi, n: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if arr.shape != (n,):
        raise ValueError(f"xi has shape {arr.shape}, expected ({n},)")
    return arr


class Symbol:
    """Base class; subclasses implement eval() and usually deriv()."""

    kind = "abstract"

    def __init__(self, theta: Theta, order: float):
        self.theta = theta
        self.order = float(order)

    @property
    def n(self) -> int:
        return self.theta.n

    def eval(self, xi) -> TorusElement:
        raise NotImplementedError

    def __call__(self, xi) -> TorusElement:
        return self.eval(xi)

    def deriv(self, l: Sequence[int], xi) -> TorusElement:
        raise NotImplementedError

    def support_modes(self) -> list[tuple[int, ...]]:
        """Modes on which some coefficient function can be nonzero.

        Exact for the shipped families; callback symbols probe sample points.
        """
        probes = [np.zeros(self.n), 0.7 + np.zeros(self.n), -1.3 + np.zeros(self.n)]
        modes: set = set()
        for p in probes:
            modes.update(self.eval(p).support)
        return sorted(modes)


class PolynomialSymbol(Symbol):
    """rho(xi) = sum_alpha xi^alpha c_alpha with TorusElement coefficients."""

    kind = "polynomial"

    def __init__(self, theta: Theta, terms: Mapping[Sequence[int], TorusElement],
                 order: float | None = None):
        clean: dict[tuple[int, ...], TorusElement] = {}
        for exp, coeff in terms.items():
            e = as_nonneg_index(exp, theta.n)
            if coeff.theta != theta:
                raise ValueError("term coefficient over a different theta")
            if not coeff.is_zero():
                clean[e] = coeff
        degree = max((sum(e) for e in clean), default=0)
        super().__init__(theta, degree if order is None else order)
        self.terms = clean

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def eval(self, xi) -> TorusElement:
        xi = _as_xi(xi, self.n)
        acc = TorusElement.zero(self.theta)
        for exp, coeff in self.terms.items():
            factor = 1.0
            for x, e in zip(xi, exp):
                if e:
                    factor *= x**e
            acc = acc + coeff.scale(factor)
        return acc

    def deriv(self, l: Sequence[int], xi) -> TorusElement:
        l = as_nonneg_index(l, self.n)
        xi = _as_xi(xi, self.n)
        acc = TorusElement.zero(self.theta)
        for exp, coeff in self.terms.items():
            if any(e < dl for e, dl in zip(exp, l)):
                continue
            factor = 1.0
            for x, e, dl in zip(xi, exp, l):
                factor *= math.factorial(e) / math.factorial(e - dl)
                if e - dl:
                    factor *= x ** (e - dl)
            acc = acc + coeff.scale(factor)
        return acc

    def support_modes(self) -> list[tuple[int, ...]]:
        modes: set = set()
        for coeff in self.terms.values():
            modes.update(coeff.support)
        return sorted(modes)


class _WeightDerivatives:
    """Exact partial derivatives of (1 + |xi|^2)^{s/2}.

    Terms are stored as {(alpha, k): c} meaning c * xi^alpha * w^{s/2 - k}
    with w = 1 + |xi|^2; the family is closed under differentiation.
    """

    def __init__(self, n: int, s: float):
        self.n = n
        self.s = float(s)
        self._cache: dict[tuple[int, ...], dict] = {
            (0,) * n: {((0,) * n, 0): 1.0}
        }

    def _differentiate(self, terms: dict, axis: int) -> dict:
        out: dict = {}
        for (alpha, k), c in terms.items():
            if alpha[axis]:
                a2 = list(alpha)
                a2[axis] -= 1
                key = (tuple(a2), k)
                out[key] = out.get(key, 0.0) + c * alpha[axis]
            t = self.s / 2.0 - k
            if t != 0.0:
                a2 = list(alpha)
                a2[axis] += 1
                key = (tuple(a2), k + 1)
                out[key] = out.get(key, 0.0) + c * 2.0 * t
        return {key: c for key, c in out.items() if c != 0.0}

    def terms_for(self, l: tuple[int, ...]) -> dict:
        if l in self._cache:
            return self._cache[l]
        # peel one derivative off the first active axis
        axis = next(j for j, v in enumerate(l) if v > 0)
        prev = list(l)
        prev[axis] -= 1
        terms = self._differentiate(self.terms_for(tuple(prev)), axis)
        self._cache[l] = terms
        return terms

    def value(self, l: tuple[int, ...], xi: np.ndarray) -> float:
        w = 1.0 + float(np.dot(xi, xi))
        acc = 0.0
        for (alpha, k), c in self.terms_for(l).items():
            term = c * w ** (self.s / 2.0 - k)
            for x, a in zip(xi, alpha):
                if a:
                    term *= x**a
            acc += term
        return acc


def lambda_weight(s: float, xi) -> float:
    """(1 + |xi|^2)^{s/2} as a plain scalar."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return float((1.0 + np.dot(xi, xi)) ** (s / 2.0))


class LambdaSymbol(Symbol):
    """Central weight symbol (1 + |xi|^2)^{s/2} * 1 of order s."""

    kind = "lambda"

    def __init__(self, theta: Theta, s: float):
        super().__init__(theta, s)
        self.s = float(s)
        self._derivs = _WeightDerivatives(theta.n, s)
        self._factor = TorusElement.one(theta)

    def scalar(self, l: Sequence[int], xi) -> float:
        return self._derivs.value(as_nonneg_index(l, self.n), _as_xi(xi, self.n))

    def eval(self, xi) -> TorusElement:
        return self._factor.scale(self.scalar((0,) * self.n, xi))

    def deriv(self, l: Sequence[int], xi) -> TorusElement:
        return self._factor.scale(self.scalar(l, xi))

    def support_modes(self) -> list[tuple[int, ...]]:
        return self._factor.support


class ScaledLambdaSymbol(LambdaSymbol):
    """(1 + |xi|^2)^{s/2} * c for a fixed torus element c (API-only)."""

    kind = "scaled-lambda"

    def __init__(self, theta: Theta, s: float, element: TorusElement):
        super().__init__(theta, s)
        if element.theta != theta:
            raise ValueError("scaling element over a different theta")
        self._factor = element


class CallbackSymbol(Symbol):
    """Symbol from an arbitrary eval callback; finite-difference derivatives.

    Each derivative level applies a central difference at steps h and h/2
    combined by one Richardson step.  `max_deriv_order` bounds |l|; higher
    requests raise UnsupportedDerivativeOrder.
    """

    kind = "callback"

    def __init__(self, theta: Theta, order: float, fn: Callable[[np.ndarray], TorusElement],
                 max_deriv_order: int = 2, fd_step: float = 1e-3,
                 support_hint: Sequence[Sequence[int]] | None = None):
        super().__init__(theta, order)
        self._fn = fn
        self.max_deriv_order = int(max_deriv_order)
        self.fd_step = float(fd_step)
        self._support_hint = None if support_hint is None else sorted(
            tuple(int(x) for x in m) for m in support_hint)

    def eval(self, xi) -> TorusElement:
        return self._fn(_as_xi(xi, self.n))

    def _fd(self, l: tuple[int, ...], xi: np.ndarray) -> TorusElement:
        total = sum(l)
        if total == 0:
            return self._fn(xi)
        axis = next(j for j, v in enumerate(l) if v > 0)
        lower = list(l)
        lower[axis] -= 1
        lower = tuple(lower)
        h = self.fd_step * (1.0 + float(np.linalg.norm(xi)))
        step = np.zeros(self.n)

        def central(hh: float) -> TorusElement:
            step[axis] = hh
            return (self._fd(lower, xi + step) - self._fd(lower, xi - step)).scale(1.0 / (2.0 * hh))

        d_h = central(h)
        d_h2 = central(h / 2.0)
        return (d_h2.scale(4.0) - d_h).scale(1.0 / 3.0)

    def deriv(self, l: Sequence[int], xi) -> TorusElement:
        l = as_nonneg_index(l, self.n)
        if sum(l) > self.max_deriv_order:
            raise UnsupportedDerivativeOrder(
                f"derivative order {sum(l)} exceeds configured max "
                f"{self.max_deriv_order} for callback symbols")
        return self._fd(l, _as_xi(xi, self.n))

    def support_modes(self) -> list[tuple[int, ...]]:
        if self._support_hint is not None:
            return list(self._support_hint)
        return super().support_modes()


class SeparableModeSymbol(CallbackSymbol):
    """rho(xi) = sum_k f_k(xi) U^k from per-mode scalar functions f_k.

    The mode functions must accept numpy arrays elementwise; they are used
    directly by the oscillatory-integral cross-checks.
    """

    kind = "separable"

    def __init__(self, theta: Theta, order: float,
                 mode_functions: Mapping[Sequence[int], Callable],
                 max_deriv_order: int = 2, fd_step: float = 1e-3):
        self._mode_functions = {tuple(int(x) for x in m): f for m, f in mode_functions.items()}

        def fn(xi: np.ndarray) -> TorusElement:
            return TorusElement(theta, {m: complex(f(*xi) if theta.n > 1 else f(xi[0]))
                                        for m, f in self._mode_functions.items()})

        super().__init__(theta, order, fn, max_deriv_order=max_deriv_order, fd_step=fd_step,
                         support_hint=list(self._mode_functions))

    def mode_function(self, m: Sequence[int]) -> Callable:
        return self._mode_functions[tuple(int(x) for x in m)]


# -- order verification -----------------------------------------------------------


def default_grid(n: int, radii: Sequence[float] = (1, 2, 4, 8, 16, 32),
                 extra_directions: int = 2) -> list[np.ndarray]:
    """Tensor-ish radial grid: axis directions, the diagonal and a couple of
    fixed pseudo-random directions at each radius, plus the origin."""
    rng = np.random.default_rng(12345)
    dirs = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        dirs.append(e)
        dirs.append(-e)
    diag = np.ones(n) / np.sqrt(n)
    dirs.append(diag)
    for _ in range(extra_directions):
        v = rng.normal(size=n)
        dirs.append(v / np.linalg.norm(v))
    grid = [np.zeros(n)]
    for r in radii:
        for d in dirs:
            grid.append(r * d)
    return grid


@dataclass
class OrderReport:
    """Measured symbol-order constant and per-(i,j) growth diagnostics."""

    order: float
    c_measured: float
    passed: bool
    per_pair: dict = field(default_factory=dict)  # "i=..|j=.." -> {c, slope}
    slope_threshold: float = 0.1

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "c_measured": self.c_measured,
            "passed": self.passed,
            "slope_threshold": self.slope_threshold,
            "per_pair": self.per_pair,
        }


def verify_order(sym: Symbol, grid: Sequence[np.ndarray] | None = None,
                 max_i: int = 2, max_j: int = 2,
                 radii: Sequence[float] = (1, 2, 4, 8, 16, 32),
                 slope_threshold: float = 0.1) -> OrderReport:
    """Measure C = max ||delta^i d^j rho(xi)||_0 / (1+|xi|)^{d-|j|} on a grid.

    Passes when the measured constant is finite and the per-(i,j) ratio shows
    no growth trend: the log-log slope of the per-radius maxima must stay
    below `slope_threshold`.
    """
    n = sym.n
    if grid is None:
        grid = default_grid(n, radii)
    d = sym.order
    c_global = 0.0
    per_pair: dict[str, dict] = {}
    passed = True
    for j_idx in indices_upto(n, max_j):
        oj = sum(j_idx)
        for i_idx in indices_upto(n, max_i):
            ratios: dict[float, float] = {}
            c_pair = 0.0
            for xi in grid:
                r = float(np.linalg.norm(xi))
                el = sym.deriv(j_idx, xi).delta(i_idx)
                ratio = el.h0_norm() / (1.0 + r) ** (d - oj)
                c_pair = max(c_pair, ratio)
                key = round(r, 9)
                ratios[key] = max(ratios.get(key, 0.0), ratio)
            slope = None
            pts = [(r, v) for r, v in sorted(ratios.items()) if v > 1e-290 and r > 0]
            # trend is judged on the outer radii: a bounded ratio flattens
            # there while an under-declared order keeps a unit slope
            if len(pts) >= 2 and c_pair > 1e-290:
                tail = pts[-max(2, (len(pts) + 1) // 2):]
                xs = np.log([1.0 + r for r, _ in tail])
                ys = np.log([v for _, v in tail])
                slope = float(np.polyfit(xs, ys, 1)[0])
                if slope > slope_threshold:
                    passed = False
            if not np.isfinite(c_pair):
                passed = False
            c_global = max(c_global, c_pair)
            per_pair[f"i={i_idx}|j={j_idx}"] = {"c": c_pair, "slope": slope}
    return OrderReport(order=d, c_measured=c_global, passed=passed,
                       per_pair=per_pair, slope_threshold=slope_threshold)
