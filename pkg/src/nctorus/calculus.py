"""Operator action, adjoint/composition oracles and asymptotic expansions.

The operator attached to a symbol rho acts on finitely supported elements by

    P_rho(a) = sum_m rho(m) a_m U^m,

so everything an operator does is determined by its values at integer
frequencies.  That gives two independent oracles against which the
asymptotic expansions are tested:

* the exact adjoint symbol  sigma(P*)(xi) = [ sum_m rho_m(xi - m) U^m ]^*,
  a mode-shifted resampling of rho followed by the involution;
* composition by applying two operators in sequence and reading the symbol
  back off single modes.

The expansions themselves are

    adjoint:      sum_l (1/l!) d^l delta^l [rho(xi)^*]
    composition:  sum_l (1/l!) d^l phi(xi) . delta^l rho(xi)

with l! = prod_j l_j!, truncated at |l| < N.  For polynomial symbols and
N > degree both expansions are exact; in general the dropped remainder
decays like (1+|xi|)^{order - N}, which `remainder_order_fit` measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import Theta, TorusElement
from .indices import (as_nonneg_index, box_array, box_index, factorial_prod,
                      indices_below, indices_of_total, power)
from .symbols import Symbol

AnyOp = Callable[[TorusElement], TorusElement]


class QuadratureDisagreement(RuntimeError):
    """Two quadrature refinements of the Taylor remainder disagree."""


def apply_symbol(sym: Symbol, a: TorusElement) -> TorusElement:
    """P_rho(a) = sum_m rho(m) a_m U^m."""
    if a.theta != sym.theta:
        raise ValueError("element and symbol live over different theta matrices")
    acc = TorusElement.zero(sym.theta)
    for m, am in zip(a.modes, a.values):
        word = TorusElement.monomial(sym.theta, m, am)
        acc = acc + sym.eval(m.astype(float)).mul(word)
    return acc


def symbol_of_operator(op: AnyOp, theta: Theta, m: Sequence[int]) -> TorusElement:
    """Recover sigma(op)(m) = op(U^m) (U^m)^* from the action on one mode."""
    word = TorusElement.monomial(theta, m)
    return op(word).mul(word.star())


def adjoint_oracle(sym: Symbol, xi) -> TorusElement:
    """Exact adjoint symbol: star of the mode-shifted resampling of rho."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    coeffs = {}
    for m in sym.support_modes():
        v = sym.eval(xi - np.asarray(m, dtype=float)).coefficient(m)
        if v:
            coeffs[m] = v
    return TorusElement(sym.theta, coeffs).star()


def adjoint_apply(sym: Symbol, b: TorusElement) -> TorusElement:
    """Action of the adjoint operator, built from adjoint_oracle samples."""
    acc = TorusElement.zero(sym.theta)
    for m, bm in zip(b.modes, b.values):
        word = TorusElement.monomial(sym.theta, m, bm)
        acc = acc + adjoint_oracle(sym, m.astype(float)).mul(word)
    return acc


def operator_matrix(op: AnyOp, theta: Theta, box: int) -> np.ndarray:
    """Truncated matrix of a linear operator on the mode basis of the box."""
    basis = box_array(theta.n, box)
    dim = len(basis)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for col, k in enumerate(basis):
        image = op(TorusElement.monomial(theta, k))
        for p, v in zip(image.modes, image.values):
            if np.all(np.abs(p) <= box):
                mat[box_index(p, box), col] += v
    return mat


def _as_mode(m: Sequence[int], n: int) -> tuple[int, ...]:
    t = tuple(int(x) for x in m)
    if len(t) != n:
        raise ValueError(f"mode {t} has length {len(t)}, expected {n}")
    return t


def adjoint_via_gns(sym: Symbol, m: Sequence[int], box: int) -> TorusElement:
    """Numerical adjoint symbol from the conjugate-transposed GNS matrix.

    Valid on interior modes: needs box >= |m|_inf + support radius of the
    symbol so no adjoint matrix entry is truncated away.
    """
    m = _as_mode(m, sym.n)
    radius = max((max(abs(x) for x in mode) for mode in sym.support_modes()), default=0)
    if box < max(abs(x) for x in m) + radius:
        raise ValueError("box too small for an untruncated adjoint column")
    mat = operator_matrix(lambda a: apply_symbol(sym, a), sym.theta, box)
    adj = mat.conj().T
    col = adj[:, box_index(m, box)]
    basis = box_array(sym.theta.n, box)
    image = TorusElement(sym.theta, {tuple(int(x) for x in p): v
                                     for p, v in zip(basis, col) if v})
    return image.mul(TorusElement.monomial(sym.theta, m).star())


def compose_oracle(phi: Symbol, rho: Symbol, m: Sequence[int]) -> TorusElement:
    """sigma(P_phi P_rho)(m) by applying both operators to U^m."""
    if phi.theta != rho.theta:
        raise ValueError("symbols live over different theta matrices")
    word = TorusElement.monomial(phi.theta, m)
    return apply_symbol(phi, apply_symbol(rho, word)).mul(word.star())


@dataclass
class ExpansionResult:
    """Truncated expansion: per-level sums over |l| = L for L < order."""

    order: int
    per_level: list[TorusElement]

    @property
    def value(self) -> TorusElement:
        acc = self.per_level[0]
        for term in self.per_level[1:]:
            acc = acc + term
        return acc


def adjoint_expansion(sym: Symbol, xi, N: int) -> ExpansionResult:
    """sum_{|l|<N} (1/l!) d^l delta^l [rho(xi)^*] evaluated at xi.

    Since the cocycle does not depend on xi, d^l(rho^*) = (d^l rho)^*, so
    each term is delta^l(star(d^l rho(xi))) / l!.
    """
    if N < 1:
        raise ValueError("expansion order N must be >= 1")
    n = sym.n
    levels = []
    for level in range(N):
        acc = TorusElement.zero(sym.theta)
        for l in indices_of_total(n, level):
            term = sym.deriv(l, xi).star().delta(l)
            acc = acc + term.scale(1.0 / factorial_prod(l))
        levels.append(acc)
    return ExpansionResult(order=N, per_level=levels)


def compose_expansion(phi: Symbol, rho: Symbol, xi, N: int) -> ExpansionResult:
    """sum_{|l|<N} (1/l!) d^l phi(xi) . delta^l rho(xi)."""
    if N < 1:
        raise ValueError("expansion order N must be >= 1")
    if phi.theta != rho.theta:
        raise ValueError("symbols live over different theta matrices")
    n = phi.n
    rho_val = rho.eval(xi)
    levels = []
    for level in range(N):
        acc = TorusElement.zero(phi.theta)
        for l in indices_of_total(n, level):
            term = phi.deriv(l, xi).mul(rho_val.delta(l))
            acc = acc + term.scale(1.0 / factorial_prod(l))
        levels.append(acc)
    return ExpansionResult(order=N, per_level=levels)


def _gauss_legendre_01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def taylor_remainder(phi: Symbol, l: Sequence[int], xi, y,
                     nodes: int = 32, check_nodes: int = 48,
                     agreement_tol: float = 1e-8) -> TorusElement:
    """Integral-form Taylor remainder term for the multi-index l, |l| = N1:

        N1 (y^l / l!) int_0^1 (1-gamma)^{N1-1} (d^l phi)(xi + gamma y) dgamma

    via Gauss-Legendre quadrature.  Two node counts are compared and a
    disagreement beyond `agreement_tol` raises QuadratureDisagreement.
    """
    l = as_nonneg_index(l, phi.n)
    n1 = sum(l)
    if n1 < 1:
        raise ValueError("remainder multi-index must have |l| >= 1")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))

    def quad(k: int) -> TorusElement:
        gamma, w = _gauss_legendre_01(k)
        acc = TorusElement.zero(phi.theta)
        for g, wt in zip(gamma, w):
            acc = acc + phi.deriv(l, xi + g * y).scale(wt * (1.0 - g) ** (n1 - 1))
        return acc

    primary = quad(nodes)
    refined = quad(check_nodes)
    drift = (primary - refined).h0_norm()
    if drift > agreement_tol * (1.0 + refined.h0_norm()):
        raise QuadratureDisagreement(
            f"remainder quadrature at {nodes} and {check_nodes} nodes "
            f"differ by {drift:.3e}")
    scale = n1 * power(y, l) / factorial_prod(l)
    return refined.scale(scale)


def taylor_reconstruction(phi: Symbol, xi, y, N1: int) -> TorusElement:
    """Taylor polynomial below N1 plus all |l| = N1 remainder terms.

    Equals phi(xi + y) up to quadrature error; used to validate the
    remainder formula.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    acc = TorusElement.zero(phi.theta)
    for l in indices_below(phi.n, N1):
        acc = acc + phi.deriv(l, xi).scale(power(y, l) / factorial_prod(l))
    for l in indices_of_total(phi.n, N1):
        acc = acc + taylor_remainder(phi, l, xi, y)
    return acc


EXACT_RESIDUAL_FLOOR = 1e-13


@dataclass
class RemainderFit:
    """Fitted decay of ||expansion - oracle||_0 against (1 + |xi|)."""

    kind: str
    order: int
    radii: tuple[float, ...]
    residuals: tuple[float, ...]
    slope: float | None          # None when residuals are at the exact floor
    exact: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "order": self.order,
            "radii": list(self.radii), "residuals": list(self.residuals),
            "slope": self.slope, "exact": self.exact,
        }


def _axis_points(n: int, radius: int) -> list[tuple[int, ...]]:
    pts = []
    for j in range(n):
        for sign in (1, -1):
            p = [0] * n
            p[j] = sign * radius
            pts.append(tuple(p))
    return pts


def remainder_order_fit(kind: str, symbols, N: int,
                        radii: Sequence[int] = (4, 8, 16, 32)) -> RemainderFit:
    """Least-squares slope of log residual vs log(1 + |xi|) at integer radii.

    kind = "adjoint" takes one symbol; kind = "compose" takes (outer, inner).
    Residuals all below the exact floor return the exact sentinel instead of
    a slope.
    """
    if len(radii) < 2:
        raise ValueError("need at least two radii for a slope")
    if kind == "adjoint":
        sym = symbols if isinstance(symbols, Symbol) else symbols[0]
        n = sym.n

        def residual(pt) -> float:
            return (adjoint_expansion(sym, pt, N).value - adjoint_oracle(sym, pt)).h0_norm()
    elif kind == "compose":
        phi, rho = symbols
        n = phi.n

        def residual(pt) -> float:
            return (compose_expansion(phi, rho, pt, N).value - compose_oracle(phi, rho, pt)).h0_norm()
    else:
        raise ValueError(f"unknown remainder kind {kind!r}")

    per_radius = []
    for r in radii:
        worst = max(residual(np.asarray(p, dtype=float)) for p in _axis_points(n, int(r)))
        per_radius.append(worst)
    if all(v <= EXACT_RESIDUAL_FLOOR for v in per_radius):
        return RemainderFit(kind, N, tuple(float(r) for r in radii),
                            tuple(per_radius), slope=None, exact=True)
    xs = np.log1p(np.asarray(radii, dtype=float))
    ys = np.log(np.maximum(per_radius, 1e-300))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return RemainderFit(kind, N, tuple(float(r) for r in radii),
                        tuple(per_radius), slope=slope, exact=False)


def oracle_symbol(theta: Theta, order: float, values: Callable[[np.ndarray], TorusElement],
                  support: Sequence[Sequence[int]] | None = None) -> Symbol:
    """Wrap a pointwise symbol table (integer xi only) as a Symbol.

    Used to feed oracle outputs, e.g. a composed symbol, back into apply or
    compose_oracle; derivatives are not available.
    """
    from .symbols import CallbackSymbol

    return CallbackSymbol(theta, order, values, max_deriv_order=0, support_hint=support)


def alpha_derivative_fd(a: TorusElement, l: Sequence[int], x, h: float = 1e-4,
                        sign: float = -1.0) -> TorusElement:
    """(sign * D_x)^l alpha_x(a) by iterated central differences, D = -i d/dx.

    The same coefficient computation shows D^l alpha_x(a) = delta^l
    alpha_x(a); this helper provides the finite-difference side of that
    identity check.
    """
    l = as_nonneg_index(l, a.n)
    x = np.atleast_1d(np.asarray(x, dtype=float))

    def rec(lcur: tuple[int, ...], pt: np.ndarray) -> TorusElement:
        if sum(lcur) == 0:
            return a.alpha(pt)
        axis = next(j for j, v in enumerate(lcur) if v > 0)
        lower = list(lcur)
        lower[axis] -= 1
        step = np.zeros(a.n)
        step[axis] = h
        diff = rec(tuple(lower), pt + step) - rec(tuple(lower), pt - step)
        return diff.scale(sign * -1j / (2.0 * h))

    return rec(l, x)
