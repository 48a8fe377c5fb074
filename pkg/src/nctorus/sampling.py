"""Seeded random generators for elements, symbols and deformation matrices.

Everything takes an explicit numpy Generator so suites are reproducible
from a single seed.
"""

from __future__ import annotations

import numpy as np

from .algebra import Theta, TorusElement
from .indices import box_array, indices_upto
from .symbols import PolynomialSymbol


def random_theta(rng: np.random.Generator, n: int, scale: float = 0.5) -> Theta:
    if n == 1:
        return Theta.zero(1)
    a = rng.uniform(-scale, scale, size=(n, n))
    return Theta(a - a.T)


def random_element(rng: np.random.Generator, theta: Theta, box: int,
                   max_modes: int | None = 60, scale: float = 1.0) -> TorusElement:
    """Complex-normal coefficients on the mode box, optionally subsampled.

    The subsampling keeps high-dimensional boxes tractable; coefficients are
    pruned by the element constructor as usual.
    """
    modes = box_array(theta.n, box)
    total = len(modes)
    if max_modes is not None and total > max_modes:
        pick = rng.choice(total, size=max_modes, replace=False)
        pick.sort()
        modes = modes[pick]
    vals = scale * (rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))) / np.sqrt(2.0)
    return TorusElement(theta, {tuple(int(x) for x in m): v for m, v in zip(modes, vals)})


def random_polynomial_symbol(rng: np.random.Generator, theta: Theta, degree: int = 3,
                             coeff_box: int = 1, max_modes: int = 6,
                             term_density: float = 0.7) -> PolynomialSymbol:
    """Random polynomial symbol of total degree exactly `degree`.

    Every exponent with |alpha| <= degree is kept with probability
    `term_density`; at least one top-degree term is always present so the
    declared order matches the actual degree.
    """
    terms = {}
    top = [e for e in indices_upto(theta.n, degree) if sum(e) == degree]
    forced = top[int(rng.integers(len(top)))]
    for exp in indices_upto(theta.n, degree):
        if exp != forced and rng.uniform() > term_density:
            continue
        el = random_element(rng, theta, coeff_box, max_modes=max_modes)
        if el.is_zero():
            el = TorusElement.one(theta)
        terms[exp] = el
    return PolynomialSymbol(theta, terms)
