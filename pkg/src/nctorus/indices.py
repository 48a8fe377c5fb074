"""Small multi-index helpers shared across the package."""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

import numpy as np


def as_index(l: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate and normalize a length-n integer multi-index."""
    t = tuple(int(v) for v in l)
    if len(t) != n:
        raise ValueError(f"multi-index {t} has length {len(t)}, expected {n}")
    return t


def as_nonneg_index(l: Sequence[int], n: int) -> tuple[int, ...]:
    t = as_index(l, n)
    if any(v < 0 for v in t):
        raise ValueError(f"derivative multi-index {t} must be nonnegative")
    return t


def iter_box(n: int, box: int) -> Iterator[tuple[int, ...]]:
    """All lattice points of Z^n with |m_j| <= box, lexicographic order."""
    return itertools.product(range(-box, box + 1), repeat=n)


def box_array(n: int, box: int) -> np.ndarray:
    """iter_box as an (B, n) int array in the same (lexicographic) order."""
    side = 2 * box + 1
    out = np.empty((side**n, n), dtype=np.int64)
    for j, pt in enumerate(iter_box(n, box)):
        out[j] = pt
    return out


def box_index(m: Sequence[int], box: int) -> int:
    """Position of m inside iter_box ordering."""
    idx = 0
    side = 2 * box + 1
    for v in m:
        if abs(v) > box:
            raise ValueError(f"mode {tuple(m)} outside box {box}")
        idx = idx * side + (int(v) + box)
    return idx


def indices_of_total(n: int, total: int) -> list[tuple[int, ...]]:
    """All nonnegative multi-indices l in Z^n with |l| = total."""
    if n == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in indices_of_total(n - 1, total - first):
            out.append((first,) + rest)
    return out


def indices_below(n: int, bound: int) -> list[tuple[int, ...]]:
    """All nonnegative multi-indices with |l| < bound, grouped by level."""
    out = []
    for total in range(bound):
        out.extend(indices_of_total(n, total))
    return out


def indices_upto(n: int, bound: int) -> list[tuple[int, ...]]:
    """All nonnegative multi-indices with |l| <= bound."""
    return indices_below(n, bound + 1)


def factorial_prod(l: Sequence[int]) -> int:
    """l! = prod_j l_j!"""
    out = 1
    for v in l:
        out *= math.factorial(int(v))
    return out


def power(y: Sequence[float], l: Sequence[int]) -> float:
    """y^l = prod_j y_j^{l_j}, with 0^0 = 1."""
    out = 1.0
    for yv, lv in zip(y, l):
        if lv:
            out *= float(yv) ** int(lv)
    return out
