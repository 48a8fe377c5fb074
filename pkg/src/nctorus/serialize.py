"""JSON formats for elements, symbols, matrices and module vectors.

Element files are self-contained: they carry n, theta and the coefficient
list sorted lexicographically by mode, which makes serialization bit-stable
for identical inputs.  Loading validates shapes and theta consistency and
raises SchemaError with the offending path.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any

import numpy as np

from .algebra import Theta, TorusElement


class SchemaError(ValueError):
    """Malformed or inconsistent JSON artifact."""


def element_to_dict(a: TorusElement) -> dict:
    return {
        "n": a.n,
        "theta": [[float(v) for v in row] for row in a.theta.mat],
        "coeffs": [
            {"m": [int(x) for x in m], "re": float(v.real), "im": float(v.imag)}
            for m, v in zip(a.modes, a.values)
        ],
    }


def element_from_dict(d: dict, theta: Theta | None = None, where: str = "element") -> TorusElement:
    try:
        n = int(d["n"])
        th = Theta(d["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad n/theta block: {exc}") from exc
    if th.n != n:
        raise SchemaError(f"{where}: theta shape {th.n} does not match n={n}")
    if theta is not None and th != theta:
        raise SchemaError(f"{where}: theta differs from the ambient theta")
    coeffs = {}
    for i, c in enumerate(d.get("coeffs", [])):
        try:
            m = tuple(int(x) for x in c["m"])
            v = complex(float(c["re"]), float(c["im"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{where}.coeffs[{i}]: {exc}") from exc
        if len(m) != n:
            raise SchemaError(f"{where}.coeffs[{i}]: mode length {len(m)} != n={n}")
        coeffs[m] = coeffs.get(m, 0.0) + v
    return TorusElement(th, coeffs)


def symbol_to_dict(sym) -> dict:
    from .symbols import LambdaSymbol, PolynomialSymbol

    if isinstance(sym, LambdaSymbol) and type(sym) is LambdaSymbol:
        return {
            "kind": "lambda",
            "s": float(sym.s),
            "n": sym.n,
            "theta": [[float(v) for v in row] for row in sym.theta.mat],
        }
    if isinstance(sym, PolynomialSymbol):
        return {
            "kind": "polynomial",
            "order": float(sym.order),
            "n": sym.n,
            "theta": [[float(v) for v in row] for row in sym.theta.mat],
            "terms": [
                {"exp": [int(x) for x in exp], "coeff": element_to_dict(c)}
                for exp, c in sorted(sym.terms.items())
            ],
        }
    raise SchemaError(f"symbol kind {getattr(sym, 'kind', type(sym))!r} is not serializable")


def symbol_from_dict(d: dict, where: str = "symbol"):
    from .symbols import LambdaSymbol, PolynomialSymbol

    kind = d.get("kind")
    try:
        th = Theta(d["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad theta: {exc}") from exc
    if kind == "lambda":
        try:
            return LambdaSymbol(th, float(d["s"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: bad lambda symbol: {exc}") from exc
    if kind == "polynomial":
        terms = {}
        for i, t in enumerate(d.get("terms", [])):
            try:
                exp = tuple(int(x) for x in t["exp"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{where}.terms[{i}]: {exc}") from exc
            if len(exp) != th.n or any(e < 0 for e in exp):
                raise SchemaError(f"{where}.terms[{i}]: bad exponent {exp}")
            terms[exp] = element_from_dict(t["coeff"], theta=th, where=f"{where}.terms[{i}].coeff")
        order = d.get("order")
        return PolynomialSymbol(th, terms, order=None if order is None else float(order))
    raise SchemaError(f"{where}: unknown symbol kind {kind!r}")


def matrix_to_dict(mat) -> dict:
    return {
        "r": mat.r,
        "n": mat.theta.n,
        "theta": [[float(v) for v in row] for row in mat.theta.mat],
        "entries": [element_to_dict(e) for row in mat.entries for e in row],
    }


def matrix_from_dict(d: dict, where: str = "matrix"):
    from .modules import MatrixElement

    try:
        r = int(d["r"])
        th = Theta(d["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad header: {exc}") from exc
    flat = d.get("entries", [])
    if len(flat) != r * r:
        raise SchemaError(f"{where}: expected {r * r} entries, got {len(flat)}")
    entries = [
        [element_from_dict(flat[i * r + j], theta=th, where=f"{where}.entries[{i * r + j}]")
         for j in range(r)]
        for i in range(r)
    ]
    return MatrixElement(th, entries)


def vector_to_dict(vec) -> dict:
    return {
        "r": vec.r,
        "n": vec.theta.n,
        "theta": [[float(v) for v in row] for row in vec.theta.mat],
        "entries": [element_to_dict(e) for e in vec.entries],
    }


def vector_from_dict(d: dict, where: str = "vector"):
    from .modules import ModuleVector

    try:
        r = int(d["r"])
        th = Theta(d["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad header: {exc}") from exc
    flat = d.get("entries", [])
    if len(flat) != r:
        raise SchemaError(f"{where}: expected {r} entries, got {len(flat)}")
    return ModuleVector(th, [element_from_dict(flat[j], theta=th, where=f"{where}.entries[{j}]")
                             for j in range(r)])


# -- file helpers ---------------------------------------------------------------


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: parse error at line {exc.lineno} col {exc.colno}: {exc.msg}")


def dump_json_atomic(obj: Any, path: str) -> None:
    """Write JSON via temp file + rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_element(path: str, theta: Theta | None = None) -> TorusElement:
    return element_from_dict(load_json(path), theta=theta, where=path)


def save_element(a: TorusElement, path: str) -> None:
    dump_json_atomic(element_to_dict(a), path)


def load_symbol(path: str):
    return symbol_from_dict(load_json(path), where=path)


def save_symbol(sym, path: str) -> None:
    dump_json_atomic(symbol_to_dict(sym), path)
