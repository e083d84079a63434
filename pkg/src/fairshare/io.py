"""JSON instance and result files.

An instance is either a multi-commodity problem::

    {"schema_version": 1, "players": 2, "commodities": 3,
     "utilities": [[20, 20, 30], [100, 50, 10]],
     "disagreement": [0, 0], "epsilon": 1e-4, "method": "raiffa"}

or a claims problem under its own top-level key::

    {"schema_version": 1, "claims_problem": {"claims": [100, 200, 300], "estate": 200}}

Everything is validated before any solver runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fairshare.errors import InputError

SCHEMA_VERSION = 1
METHODS = ("raiffa", "aumann", "talmud", "cg")
MULTI_METHODS = ("raiffa", "aumann")
CLAIMS_METHODS = ("talmud", "cg")


class ParseError(InputError):
    """Malformed or invalid file contents."""


@dataclass(frozen=True)
class MultiInstance:
    utilities: np.ndarray
    disagreement: np.ndarray
    epsilon: float = 1e-4
    method: Optional[str] = None

    @property
    def shape(self):
        return self.utilities.shape


@dataclass(frozen=True)
class ClaimsInstance:
    claims: np.ndarray
    estate: float
    method: Optional[str] = None


@dataclass(frozen=True)
class ResultFile:
    method: str
    utilities: list
    allocation: Optional[list]
    trace: object = None
    verification: Optional[dict] = None
    epsilon: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "utilities": self.utilities,
            "allocation": self.allocation,
        }
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        if self.trace is not None:
            out["trace"] = self.trace
        if self.verification is not None:
            out["verification"] = self.verification
        return out


def _reject_constant(name):
    raise ParseError(f"non-finite number {name} is not allowed")


def parse_json(text: str, source: str = "<input>"):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _require(doc: dict, key: str, where: str = "instance"):
    if key not in doc:
        raise ParseError(f"{where}: missing required field {key!r}")
    return doc[key]


def _number(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ParseError(f"{name} must be finite")
    return float(value)


def _array(value, name, ndim) -> np.ndarray:
    def walk(v, depth, path):
        if depth == 0:
            return _number(v, path)
        if not isinstance(v, list):
            raise ParseError(f"{path} must be a list")
        return [walk(x, depth - 1, f"{path}[{i}]") for i, x in enumerate(v)]

    rows = walk(value, ndim, name)
    try:
        arr = np.array(rows, dtype=float)
    except ValueError:
        raise ParseError(f"{name} is ragged") from None
    if arr.ndim != ndim:
        raise ParseError(f"{name} is ragged")
    return arr


def _count(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"{name} must be a positive integer, got {value!r}")
    return value


def _method(doc, allowed):
    method = doc.get("method")
    if method is not None and method not in allowed:
        raise ParseError(f"method {method!r} not one of {', '.join(allowed)}")
    return method


def _check_version(doc):
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}")


def instance_from_dict(doc) -> MultiInstance | ClaimsInstance:
    if not isinstance(doc, dict):
        raise ParseError("instance must be a JSON object")
    _check_version(doc)
    if "claims_problem" in doc:
        body = doc["claims_problem"]
        if not isinstance(body, dict):
            raise ParseError("claims_problem must be an object")
        claims = _array(_require(body, "claims", "claims_problem"), "claims", 1)
        estate = _number(_require(body, "estate", "claims_problem"), "estate")
        if claims.size == 0 or np.any(claims < 0):
            raise ParseError("claims must be a non-empty list of non-negative numbers")
        if estate < 0 or estate > claims.sum() * (1 + 1e-12):
            raise ParseError(f"estate {estate} outside [0, {claims.sum()}]")
        return ClaimsInstance(claims, estate, _method(doc, CLAIMS_METHODS))

    n = _count(_require(doc, "players"), "players")
    k = _count(_require(doc, "commodities"), "commodities")
    u = _array(_require(doc, "utilities"), "utilities", 2)
    if u.shape != (n, k):
        raise ParseError(f"utilities has shape {u.shape}, declared ({n}, {k})")
    if np.any(u < 0):
        raise ParseError("utilities must be non-negative")
    raw = _require(doc, "disagreement")
    depth = 2 if isinstance(raw, list) and raw and isinstance(raw[0], list) else 1
    d = _array(raw, "disagreement", depth)
    if d.shape == (n, k):
        d = d.sum(axis=1)
    elif d.shape != (n,):
        raise ParseError(f"disagreement has shape {d.shape}, expected ({n},) or ({n}, {k})")
    if np.any(d < 0):
        raise ParseError("disagreement must be non-negative")
    eps = _number(doc.get("epsilon", 1e-4), "epsilon")
    if eps <= 0:
        raise ParseError("epsilon must be positive")
    return MultiInstance(u, d, eps, _method(doc, MULTI_METHODS))


def read_instance(path) -> MultiInstance | ClaimsInstance:
    text = _read(path)
    return instance_from_dict(parse_json(text, str(path)))


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def plain(value):
    """numpy scalars and arrays to JSON-ready Python values."""
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def dump_result(result: ResultFile) -> str:
    return json.dumps(plain(result.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"


def result_from_dict(doc) -> ResultFile:
    if not isinstance(doc, dict):
        raise ParseError("result must be a JSON object")
    _check_version(doc)
    method = _require(doc, "method", "result")
    if method not in METHODS:
        raise ParseError(f"unknown method {method!r}")
    utilities = _array(_require(doc, "utilities", "result"), "utilities", 1)
    allocation = _require(doc, "allocation", "result")
    if allocation is not None:
        allocation = _array(allocation, "allocation", 2).tolist()
    eps = doc.get("epsilon")
    if eps is not None:
        eps = _number(eps, "epsilon")
    return ResultFile(
        method=method,
        utilities=utilities.tolist(),
        allocation=allocation,
        trace=doc.get("trace"),
        verification=doc.get("verification"),
        epsilon=eps,
    )


def read_result(path) -> ResultFile:
    return result_from_dict(parse_json(_read(path), str(path)))


@dataclass
class Table:
    """Fixed-width text table with numbers at six decimals."""

    header: list
    rows: list = field(default_factory=list)

    def add(self, *cells):
        row = [_cell(c) for c in cells]
        self.rows.append(row + [""] * (len(self.header) - len(row)))

    def render(self) -> str:
        head = [str(h) for h in self.header]
        width = [max(len(r[i]) for r in [head] + self.rows) for i in range(len(head))]
        line = "-+-".join("-" * w for w in width)
        out = [" | ".join(h.rjust(w) for h, w in zip(head, width)), line]
        for row in self.rows:
            out.append(" | ".join(c.rjust(w) for c, w in zip(row, width)))
        return "\n".join(out)


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    return str(value)
