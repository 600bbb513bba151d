"""JSON connection specs.

Four shapes are accepted::

    {"type": "chart", "A": "...", "B": "...", "C": "...", "D": "...", "domain": {...}}
    {"type": "family", "name": "sphere", "params": {"t": 1}}
    {"type": "metric", "builtin": "hyperbolic"}  or  {"type": "metric", "g11": ..., "g12": ..., "g22": ..., "domain": {...}}
    {"type": "deformed", "base": <spec>, "pi": {"xxx": ..., "xxy": ..., "xyy": ..., "yyy": ...}}

A metric spec denotes the Levi-Civita connection of a unit-determinant metric.
Missing chart fields default to ``0``, so ``{"type": "chart"}`` is the flat connection.
"""
from __future__ import annotations

import json
from pathlib import Path

from .connection import ChartConnection, Domain
from .families import make_family
from .metric import MetricChart, builtin_metric, levi_civita


class SpecError(ValueError):
    pass


def load_metric(spec: dict) -> MetricChart:
    if spec.get("type") != "metric":
        raise SpecError("not a metric spec")
    if "builtin" in spec:
        return builtin_metric(spec["builtin"])
    try:
        dom = Domain.from_json(spec.get("domain", {}))
        return MetricChart(spec["g11"], spec.get("g12", "0"), spec["g22"], dom,
                           name=spec.get("name", "metric"))
    except KeyError as e:
        raise SpecError(f"metric spec is missing {e.args[0]!r}") from None


def load_connection(spec: dict) -> ChartConnection:
    if not isinstance(spec, dict) or "type" not in spec:
        raise SpecError("a connection spec is a JSON object with a 'type' key")
    kind = spec["type"]
    if kind == "chart":
        dom = Domain.from_json(spec["domain"]) if "domain" in spec else Domain()
        return ChartConnection(*(spec.get(k, "0") for k in "ABCD"), domain=dom,
                               name=spec.get("name", "chart"))
    if kind == "family":
        if "name" not in spec:
            raise SpecError("family spec needs a 'name'")
        return make_family(spec["name"], dict(spec.get("params", {})))
    if kind == "metric":
        return levi_civita(load_metric(spec))
    if kind == "deformed":
        base = load_connection(spec["base"])
        pi = spec.get("pi", {})
        extra = set(pi) - {"xxx", "xxy", "xyy", "yyy"}
        if extra:
            raise SpecError(f"unknown pi components {sorted(extra)}")
        return base.deformed(tuple(pi.get(k, "0") for k in ("xxx", "xxy", "xyy", "yyy")),
                             t=float(spec.get("t", 1.0)), name=spec.get("name"))
    raise SpecError(f"unknown spec type {kind!r}")


def read_spec(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"invalid JSON in {path}: {e}") from None


def load(path) -> ChartConnection:
    return load_connection(read_spec(path))


def dump(conn: ChartConnection) -> str:
    """Chart spec text; loading it gives back the same fields."""
    return json.dumps(conn.to_spec(), indent=2, sort_keys=True)
