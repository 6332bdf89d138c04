"""JSON run reports and CSV sample tables.

A report file is a single JSON object::

    {"schema": 1, "version": "...", "expr": "...", "config": {...},
     "results": [{"name": "...", "result": {...}}, ...],
     "timestamps": {"started": "...", "finished": "..."}}

Result objects carry a ``"$type"`` tag naming their class.  Infinities and
NaN never appear as JSON numbers; they are written as ``{"$float": "inf"}``
(or ``"-inf"``, ``"nan"``).  Mappings with non-string keys, such as
per-epsilon results, are written as ``{"$map": [[key, value], ...]}``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, core
from .core import GridSpec
from .errors import ReportIOError, SchemaMismatch
from .quadrature import CheckConfig
from .smooth import DerivativeDiagnostic, SmoothEvaluator
from .verify import (
    EquivalenceReport,
    GrowthReport,
    RatioFamily,
    ScalingReport,
    TrendReport,
)

SCHEMA = 1


@dataclass
class PipelineSummary:
    """What a smoothing run produced, minus the evaluator itself."""

    expr: str
    n_max: int
    kernel_norm: float
    glue_value: float
    glue_derivatives: list
    report: EquivalenceReport


_TYPES = {
    cls.__name__: cls
    for cls in (
        RatioFamily, EquivalenceReport, ScalingReport, TrendReport,
        GrowthReport, DerivativeDiagnostic, PipelineSummary,
    )
}


def _now():
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunReport:
    expr: str = ""
    config: CheckConfig = field(default_factory=CheckConfig)
    results: list = field(default_factory=list)  # (name, result) pairs
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str = ""

    def add(self, name, result):
        self.results.append((name, result))
        return result

    def finish(self):
        self.finished = _now()
        return self


# -- encoding --------------------------------------------------------------------

def _float(x):
    if math.isfinite(x):
        return x
    return {"$float": "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")}


def encode(obj):
    """Plain JSON-compatible structure for a result object."""
    match obj:
        case bool() | str() | None:
            return obj
        case int() | np.integer():
            return int(obj)
        case float() | np.floating():
            return _float(float(obj))
        case GridSpec():
            return {"$type": "GridSpec", **obj.to_dict()}
        case np.ndarray():
            return [encode(x) for x in obj.tolist()]
        case list() | tuple():
            return [encode(x) for x in obj]
        case dict():
            if all(isinstance(k, str) and not k.startswith("$") for k in obj):
                return {k: encode(v) for k, v in obj.items()}
            return {"$map": [[encode(k), encode(v)] for k, v in obj.items()]}
    if dataclasses.is_dataclass(obj) and type(obj).__name__ in _TYPES:
        out = {"$type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = encode(getattr(obj, f.name))
        return out
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def decode(data):
    """Inverse of :func:`encode`."""
    match data:
        case list():
            return [decode(x) for x in data]
        case {"$float": tag}:
            try:
                return {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}[tag]
            except (KeyError, TypeError):
                raise SchemaMismatch(f"unknown float tag {tag!r}") from None
        case {"$map": items}:
            return {decode(k): decode(v) for k, v in items}
        case {"$type": "GridSpec"}:
            return GridSpec.from_dict(data)
        case {"$type": name}:
            cls = _TYPES.get(name)
            if cls is None:
                raise SchemaMismatch(f"unknown result type {name!r}")
            kwargs = {k: decode(v) for k, v in data.items() if k != "$type"}
            try:
                return cls(**kwargs)
            except TypeError as exc:
                raise SchemaMismatch(f"bad fields for {name}: {exc}") from None
        case dict():
            return {k: decode(v) for k, v in data.items()}
    return data


def to_dict(r):
    return {
        "schema": SCHEMA,
        "version": r.version,
        "expr": r.expr,
        "config": encode(r.config.to_dict()),
        "results": [{"name": n, "result": encode(v)} for n, v in r.results],
        "timestamps": {"started": r.started, "finished": r.finished},
    }


def from_dict(d):
    if not isinstance(d, dict):
        raise SchemaMismatch("report must be a JSON object")
    missing = {"schema", "version", "expr", "config", "results"} - d.keys()
    if missing:
        raise SchemaMismatch(f"report lacks keys {sorted(missing)}")
    if d["schema"] != SCHEMA:
        raise SchemaMismatch(f"report schema {d['schema']!r}, this build reads {SCHEMA}")
    try:
        config = CheckConfig.from_dict(decode(d["config"]))
        results = [(item["name"], decode(item["result"])) for item in d["results"]]
        stamps = d.get("timestamps", {})
        return RunReport(
            expr=d["expr"], config=config, results=results, version=d["version"],
            started=stamps.get("started", ""), finished=stamps.get("finished", ""),
        )
    except SchemaMismatch:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed report: {exc}") from None


def write_json(r, path):
    text = json.dumps(to_dict(r), indent=2, allow_nan=False)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path} is not valid JSON: {exc}") from None
    return from_dict(data)


def pipeline_summary(e, c):
    """Condense a smooth evaluator built from ``e`` into a serialisable record."""
    kernel = getattr(c.c1, "kernel", None)
    return PipelineSummary(
        expr=str(e),
        n_max=c.n_max,
        kernel_norm=kernel.norm if kernel else math.nan,
        glue_value=c.value(1.0),
        glue_derivatives=[c.derivative(n, 1.0) for n in range(1, c.n_max + 1)],
        report=c.report,
    )


# -- CSV samples ---------------------------------------------------------------

def write_samples_csv(f, points, deriv_orders, path, cfg=None):
    """Tabulate ``f`` and its first ``deriv_orders`` derivatives.

    ``f`` is a smooth evaluator or an expression (values only).  ``points``
    is a :class:`GridSpec` or a sequence of ``u = log t`` values.
    """
    u = points.points() if isinstance(points, GridSpec) else np.asarray(points, dtype=float)
    t = np.exp(u)
    if isinstance(f, SmoothEvaluator):
        if deriv_orders > f.n_max:
            raise ValueError(f"evaluator supports derivatives up to {f.n_max}")
        cols = [f.values(t, n) for n in range(deriv_orders + 1)]
    else:
        if deriv_orders:
            raise ValueError("expressions are tabulated without derivatives")
        cols = [core.evaluate(f, u, cfg)]
    header = ["t", "u", "value"] + [f"d{n}" for n in range(1, deriv_orders + 1)]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(u.size):
                w.writerow(["%.17g" % x for x in (t[i], u[i], *(c[i] for c in cols))])
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc
