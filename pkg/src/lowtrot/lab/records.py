"""Experiment records and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("leakage", "moment_leakage", "eff_leakage", "formula_error", "corollary", "order_fit", "plan_compare")

CSV_COLUMNS = (
    "kind", "model", "seed", "N", "p", "s", "delta", "lambda_lo", "lambda_hi",
    "delta_prime", "measured", "bound", "satisfied", "margin", "runtime_ms",
)

NUM_TOL_PER_DIM = 1e-9


@dataclass
class ExperimentRecord:
    """One measured quantity next to its analytic bound.

    ``delta`` is the leakage budget; energy cutoffs go to ``lambda_lo``
    (``Lambda`` or ``Delta``), ``lambda_hi`` (``Lambda'`` or ``Lambda_q``) and
    ``delta_prime``.  Anything else lives in ``info`` (JSON only).
    """

    kind: str
    model: str
    seed: int | None
    N: int
    measured: float
    bound: float
    dim: int = 1
    p: int | None = None
    s: float | None = None
    delta: float | None = None
    lambda_lo: float | None = None
    lambda_hi: float | None = None
    delta_prime: float | None = None
    runtime_ms: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown record kind {self.kind!r}")

    @property
    def tolerance(self) -> float:
        return NUM_TOL_PER_DIM * self.dim

    @property
    def satisfied(self) -> bool:
        return bool(self.measured <= self.bound + self.tolerance)

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    def row(self) -> dict:
        return {
            "kind": self.kind, "model": self.model, "seed": self.seed, "N": self.N,
            "p": self.p, "s": self.s, "delta": self.delta,
            "lambda_lo": self.lambda_lo, "lambda_hi": self.lambda_hi,
            "delta_prime": self.delta_prime, "measured": self.measured,
            "bound": self.bound, "satisfied": self.satisfied, "margin": self.margin,
            "runtime_ms": self.runtime_ms,
        }

    def to_json(self) -> dict:
        d = {k: _json_value(v) for k, v in self.row().items()}
        d["info"] = {k: _json_value(v) for k, v in self.info.items()}
        return d


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = r.row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(records: Iterable[ExperimentRecord]) -> str:
    return json.dumps([r.to_json() for r in records], indent=1, sort_keys=True) + "\n"


def write_records(records: Sequence[ExperimentRecord], out_dir, stem: str = "records", fmt: str = "both") -> list[Path]:
    if fmt not in ("csv", "json", "both"):
        raise ValueError("format must be csv, json or both")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        path = out / f"{stem}.csv"
        path.write_text(to_csv(records))
        written.append(path)
    if fmt in ("json", "both"):
        path = out / f"{stem}.json"
        path.write_text(to_json(records))
        written.append(path)
    return written


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(records: Sequence[ExperimentRecord]) -> dict:
    by_kind: dict[str, dict[str, int]] = {}
    for r in records:
        k = by_kind.setdefault(r.kind, {"records": 0, "violations": 0})
        k["records"] += 1
        k["violations"] += int(not r.satisfied)
    return {
        "records": len(records),
        "violations": sum(v["violations"] for v in by_kind.values()),
        "by_kind": by_kind,
    }
