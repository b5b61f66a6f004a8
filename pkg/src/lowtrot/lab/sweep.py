"""Deterministic parameter sweeps over dense-oracle measurements."""

from __future__ import annotations

import itertools
import json
import os
import warnings
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..formulas import scaled_ladder, suzuki_schedule
from ..hamiltonian import GALLERY, load_spec
from . import measure
from .model import DenseModel, gallery_model
from .records import ExperimentRecord, summarize, write_records

SWEEP_KINDS = ("leakage", "moment_leakage", "eff_leakage", "formula_error", "corollary", "order_fit")


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    """Grid sweep description.

    Energies are expressions understood by :func:`resolve_energy`; ``hi`` is
    resolved relative to ``lo``, ``cutoff`` relative to ``hi``.  Grid axes
    irrelevant to a kind are ignored.  ``preset = "acceptance"`` replaces the
    grids with the built-in randomized acceptance plan.
    """

    model: str = "heisenberg_chain"
    n: list[int] = field(default_factory=lambda: [6])
    couplings: dict = field(default_factory=dict)
    seeds: list[int | None] = field(default_factory=lambda: [None])
    kinds: list[str] = field(default_factory=lambda: ["leakage"])
    layers: list[int] | None = None
    s: list[float] = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    cutoff: list = field(default_factory=list)
    Delta: list = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    p: list[int] = field(default_factory=lambda: [1])
    moments: list[int] = field(default_factory=lambda: [1])
    which: list[str] = field(default_factory=lambda: ["sandwiched", "projected"])
    restriction: list[str] = field(default_factory=lambda: ["low_energy", "full"])
    fit_s: list[float] = field(default_factory=list)
    with_log_term: bool = True
    grouped: bool = False
    gamma_tilde: float = 1.0
    out: str | None = None
    format: str = "both"
    timing: bool = False
    workers: int = 1
    preset: str | None = None
    preset_seed: int = 20240601

    def validate(self) -> None:
        if self.preset not in (None, "acceptance"):
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.preset is None:
            if self.model not in GALLERY and not Path(self.model).is_file():
                raise ConfigError(f"model {self.model!r} is neither a gallery name nor a spec file")
            bad = set(self.kinds) - set(SWEEP_KINDS)
            if bad:
                raise ConfigError(f"unknown kinds {sorted(bad)}")
            if any(x < 0 for x in self.s):
                raise ConfigError("step sizes must be non-negative")
            if any(d <= 0 for d in self.delta):
                raise ConfigError("delta values must be positive")
            if any(n < 1 for n in self.moments):
                raise ConfigError("moment powers must be >= 1")
            if set(self.which) - {"sandwiched", "projected"}:
                raise ConfigError("which must be sandwiched or projected")
            if set(self.restriction) - {"low_energy", "full"}:
                raise ConfigError("restriction must be low_energy or full")
        if self.format not in ("csv", "json", "both"):
            raise ConfigError("format must be csv, json or both")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.out is not None:
            _check_writable(Path(self.out))

    @classmethod
    def from_dict(cls, data: dict) -> SweepConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> SweepConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")


@dataclass(frozen=True)
class Task:
    """One unit of sweep work; ``run`` returns its records."""

    kind: str
    model: tuple  # (name or path, n, couplings tuple, seed)
    args: tuple

    def run(self, timing: bool = False) -> list[ExperimentRecord]:
        m = _model(self.model)
        a = dict(self.args)
        if self.kind == "leakage":
            lo = m.resolve(a["lo"])
            return [measure.measure_leakage(m, a["layer"], a["s"], lo, m.resolve(a["hi"], lo), timing=timing)]
        if self.kind == "moment_leakage":
            lo = m.resolve(a["lo"])
            return [measure.measure_moment_leakage(m, a["layer"], a["n"], lo, m.resolve(a["hi"], lo), timing=timing)]
        if self.kind == "eff_leakage":
            lo = m.resolve(a["lo"])
            hi = m.resolve(a["hi"], lo)
            cut = m.resolve(a["cutoff"], hi)
            return [measure.measure_effective_leakage(m, a["layer"], a["s"], lo, hi, cut, a["which"], timing=timing)]
        sched = suzuki_schedule(a["p"], len(m.layers)) if "p" in a else None
        if self.kind == "formula_error":
            return [measure.measure_formula_error(
                m, sched, a["s"], m.resolve(a["Delta"]), a["restriction"], gamma_tilde=a.get("gamma_tilde", 1.0),
                with_log_term=a.get("with_log_term", True), timing=timing)]
        if self.kind == "corollary":
            Delta = m.resolve(a["Delta"])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", measure.VacuousLadderWarning)
                out = measure.corollary_checks(m, sched, a["s"], Delta, a["delta"], timing=timing)
            if a.get("probe"):
                tops = np.linspace(Delta, m.Emax, sched.q + 1)[1:]
                ldr = scaled_ladder(Delta, tops)
                out += measure.corollary_checks(m, sched, a["s"], Delta, a["delta"], ldr=ldr, timing=timing)
            return out
        if self.kind == "order_fit":
            Delta = m.resolve(a["Delta"]) if a.get("Delta") is not None else None
            full, fit = measure.order_fit_record(m, sched, a["s_grid"], Delta, "full")
            out = [full]
            if Delta is not None:
                low, _ = measure.order_fit_record(m, sched, a["s_grid"], Delta, "low_energy", reference=fit.slope)
                out.append(low)
            return out
        raise ValueError(f"unknown task kind {self.kind!r}")


def _model(key: tuple) -> DenseModel:
    name, n, couplings, seed = key
    if name in GALLERY:
        return gallery_model(name, n, dict(couplings), seed)
    return _file_model(str(Path(name).resolve()), seed)


@lru_cache(maxsize=16)
def _file_model(path: str, seed: int | None) -> DenseModel:
    return DenseModel(load_spec(path), seed=seed)


def _freeze(d: dict) -> tuple:
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in d.items()))


def grid_tasks(cfg: SweepConfig) -> list[Task]:
    """Expand a grid config into tasks, in a fixed nested order."""
    tasks: list[Task] = []
    couplings = _freeze(cfg.couplings)
    # a spec file fixes its own size
    sizes = cfg.n if cfg.model in GALLERY else [load_spec(cfg.model).n_sites]
    for seed, n in itertools.product(cfg.seeds, sizes):
        seed_eff = seed if cfg.model == "random_klocal" else None
        key = (cfg.model, int(n), couplings, seed_eff)
        n_layers = len(_model(key).layers) if cfg.layers is None else None
        layers = cfg.layers if cfg.layers is not None else list(range(n_layers))
        for kind in cfg.kinds:
            if kind == "leakage":
                it = ({"layer": l, "s": s, "lo": lo, "hi": hi}
                      for l, s, lo, hi in itertools.product(layers, cfg.s, cfg.lo, cfg.hi))
            elif kind == "moment_leakage":
                it = ({"layer": l, "n": k, "lo": lo, "hi": hi}
                      for l, k, lo, hi in itertools.product(layers, cfg.moments, cfg.lo, cfg.hi))
            elif kind == "eff_leakage":
                it = ({"layer": l, "s": s, "lo": lo, "hi": hi, "cutoff": c, "which": w}
                      for l, s, lo, hi, c, w in itertools.product(layers, cfg.s, cfg.lo, cfg.hi, cfg.cutoff, cfg.which))
            elif kind == "formula_error":
                it = ({"p": p, "s": s, "Delta": D, "restriction": r, "gamma_tilde": cfg.gamma_tilde,
                       "with_log_term": cfg.with_log_term}
                      for p, s, D, r in itertools.product(cfg.p, cfg.s, cfg.Delta, cfg.restriction))
            elif kind == "corollary":
                it = ({"p": p, "s": s, "Delta": D, "delta": d}
                      for p, s, D, d in itertools.product(cfg.p, cfg.s, cfg.Delta, cfg.delta))
            else:
                it = ({"p": p, "s_grid": list(cfg.fit_s), "Delta": D}
                      for p, D in itertools.product(cfg.p, cfg.Delta or [None]) if cfg.fit_s)
            tasks += [Task(kind, key, _freeze(a)) for a in it]
    return tasks


# --- acceptance plan ---------------------------------------------------------

ACCEPTANCE_MODELS = ("heisenberg_chain", "tfim_chain", "random_klocal")
GOLDEN_LOW_ENERGY = {"model": "heisenberg_chain", "N": 6, "Delta": "E0+0.5J", "p": 1, "s": 0.05}
FIT_GRIDS = {1: (0.01, 0.1), 2: (0.02, 0.2)}


def acceptance_tasks(seed: int = 20240601) -> list[Task]:
    """Randomized certification plan, reproducible from ``seed``.

    200 leakage configurations (heisenberg, tfim, random k-local; N in 4, 6, 8)
    with their n = 1, 2, 3 moment checks; a 100-point effective-leakage grid
    (both inequalities); corollaries on N = 6 chains; formula errors and
    order fits on the Heisenberg 6-chain.
    """
    rng = np.random.default_rng(seed)
    tasks: list[Task] = []
    configs = []
    for i in range(200):
        name = ACCEPTANCE_MODELS[i % 3]
        n = int(rng.choice([4, 6, 8]))
        mseed = int(rng.integers(0, 2**31)) if name == "random_klocal" else None
        key = (name, n, (), mseed)
        m = _model(key)
        J, E0, Emax = m.params.J, m.E0, m.Emax
        W = Emax - E0
        layer = int(rng.integers(0, len(m.layers)))
        s = float(rng.uniform(0, 0.5 / J))
        lo = float(rng.uniform(E0 - 0.05 * W, Emax))
        hi = float(rng.uniform(lo, Emax + 0.05 * W))
        configs.append((key, layer, s, lo, hi))
        tasks.append(Task("leakage", key, _freeze({"layer": layer, "s": s, "lo": lo, "hi": hi})))
    for key, layer, _, lo, hi in configs:
        for k in (1, 2, 3):
            tasks.append(Task("moment_leakage", key, _freeze({"layer": layer, "n": k, "lo": lo, "hi": hi})))
    for i in range(100):
        name = ("heisenberg_chain", "tfim_chain")[i % 2]
        key = (name, 6, (), None)
        m = _model(key)
        J, E0, Emax = m.params.J, m.E0, m.Emax
        W = Emax - E0
        lo = float(rng.uniform(E0, E0 + 0.6 * W))
        hi = float(rng.uniform(lo, Emax))
        cut = float(rng.uniform(hi, Emax + 0.05 * W))
        args = {"layer": int(rng.integers(0, len(m.layers))), "s": float(rng.uniform(0, 0.5 / J)),
                "lo": lo, "hi": hi, "cutoff": cut, "which": ("sandwiched", "projected")[(i // 2) % 2]}
        tasks.append(Task("eff_leakage", key, _freeze(args)))
    for name in ("heisenberg_chain", "tfim_chain"):
        key = (name, 6, (), None)
        for p, delta, s in itertools.product((1, 2), (0.3, 0.1, 0.01), (0.02, 0.05, 0.1)):
            tasks.append(Task("corollary", key, _freeze({"p": p, "s": s, "Delta": "E0+0.5J", "delta": delta,
                                                          "probe": True})))
    for name in ("heisenberg_chain", "tfim_chain"):
        key = (name, 6, (), None)
        for p, s, D, r in itertools.product((1, 2), (0.02, 0.05, 0.1), ("E0+0.5J", "E0+1J", "E0+0.25W"),
                                            ("low_energy", "full")):
            tasks.append(Task("formula_error", key, _freeze({"p": p, "s": s, "Delta": D, "restriction": r})))
    key = ("heisenberg_chain", 6, (), None)
    for p, (a, b) in FIT_GRIDS.items():
        grid = [float(x) for x in np.geomspace(a, b, 8)]
        tasks.append(Task("order_fit", key, _freeze({"p": p, "s_grid": grid, "Delta": "E0+0.5J"})))
    return tasks


# --- execution ---------------------------------------------------------------


@dataclass
class SweepResult:
    records: list[ExperimentRecord]
    summary: dict
    files: list[Path] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.summary["violations"]


def run_tasks(tasks: Sequence[Task], workers: int = 1, timing: bool = False) -> list[ExperimentRecord]:
    """Run tasks, merging records in task order whatever the completion order."""
    if workers <= 1:
        chunks = [t.run(timing) for t in tasks]
    else:
        # warm the model caches serially so threads only read them
        for key in dict.fromkeys(t.model for t in tasks):
            m = _model(key)
            m.layers, m.eigs  # noqa: B018
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda t: t.run(timing), tasks))
    return [r for chunk in chunks for r in chunk]


def sweep(config: SweepConfig, stem: str = "sweep") -> SweepResult:
    config.validate()
    tasks = acceptance_tasks(config.preset_seed) if config.preset == "acceptance" else grid_tasks(config)
    records = run_tasks(tasks, config.workers, config.timing)
    files = write_records(records, config.out, stem, config.format) if config.out is not None else []
    return SweepResult(records, summarize(records), files)
