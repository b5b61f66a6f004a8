"""Product-formula schedules and their dense application.

A :class:`Schedule` is the ordered list of ``(layer, coefficient)`` steps;
step ``j`` applies ``exp(-i c_j s H_{l_j})`` and steps are applied in list
order, so the operator is ``step_q ... step_2 step_1``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonian import SystemParams
from .linalg import EigenSystem, HermitianOperator, expm_i
from .spectral import effective, projector_le

VARIANTS = ("exact", "effective", "projected", "projected_effective")


@dataclass(frozen=True)
class Schedule:
    order: int
    steps: tuple[tuple[int, float], ...]
    n_layers: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not self.steps:
            raise ValueError("a schedule needs at least one step")
        totals = np.zeros(self.n_layers)
        for layer, c in self.steps:
            if not 0 <= layer < self.n_layers:
                raise ValueError(f"step layer {layer} outside [0, {self.n_layers})")
            totals[layer] += c
        if not np.allclose(totals, 1.0, atol=1e-12):
            raise ValueError(f"per-layer coefficients must sum to 1, got {totals.tolist()}")

    @property
    def q(self) -> int:
        return len(self.steps)

    @property
    def weight(self) -> float:
        return float(sum(abs(c) for _, c in self.steps))

    @property
    def kappa(self) -> float:
        return self.weight / self.n_layers

    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.steps])

    def is_palindromic(self) -> bool:
        return all(a[0] == b[0] and math.isclose(a[1], b[1], rel_tol=0, abs_tol=1e-14)
                   for a, b in zip(self.steps, reversed(self.steps)))

    def to_dict(self) -> dict:
        return {"p": self.order, "steps": [[l, c] for l, c in self.steps], "weight": self.weight}

    @classmethod
    def from_dict(cls, data: dict, n_layers: int | None = None) -> Schedule:
        steps = tuple((int(l), float(c)) for l, c in data["steps"])
        L = n_layers if n_layers is not None else 1 + max(l for l, _ in steps)
        return cls(int(data["p"]), steps, L)


def save_schedule(schedule: Schedule, path) -> None:
    Path(path).write_text(json.dumps(schedule.to_dict(), indent=2) + "\n")


def load_schedule(path, n_layers: int | None = None) -> Schedule:
    return Schedule.from_dict(json.loads(Path(path).read_text()), n_layers)


def _merge(steps: list[tuple[int, float]]) -> list[tuple[int, float]]:
    out: list[tuple[int, float]] = []
    for layer, c in steps:
        if out and out[-1][0] == layer:
            out[-1] = (layer, out[-1][1] + c)
        else:
            out.append((layer, c))
    return out


def _suzuki_steps(p: int, L: int) -> list[tuple[int, float]]:
    if p == 1:
        return [(l, 1.0) for l in range(L)]
    if p == 2:
        return _merge([(l, 0.5) for l in range(L)] + [(l, 0.5) for l in reversed(range(L))])
    u = 1.0 / (4.0 - 4.0 ** (1.0 / (p - 1)))
    inner = _suzuki_steps(p - 2, L)
    outer = [(l, u * c) for l, c in inner]
    middle = [(l, (1.0 - 4.0 * u) * c) for l, c in inner]
    return _merge(outer * 2 + middle + outer * 2)


def suzuki_schedule(p: int, n_layers: int) -> Schedule:
    """Lie (p=1), Strang (p=2) or Suzuki recursive (even p >= 4) schedule."""
    if n_layers < 1:
        raise ValueError("need at least one layer")
    if p < 1 or (p > 2 and p % 2):
        raise ValueError(f"order {p} unsupported: use 1, 2 or an even order >= 4")
    return Schedule(p, tuple(_suzuki_steps(p, n_layers)), n_layers)


def planning_schedule(p: int, n_layers: int) -> Schedule:
    """Schedule used for cost planning at order ``p``.

    Odd ``p > 1`` has no Suzuki construction; the order ``p + 1`` formula is
    also of order ``p`` and supplies ``q`` and ``kappa``.
    """
    if p > 2 and p % 2:
        sched = suzuki_schedule(p + 1, n_layers)
        return Schedule(p, sched.steps, n_layers)
    return suzuki_schedule(p, n_layers)


@dataclass(frozen=True)
class LambdaLadder:
    values: tuple[float, ...]  # Lambda_0 .. Lambda_q
    delta: float

    @property
    def rungs(self) -> tuple[float, ...]:
        """``Lambda_1 .. Lambda_q``, one per schedule step."""
        return self.values[1:]

    @property
    def top(self) -> float:
        return self.values[-1]


def ladder_increment(step_time: float, delta: float, q: int, params: SystemParams) -> float:
    return (params.alpha * abs(step_time) * params.M + math.log(q / delta)) / params.lam


def ladder(base: float, schedule: Schedule, s: float, delta: float, params: SystemParams) -> LambdaLadder:
    """Minimal admissible energy ladder starting at ``base``.

    Each rung sits exactly ``(alpha |s_j| M + log(q/delta)) / lambda`` above
    the previous one.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not math.isfinite(s):
        raise ValueError("s must be finite")
    q = schedule.q
    values = [float(base)]
    for _, c in schedule.steps:
        values.append(values[-1] + ladder_increment(c * s, delta, q, params))
    return LambdaLadder(tuple(values), float(delta))


def scaled_ladder(base: float, tops: Sequence[float], delta: float = math.nan) -> LambdaLadder:
    """Ladder from explicit rungs (for probing bounds with arbitrary thresholds)."""
    return LambdaLadder((float(base),) + tuple(float(t) for t in tops), delta)


def _eigs(spectrum) -> EigenSystem:
    if isinstance(spectrum, HermitianOperator):
        return spectrum.eigensystem
    if isinstance(spectrum, EigenSystem):
        return spectrum
    raise ValueError("projected and effective variants need the spectrum of H")


def apply_formula(
    schedule: Schedule,
    s: float,
    layers: Sequence[HermitianOperator],
    variant: str = "exact",
    *,
    spectrum=None,
    ladder: LambdaLadder | None = None,
    cutoff: float | None = None,
    effective_layers: Sequence[HermitianOperator] | None = None,
) -> np.ndarray:
    """Dense operator of a product formula.

    ``exact``               W(s)       with the layers themselves
    ``effective``           W-bar(s)   with layers compressed below ``cutoff``
    ``projected``           W^Lambda   projecting onto ``<= Lambda_j`` after step j
    ``projected_effective`` both of the above

    ``spectrum`` (``H`` or its eigensystem) is required by every variant but
    ``exact``.  Effective variants reject ``cutoff < Lambda_q``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if len(layers) != schedule.n_layers:
        raise ValueError(f"schedule expects {schedule.n_layers} layers, got {len(layers)}")
    dim = layers[0].dim
    projected = variant.startswith("projected")
    is_effective = variant.endswith("effective")
    eigs = _eigs(spectrum) if (projected or is_effective) else None

    if projected:
        if ladder is None or len(ladder.rungs) != schedule.q:
            raise ValueError("projected variants need a ladder with one rung per step")
    if is_effective:
        if cutoff is None:
            raise ValueError("effective variants need a cutoff")
        if projected and cutoff < ladder.top - 1e-12:
            raise ValueError(f"cutoff {cutoff} is below the top rung {ladder.top}")
        gens = effective_layers
        if gens is None:
            gens = [effective(x, eigs, cutoff).operator for x in layers]
    else:
        gens = layers

    out = np.eye(dim, dtype=np.complex128)
    for j, (l, c) in enumerate(schedule.steps):
        out = expm_i(gens[l], c * s) @ out
        if projected:
            out = projector_le(eigs, ladder.rungs[j]).matrix @ out
    return out
