"""Dense, spectrum-cached view of a Hamiltonian spec."""

from __future__ import annotations

import re
from collections.abc import Mapping
from functools import cached_property, lru_cache

import numpy as np

from ..hamiltonian import (
    HamiltonianSpec,
    assemble_dense,
    assemble_layers,
    model_gallery,
    parameters,
)
from ..linalg import HermitianOperator, expm_i
from ..spectral import effective, projector_gt, projector_le


class DenseModel:
    """A spec with its full and per-layer dense operators.

    Eigensystems, projectors, effective layers and layer exponentials are
    cached, since sweeps query many ``(s, Lambda)`` points against the same
    Hamiltonian.
    """

    def __init__(self, spec: HamiltonianSpec, *, seed: int | None = None):
        self.spec = spec
        self.seed = seed
        self.params = parameters(spec)
        self._proj: dict[tuple[str, float], np.ndarray] = {}
        self._eff: dict[float, list[HermitianOperator]] = {}

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def N(self) -> int:
        return self.spec.n_sites

    @cached_property
    def H(self) -> HermitianOperator:
        return assemble_dense(self.spec)

    @cached_property
    def layers(self) -> list[HermitianOperator]:
        return assemble_layers(self.spec)

    @property
    def dim(self) -> int:
        return self.H.dim

    @property
    def eigs(self):
        return self.H.eigensystem

    @property
    def E0(self) -> float:
        return float(self.eigs.values[0])

    @property
    def Emax(self) -> float:
        return float(self.eigs.values[-1])

    def p_le(self, threshold: float) -> np.ndarray:
        key = ("le", float(threshold))
        if key not in self._proj:
            self._proj[key] = projector_le(self.eigs, threshold).matrix
        return self._proj[key]

    def p_gt(self, threshold: float) -> np.ndarray:
        key = ("gt", float(threshold))
        if key not in self._proj:
            self._proj[key] = projector_gt(self.eigs, threshold).matrix
        return self._proj[key]

    def effective_layers(self, cutoff: float) -> list[HermitianOperator]:
        key = float(cutoff)
        if key not in self._eff:
            self._eff[key] = [effective(x, self.eigs, cutoff).operator for x in self.layers]
        return self._eff[key]

    def evolution(self, s: float) -> np.ndarray:
        return expm_i(self.H, s)

    def resolve(self, expr, ref: float | None = None) -> float:
        return resolve_energy(expr, self.E0, self.Emax, self.params.J, ref)

    def __repr__(self) -> str:
        return f"DenseModel({self.name}, N={self.N}, seed={self.seed})"


@lru_cache(maxsize=64)
def _cached_gallery(name: str, n: int, couplings: tuple, seed: int | None) -> DenseModel:
    return DenseModel(model_gallery(name, n, dict(couplings), seed=seed), seed=seed)


def gallery_model(name: str, n: int, couplings: Mapping | None = None, seed: int | None = None) -> DenseModel:
    """Memoized :class:`DenseModel` for a gallery model."""
    return _cached_gallery(name, int(n), tuple(sorted((couplings or {}).items())), seed)


def as_model(obj) -> DenseModel:
    if isinstance(obj, DenseModel):
        return obj
    if isinstance(obj, HamiltonianSpec):
        return DenseModel(obj)
    raise TypeError(f"expected DenseModel or HamiltonianSpec, got {type(obj).__name__}")


_TERM = re.compile(r"\s*([+-])\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([JW]?)")
_BASE = re.compile(r"\s*(E0|Emax|[+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)")


def resolve_energy(expr, e0: float, emax: float, J: float, ref: float | None = None) -> float:
    """Turn an energy expression into an absolute (shifted) energy.

    Accepted forms: a number; ``E0`` or ``Emax`` followed by ``+x``/``-x``
    offsets with an optional unit ``J`` (term strength) or ``W`` (spectral
    width ``Emax - E0``); or an offset alone (``"+6J"``) taken relative to
    ``ref``.  Examples: ``"E0+1J"``, ``"E0+0.25W"``, ``"+6J"``, ``"3.5"``.
    """
    if isinstance(expr, (int, float, np.floating, np.integer)):
        return float(expr)
    text = str(expr).strip()
    units = {"": 1.0, "J": J, "W": emax - e0}
    if text[:1] in "+-" and (ref is not None or not _looks_numeric(text)):
        if ref is None:
            raise ValueError(f"relative energy {text!r} needs a reference")
        value, rest = float(ref), text
    else:
        m = _BASE.match(text)
        if not m:
            raise ValueError(f"cannot parse energy expression {text!r}")
        tok = m.group(1)
        value = e0 if tok == "E0" else emax if tok == "Emax" else float(tok)
        rest = text[m.end():]
    pos = 0
    while pos < len(rest):
        m = _TERM.match(rest, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse energy expression {text!r}")
        sign = 1.0 if m.group(1) == "+" else -1.0
        value += sign * float(m.group(2)) * units[m.group(3)]
        pos = m.end()
        if rest[pos:].strip() == "":
            break
    return value


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
