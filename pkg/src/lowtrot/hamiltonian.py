"""k-local spin Hamiltonians built from Pauli term tables.

A Hamiltonian is a list of :class:`LocalTerm` objects (Pauli strings grouped
by the exact site set they act on) partitioned into layers of mutually
disjoint terms.  Every layer is shifted to be positive semidefinite, and the
structural parameters consumed by the analytic bounds are derived from the
shifted terms.

Conventions
-----------
* site 0 is the most significant qubit of a basis-state index;
* layers and terms are indexed from 0;
* the term strength ``J`` is the spectral norm of a term *after* its
  positivity shift, i.e. ``lambda_max - lambda_min`` of its local block.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .linalg import HermitianOperator

PAULI_LETTERS = frozenset("XYZ")
SHIFT_MODES = ("per_layer", "per_term")
DEFAULT_NMAX = 12


def n_max() -> int:
    """Largest site count accepted by dense assembly (env ``LOWTROT_NMAX``)."""
    raw = os.environ.get("LOWTROT_NMAX")
    return int(raw) if raw else DEFAULT_NMAX


@dataclass(frozen=True)
class PauliTerm:
    sites: tuple[int, ...]
    letters: str
    coefficient: float

    def __post_init__(self):
        if len(self.sites) == 0:
            raise ValueError("a Pauli term must act on at least one site")
        if len(self.letters) != len(self.sites):
            raise ValueError(f"{len(self.letters)} letters for {len(self.sites)} sites")
        if any(b <= a for a, b in zip(self.sites, self.sites[1:])):
            raise ValueError(f"sites must be strictly increasing, got {self.sites}")
        if self.sites[0] < 0:
            raise ValueError("site indices must be non-negative")
        bad = set(self.letters) - PAULI_LETTERS
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")

    @classmethod
    def make(cls, sites: Iterable[int], letters: str, coefficient: float) -> PauliTerm:
        """Build a term from possibly unsorted sites, keeping letters aligned."""
        pairs = sorted(zip((int(s) for s in sites), letters.upper()))
        if len(pairs) != len(letters):
            raise ValueError("sites and letters differ in length")
        return cls(tuple(p[0] for p in pairs), "".join(p[1] for p in pairs), float(coefficient))


@dataclass(frozen=True)
class LocalTerm:
    """Pauli strings sharing one site set, plus an identity shift."""

    sites: tuple[int, ...]
    paulis: tuple[PauliTerm, ...]
    shift: float = 0.0

    def __post_init__(self):
        for p in self.paulis:
            if p.sites != self.sites:
                raise ValueError(f"Pauli term on {p.sites} grouped under {self.sites}")

    def local_matrix(self) -> np.ndarray:
        """Dense block on ``len(sites)`` qubits, shift included."""
        n = len(self.sites)
        pos = {s: i for i, s in enumerate(self.sites)}
        out = np.zeros((1 << n, 1 << n), dtype=np.complex128)
        for p in self.paulis:
            _kernels.accumulate_pauli(out, n, [pos[s] for s in p.sites], p.letters, p.coefficient)
        out[np.diag_indices_from(out)] += self.shift
        return out

    def local_spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.local_matrix())

    @property
    def strength(self) -> float:
        """Spectral norm of the block after a non-negative positivity shift."""
        ev = self.local_spectrum()
        return float(ev[-1] + max(0.0, -ev[0]))


def group_terms(paulis: Iterable[PauliTerm]) -> list[LocalTerm]:
    """Group Pauli strings by site set, in order of first appearance."""
    groups: dict[tuple[int, ...], list[PauliTerm]] = {}
    for p in paulis:
        groups.setdefault(p.sites, []).append(p)
    return [LocalTerm(sites, tuple(ps)) for sites, ps in groups.items()]


def degree(terms: Sequence[LocalTerm], n_sites: int | None = None) -> int:
    counts: dict[int, int] = {}
    for t in terms:
        for s in t.sites:
            counts[s] = counts.get(s, 0) + 1
    return max(counts.values(), default=0)


def color_layers(terms: Sequence[LocalTerm], n_sites: int | None = None, k: int | None = None) -> list[list[int]]:
    """Greedy first-fit partition of terms into layers of disjoint site sets.

    Terms are visited in index order and placed into the first layer with no
    site in common.  Each term conflicts with at most ``k*(d-1)`` others, so
    at most ``k*(d-1) + 1`` layers are produced.
    """
    if not terms:
        raise ValueError("cannot color an empty term list")
    layers: list[list[int]] = []
    occupied: list[set[int]] = []
    for idx, t in enumerate(terms):
        if k is not None and len(t.sites) > k:
            raise ValueError(f"term {idx} acts on {len(t.sites)} sites, more than k={k}")
        if n_sites is not None and max(t.sites) >= n_sites:
            raise ValueError(f"term {idx} touches site {max(t.sites)} >= N={n_sites}")
        site_set = set(t.sites)
        for layer, occ in zip(layers, occupied):
            if not occ & site_set:
                layer.append(idx)
                occ |= site_set
                break
        else:
            layers.append([idx])
            occupied.append(set(site_set))
    return layers


@dataclass(frozen=True)
class ShiftRecord:
    mode: str
    term_shifts: tuple[float, ...]
    layer_shifts: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.term_shifts) + sum(self.layer_shifts))


def shift_positive(layer: Sequence[LocalTerm], mode: str = "per_term") -> tuple[list[LocalTerm], float]:
    """Shift a layer of disjoint terms so that it is positive semidefinite.

    Returns the (possibly modified) terms and the layer-level shift.  In
    ``per_term`` mode each term absorbs its own shift ``max(0, -lambda_min)``
    and the layer shift is 0.  In ``per_layer`` mode terms are untouched and
    the layer receives ``max(0, -lambda_min(H_l))``; because the terms act on
    disjoint sites, ``lambda_min(H_l)`` is the sum of the local minima.
    """
    if mode not in SHIFT_MODES:
        raise ValueError(f"shift mode must be one of {SHIFT_MODES}, got {mode!r}")
    mins = [float(t.local_spectrum()[0]) for t in layer]
    if mode == "per_term":
        out = [replace(t, shift=t.shift + max(0.0, -m)) for t, m in zip(layer, mins)]
        return out, 0.0
    return list(layer), max(0.0, -sum(mins))


@dataclass(frozen=True)
class SystemParams:
    N: int
    k: int
    d: int
    J: float
    M: int
    L: int
    q: int = 1
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("N", "k", "d", "M", "L", "q"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.J > 0:
            raise ValueError("J must be positive")
        if self.kappa < 1 - 1e-12:
            raise ValueError("kappa must be at least 1")

    @property
    def lam(self) -> float:
        """Decay rate ``1/(2 J d k)`` of the leakage bounds."""
        return 1.0 / (2.0 * self.J * self.d * self.k)

    @property
    def alpha(self) -> float:
        return math.e * self.J

    @property
    def alpha_prime(self) -> float:
        return self.kappa * self.alpha

    def with_schedule(self, schedule) -> SystemParams:
        return replace(self, q=schedule.q, kappa=max(1.0, schedule.kappa))

    def scaled_to(self, n_sites: int) -> SystemParams:
        """Same local structure on ``n_sites`` sites (``M`` grows with ``N``)."""
        m = max(1, math.ceil(self.M * n_sites / self.N))
        return replace(self, N=int(n_sites), M=m)


@dataclass(frozen=True)
class HamiltonianSpec:
    n_sites: int
    terms: tuple[LocalTerm, ...]
    layers: tuple[tuple[int, ...], ...]
    shift_mode: str = "per_term"
    layer_shifts: tuple[float, ...] = ()
    name: str = "custom"

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        seen = sorted(i for layer in self.layers for i in layer)
        if seen != list(range(len(self.terms))):
            raise ValueError("every term index must appear in exactly one layer")
        for li, layer in enumerate(self.layers):
            used: set[int] = set()
            for i in layer:
                s = set(self.terms[i].sites)
                if used & s:
                    raise ValueError(f"layer {li} contains overlapping terms")
                used |= s
        if self.layer_shifts and len(self.layer_shifts) != len(self.layers):
            raise ValueError("one layer shift per layer required")
        for t in self.terms:
            if max(t.sites) >= self.n_sites:
                raise ValueError(f"term on {t.sites} exceeds N={self.n_sites}")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def layer_shift(self, l: int) -> float:
        return self.layer_shifts[l] if self.layer_shifts else 0.0

    @property
    def shift_record(self) -> ShiftRecord:
        return ShiftRecord(
            self.shift_mode,
            tuple(t.shift for t in self.terms),
            tuple(self.layer_shift(l) for l in range(self.n_layers)),
        )

    def term_strengths(self) -> list[float]:
        return [t.strength for t in self.terms]


def build_spec(
    n_sites: int,
    paulis: Iterable[PauliTerm],
    *,
    shift_mode: str = "per_term",
    layers: Sequence[Sequence[int]] | None = None,
    k: int | None = None,
    name: str = "custom",
) -> HamiltonianSpec:
    """Group, color and shift a list of Pauli terms into a spec."""
    terms = group_terms(paulis)
    if not terms:
        raise ValueError("Hamiltonian has no terms")
    if layers is None:
        layers = color_layers(terms, n_sites, k)
    else:
        layers = [list(layer) for layer in layers]
    shifted = list(terms)
    layer_shifts = []
    for layer in layers:
        new, a_l = shift_positive([terms[i] for i in layer], shift_mode)
        for i, t in zip(layer, new):
            shifted[i] = t
        layer_shifts.append(a_l)
    return HamiltonianSpec(
        n_sites=n_sites,
        terms=tuple(shifted),
        layers=tuple(tuple(layer) for layer in layers),
        shift_mode=shift_mode,
        layer_shifts=tuple(layer_shifts),
        name=name,
    )


def parameters(spec: HamiltonianSpec, *, pad: bool = True) -> SystemParams:
    """Structural parameters ``(N, k, d, J, M, L)`` of a spec.

    With ``pad`` (the default) ``M`` is raised to ``ceil(N / L)`` when the
    layers hold fewer than ``N`` terms in total, as if trivial terms were
    added; this only loosens the bounds and never touches the dynamics.
    """
    n = spec.n_sites
    k = max(len(t.sites) for t in spec.terms)
    d = degree(spec.terms)
    J = max(spec.term_strengths())
    L = spec.n_layers
    M = max(len(layer) for layer in spec.layers)
    if M * L < n:
        if not pad:
            raise ValueError(f"M*L = {M * L} < N = {n} and padding is disabled")
        M = math.ceil(n / L)
    if M * L > d * n:
        warnings.warn(f"M*L = {M * L} exceeds d*N = {d * n}", stacklevel=2)
    return SystemParams(N=n, k=k, d=d, J=J, M=M, L=L, q=L, kappa=1.0)


def check_size(n_sites: int) -> None:
    cap = n_max()
    if n_sites > cap:
        raise ValueError(f"N = {n_sites} exceeds the dense cap N_max = {cap} (set LOWTROT_NMAX)")


def assemble_dense(spec: HamiltonianSpec, which: str | int = "full") -> HermitianOperator:
    """Dense ``2**N`` matrix of the whole Hamiltonian or of one layer."""
    check_size(spec.n_sites)
    n = spec.n_sites
    dim = 1 << n
    if which == "full":
        layer_ids = range(spec.n_layers)
    elif isinstance(which, (int, np.integer)) and 0 <= which < spec.n_layers:
        layer_ids = [int(which)]
    else:
        raise ValueError(f"which must be 'full' or a layer index in [0, {spec.n_layers}), got {which!r}")
    out = np.zeros((dim, dim), dtype=np.complex128)
    diag = 0.0
    for l in layer_ids:
        diag += spec.layer_shift(l)
        for i in spec.layers[l]:
            t = spec.terms[i]
            for p in t.paulis:
                _kernels.accumulate_pauli(out, n, p.sites, p.letters, p.coefficient)
            diag += t.shift
    out[np.diag_indices(dim)] += diag
    return HermitianOperator(out)


def assemble_layers(spec: HamiltonianSpec) -> list[HermitianOperator]:
    return [assemble_dense(spec, l) for l in range(spec.n_layers)]


# --- model gallery ---------------------------------------------------------

GALLERY = ("heisenberg_chain", "tfim_chain", "xy_chain", "random_klocal")

_ALLOWED_COUPLINGS = {
    "heisenberg_chain": {"J": 1.0, "periodic": False},
    "tfim_chain": {"J": 1.0, "h": 1.0, "periodic": False},
    "xy_chain": {"J": 1.0, "h": 0.0, "periodic": False},
    "random_klocal": {"k": 2, "d": 3, "strings": 3},
}


def _bonds(n: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        bonds.append((0, n - 1))
    return bonds


def _bond_layers(bonds: list[tuple[int, int]], n: int, periodic: bool) -> list[list[int]]:
    even = [i for i, b in enumerate(bonds) if b[1] == b[0] + 1 and b[0] % 2 == 0]
    odd = [i for i, b in enumerate(bonds) if b[1] == b[0] + 1 and b[0] % 2 == 1]
    layers = [even, odd]
    wrap = [i for i, b in enumerate(bonds) if b[1] != b[0] + 1]
    if wrap:
        # (0, n-1) fits the odd layer when n is even; otherwise it needs its own.
        if n % 2 == 0:
            odd.extend(wrap)
        else:
            layers.append(wrap)
    return [layer for layer in layers if layer]


def model_gallery(
    name: str,
    n_sites: int,
    couplings: Mapping[str, object] | None = None,
    *,
    seed: int | None = None,
    shift_mode: str = "per_term",
) -> HamiltonianSpec:
    """Named spin models with positivity shifts applied.

    ``heisenberg_chain``: ``J/4 (XX + YY + ZZ)`` per bond, even/odd layers.
    ``tfim_chain``: ``-J ZZ`` bonds and ``-h X`` fields, layers even/odd/field.
    ``xy_chain``: ``J/4 (XX + YY)`` bonds, optional ``-h/2 Z`` field layer.
    ``random_klocal``: seeded random terms of locality ``<= k`` and degree ``<= d``.
    """
    if name not in _ALLOWED_COUPLINGS:
        raise ValueError(f"unknown model {name!r}; choose from {GALLERY}")
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    opts = dict(_ALLOWED_COUPLINGS[name])
    for key, value in (couplings or {}).items():
        if key not in opts:
            raise ValueError(f"invalid coupling {key!r} for {name}; allowed: {sorted(opts)}")
        opts[key] = value

    if name == "random_klocal":
        return _random_klocal(n_sites, int(opts["k"]), int(opts["d"]), int(opts["strings"]), seed, shift_mode)

    if n_sites < 2:
        raise ValueError(f"{name} needs at least two sites")
    J = float(opts["J"])
    if not J > 0:
        raise ValueError("coupling J must be positive")
    periodic = bool(opts["periodic"])
    bonds = _bonds(n_sites, periodic)
    layers = _bond_layers(bonds, n_sites, periodic)
    paulis: list[PauliTerm] = []
    if name == "heisenberg_chain":
        for b in bonds:
            paulis += [PauliTerm.make(b, a + a, J / 4) for a in "XYZ"]
    elif name == "tfim_chain":
        h = float(opts["h"])
        paulis += [PauliTerm.make(b, "ZZ", -J) for b in bonds]
        if h != 0:
            paulis += [PauliTerm((i,), "X", -h) for i in range(n_sites)]
            layers.append(list(range(len(bonds), len(bonds) + n_sites)))
    else:
        h = float(opts["h"])
        for b in bonds:
            paulis += [PauliTerm.make(b, "XX", J / 4), PauliTerm.make(b, "YY", J / 4)]
        if h != 0:
            paulis += [PauliTerm((i,), "Z", -h / 2) for i in range(n_sites)]
            layers.append(list(range(len(bonds), len(bonds) + n_sites)))
    return build_spec(n_sites, paulis, shift_mode=shift_mode, layers=layers, name=name)


def _random_klocal(n: int, k: int, d: int, strings: int, seed: int | None, shift_mode: str) -> HamiltonianSpec:
    if k < 1 or d < 1 or strings < 1:
        raise ValueError("random_klocal needs k, d, strings >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds N={n}")
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=int)
    site_sets: list[tuple[int, ...]] = []
    target = max(1, (d * n) // k)
    for _ in range(50 * n):
        if len(site_sets) >= target:
            break
        free = np.flatnonzero(deg < d)
        size = k if rng.random() < 0.75 else int(rng.integers(1, k + 1))
        if free.size < size:
            continue
        chosen = tuple(sorted(int(x) for x in rng.choice(free, size=size, replace=False)))
        if chosen in site_sets:
            continue
        site_sets.append(chosen)
        deg[list(chosen)] += 1
    paulis = []
    for sites in site_sets:
        for _ in range(int(rng.integers(1, strings + 1))):
            letters = "".join(rng.choice(list("XYZ"), size=len(sites)))
            paulis.append(PauliTerm(sites, letters, float(rng.uniform(-1.0, 1.0))))
    return build_spec(n, paulis, shift_mode=shift_mode, k=k, name="random_klocal")


# --- term-table JSON -------------------------------------------------------


def spec_to_dict(spec: HamiltonianSpec) -> dict:
    return {
        "n_sites": spec.n_sites,
        "model": spec.name,
        "shift_mode": spec.shift_mode,
        "terms": [
            {"sites": list(p.sites), "paulis": p.letters, "coeff": p.coefficient}
            for t in spec.terms
            for p in t.paulis
        ],
        "layers": [list(layer) for layer in spec.layers],
    }


def spec_from_dict(data: Mapping) -> HamiltonianSpec:
    """Inverse of :func:`spec_to_dict`; ``layers`` are optional.

    Layer entries index the *grouped* local terms (Pauli strings sharing a
    site set, in order of first appearance).  Without ``layers`` the greedy
    coloring is used.
    """
    try:
        n = int(data["n_sites"])
        raw_terms = data["terms"]
    except KeyError as exc:
        raise ValueError(f"term table is missing {exc.args[0]!r}") from None
    paulis = [PauliTerm.make(t["sites"], str(t["paulis"]), float(t["coeff"])) for t in raw_terms]
    return build_spec(
        n,
        paulis,
        shift_mode=data.get("shift_mode", "per_term"),
        layers=data.get("layers"),
        name=str(data.get("model", "custom")),
    )


def save_spec(spec: HamiltonianSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


def load_spec(path) -> HamiltonianSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))
