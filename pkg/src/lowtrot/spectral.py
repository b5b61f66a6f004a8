"""Energy projectors and effective (low-energy compressed) operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import EigenSystem, HermitianOperator

# "At most Lambda" is a closed condition; eigenvalues within this distance
# above the threshold are counted as included.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class EnergyProjector:
    threshold: float
    kind: str  # "le" or "gt"
    matrix: np.ndarray
    rank: int


@dataclass(frozen=True)
class EffectiveOperator:
    cutoff: float
    operator: HermitianOperator
    base: HermitianOperator

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix


def _eigs_of(h) -> EigenSystem:
    if isinstance(h, EigenSystem):
        return h
    if isinstance(h, HermitianOperator):
        return h.eigensystem
    raise TypeError("expected an EigenSystem or a HermitianOperator")


def low_rank(eigs: EigenSystem, threshold: float, tie_tol: float = TIE_TOL) -> int:
    return int(np.searchsorted(eigs.values, threshold + tie_tol, side="right"))


def projector_le(h, threshold: float, tie_tol: float = TIE_TOL) -> EnergyProjector:
    """Projector onto eigenstates of ``H`` with energy at most ``threshold``."""
    eigs = _eigs_of(h)
    r = low_rank(eigs, threshold, tie_tol)
    v = eigs.vectors[:, :r]
    mat = v @ v.conj().T
    return EnergyProjector(float(threshold), "le", mat, r)


def projector_gt(h, threshold: float, tie_tol: float = TIE_TOL) -> EnergyProjector:
    """Complement ``I - projector_le`` onto energies strictly above ``threshold``."""
    le = projector_le(h, threshold, tie_tol)
    mat = np.eye(le.matrix.shape[0], dtype=np.complex128) - le.matrix
    return EnergyProjector(float(threshold), "gt", mat, le.matrix.shape[0] - le.rank)


def effective(x: HermitianOperator, h, cutoff: float) -> EffectiveOperator:
    """Compress ``X`` to the span of eigenstates of ``H`` below ``cutoff``."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    p = projector_le(h, cutoff).matrix
    return EffectiveOperator(float(cutoff), HermitianOperator(p @ x.matrix @ p, check=False), x)


def sample_low_energy_state(h, threshold: float, seed: int | None) -> np.ndarray:
    """Haar-random normalized state inside the span of energies <= ``threshold``."""
    eigs = _eigs_of(h)
    r = low_rank(eigs, threshold)
    if r == 0:
        raise ValueError(f"no eigenstates at or below {threshold}")
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    coeffs /= np.linalg.norm(coeffs)
    psi = eigs.vectors[:, :r] @ coeffs
    return psi / np.linalg.norm(psi)
