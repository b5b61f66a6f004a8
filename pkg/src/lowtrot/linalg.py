"""Dense complex Hermitian linear algebra.

Everything downstream trusts these kernels: eigendecomposition, unitary
exponentials built from it, spectral norms, and a tiny binary dump format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    unitary_per_dim: float = 1e-10
    reconstruction_per_dim: float = 1e-9


TOL = Tolerances()


class LinAlgFailure(RuntimeError):
    """Raised when LAPACK fails to converge on an eigenproblem."""


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


class HermitianOperator:
    """Dense Hermitian matrix on a ``2**n``-dimensional space.

    The eigensystem is computed lazily once and cached on the instance, so
    repeated projector or evolution queries against the same operator never
    re-diagonalize.
    """

    def __init__(self, matrix, *, tol: float | None = None, check: bool = True):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        dim = m.shape[0]
        if dim == 0 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        if check:
            tol = TOL.hermitian if tol is None else tol
            scale = max(1.0, float(np.max(np.abs(m))))
            err = float(np.max(np.abs(m - m.conj().T)))
            if err > tol * scale:
                raise ValueError(f"matrix is not Hermitian (max |A - A^dag| = {err:.3e})")
        # Exact symmetrization removes rounding-level anti-Hermitian parts.
        self.matrix = 0.5 * (m + m.conj().T)
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def eigensystem(self) -> EigenSystem:
        return eigh(self.matrix)

    @cached_property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigensystem.values)))

    def __add__(self, other: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(self.matrix + _as_array(other), check=False)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


def _as_array(a) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.matrix
    return np.asarray(a)


def eigh(a) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = _as_array(a)
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigh failed for a {m.shape[0]}-dim operator: {exc}") from exc
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenSystem(values, vectors)


def expm_i(a, s: float) -> np.ndarray:
    """Return ``exp(-i s A)`` for Hermitian ``A`` (operator, matrix or eigensystem).

    ``s == 0`` returns an exactly constructed identity.
    """
    if not np.isfinite(s):
        raise ValueError("time step must be finite")
    if isinstance(a, EigenSystem):
        eig = a
    elif isinstance(a, HermitianOperator):
        eig = a.eigensystem
    else:
        eig = eigh(a)
    if s == 0:
        return np.eye(eig.dim, dtype=np.complex128)
    phases = np.exp(-1j * s * eig.values)
    return (eig.vectors * phases) @ eig.vectors.conj().T


def spectral_norm(a) -> float:
    """Largest singular value."""
    m = _as_array(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def dagger(a) -> np.ndarray:
    return _as_array(a).conj().T


def matmul(*ops) -> np.ndarray:
    """Left-to-right matrix product with explicit dimension checks."""
    if not ops:
        raise ValueError("matmul needs at least one operand")
    out = _as_array(ops[0])
    for op in ops[1:]:
        m = _as_array(op)
        if out.shape[-1] != m.shape[0]:
            raise ValueError(f"dimension mismatch: {out.shape} @ {m.shape}")
        out = out @ m
    return out


def unitarity_defect(u) -> float:
    m = _as_array(u)
    return spectral_norm(m.conj().T @ m - np.eye(m.shape[0]))


# --- debug dump: u64 dimension header, then row-major (re, im) f64 pairs, little endian


def write_dump(path, matrix) -> None:
    m = np.ascontiguousarray(_as_array(matrix), dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.shape[0] != m.shape[1] and m.shape[1] != 1:
        raise ValueError("dump expects a square matrix or a column vector")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", m.shape[0]))
        fh.write(m.astype("<c16").tobytes())


def read_dump(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (dim,) = struct.unpack("<Q", data[:8])
    body = np.frombuffer(data[8:], dtype="<c16")
    if body.size == dim * dim:
        return body.reshape(dim, dim).astype(np.complex128)
    if body.size == dim:
        return body.astype(np.complex128)
    raise ValueError(f"dump body has {body.size} entries, inconsistent with dimension {dim}")
