"""Hot loops for dense Pauli-string assembly.

Two interchangeable backends are provided: a numba ``@njit`` path and a pure
numpy path.  The numba path is used when numba imports cleanly and the
environment variable ``LOWTROT_DISABLE_NUMBA`` is unset (or ``0``).  Both
produce bit-identical results, which the test-suite checks.
"""

from __future__ import annotations

import os

import numpy as np

_LETTER_CODES = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def _numba_requested() -> bool:
    return os.environ.get("LOWTROT_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


try:  # pragma: no cover - exercised implicitly depending on environment
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def pauli_masks(n_sites: int, sites, letters: str) -> tuple[int, int, int]:
    """Return ``(flip_mask, phase_mask, n_y)`` for a Pauli string.

    Site 0 is the most significant bit of the basis-state index.
    ``flip_mask`` marks X/Y sites, ``phase_mask`` marks Y/Z sites.
    """
    flip = 0
    phase = 0
    n_y = 0
    for site, letter in zip(sites, letters):
        bit = 1 << (n_sites - 1 - site)
        code = _LETTER_CODES[letter]
        if code in (1, 2):
            flip |= bit
        if code in (2, 3):
            phase |= bit
        if code == 2:
            n_y += 1
    return flip, phase, n_y


def _accumulate_numpy(out, flip, phase, coeff):
    dim = out.shape[0]
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ flip
    parity = np.bitwise_count(cols & phase) & 1
    signs = 1.0 - 2.0 * parity
    out[rows, cols] += coeff * signs


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _accumulate_numba(out, flip, phase, coeff):  # pragma: no cover - jitted
        dim = out.shape[0]
        for col in range(dim):
            x = col & phase
            parity = 0
            while x:
                x &= x - 1
                parity ^= 1
            sign = 1.0 - 2.0 * parity
            out[col ^ flip, col] += coeff * sign

else:  # pragma: no cover
    _accumulate_numba = None


def backend() -> str:
    """Name of the backend :func:`accumulate_pauli` will use right now."""
    if HAVE_NUMBA and _numba_requested():
        return "numba"
    return "numpy"


def accumulate_pauli(out: np.ndarray, n_sites: int, sites, letters: str, coeff: complex, *, force: str | None = None) -> None:
    """Add ``coeff * P`` to the dense matrix ``out`` in place.

    ``force`` selects ``"numba"`` or ``"numpy"`` explicitly (benchmarks and
    cross-backend tests); otherwise :func:`backend` decides.
    """
    flip, phase, n_y = pauli_masks(n_sites, sites, letters)
    # Y = i X Z, so the string carries a global factor i**n_y.
    c = complex(coeff) * (1j ** n_y)
    which = force or backend()
    if which == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        _accumulate_numba(out, np.int64(flip), np.int64(phase), np.complex128(c))
    elif which == "numpy":
        _accumulate_numpy(out, flip, phase, c)
    else:
        raise ValueError(f"unknown backend {which!r}")


def pauli_matrix(n_sites: int, sites, letters: str, coeff: complex = 1.0, *, force: str | None = None) -> np.ndarray:
    dim = 1 << n_sites
    out = np.zeros((dim, dim), dtype=np.complex128)
    accumulate_pauli(out, n_sites, sites, letters, coeff, force=force)
    return out
