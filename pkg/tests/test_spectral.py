from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowtrot.hamiltonian import assemble_dense, assemble_layers, model_gallery
from lowtrot.linalg import expm_i, spectral_norm
from lowtrot.spectral import (
    TIE_TOL,
    effective,
    projector_gt,
    projector_le,
    sample_low_energy_state,
)


@pytest.fixture(scope="module")
def h4():
    return assemble_dense(model_gallery("heisenberg_chain", 4))


@pytest.fixture(scope="module")
def h6():
    return assemble_dense(model_gallery("tfim_chain", 6, {"h": 0.8}))


def test_projector_extremes(h4):
    w = h4.eigensystem.values
    full = projector_le(h4, w[-1])
    assert full.rank == h4.dim
    np.testing.assert_allclose(full.matrix, np.eye(h4.dim), atol=1e-12)
    empty = projector_le(h4, w[0] - 1)
    assert empty.rank == 0 and not np.any(empty.matrix)


def test_ground_degeneracy(h4, golden4):
    w = h4.eigensystem.values
    assert projector_le(h4, w[0] + TIE_TOL).rank == golden4["ground_degeneracy"]
    # triplet first excited level of the 4-chain
    assert projector_le(h4, w[1] + TIE_TOL).rank == 1 + 3


@given(st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_projector_invariants(h6, frac):
    w = h6.eigensystem.values
    lam = w[0] + frac * (w[-1] - w[0])
    p = projector_le(h6, lam).matrix
    d = h6.dim
    assert spectral_norm(p @ p - p) <= 1e-10 * d
    assert spectral_norm(p - p.conj().T) <= 1e-12
    assert spectral_norm(p @ h6.matrix - h6.matrix @ p) <= 1e-9 * d * h6.norm
    g = projector_gt(h6, lam)
    np.testing.assert_array_equal(g.matrix, np.eye(d) - p)
    assert g.rank + projector_le(h6, lam).rank == d


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_nested_and_orthogonal(h6, a, b):
    w = h6.eigensystem.values
    lo, hi = sorted(w[0] + x * (w[-1] - w[0]) for x in (a, b))
    p_lo, p_hi = projector_le(h6, lo).matrix, projector_le(h6, hi).matrix
    assert spectral_norm(p_lo @ p_hi - p_lo) <= 1e-10
    assert spectral_norm(p_lo @ projector_gt(h6, hi).matrix) <= 1e-11


def test_effective_cases(h4):
    w = h4.eigensystem.values
    assert effective(h4, h4, w[-1] + 1).matrix == pytest.approx(h4.matrix)
    i = int(np.argmax(np.diff(w[:-1]) > 0.1))
    mid = 0.5 * (w[i] + w[i + 1])
    hbar = effective(h4, h4, mid)
    assert hbar.operator.norm == pytest.approx(w[i])
    assert hbar.operator.norm <= mid
    with pytest.raises(ValueError):
        effective(h4, h4, -1.0)


@pytest.mark.parametrize("frac", [0.1, 0.3, 0.6, 1.0])
def test_effective_layer_norms(frac):
    spec = model_gallery("heisenberg_chain", 4)
    h = assemble_dense(spec)
    w = h.eigensystem.values
    cut = w[0] + frac * (w[-1] - w[0])
    bars = [effective(x, h, cut) for x in assemble_layers(spec)]
    for b in bars:
        assert spectral_norm(b.matrix) <= cut + 1e-12
    np.testing.assert_allclose(sum(b.matrix for b in bars), effective(h, h, cut).matrix, atol=1e-12)


@pytest.mark.parametrize("s", [0.1, 0.7, 2.0])
def test_evolution_preserves_low_energy(h6, s):
    w = h6.eigensystem.values
    for delta in (w[0], w[3], w[20]):
        p = projector_le(h6, delta).matrix
        u = expm_i(h6, s)
        assert spectral_norm(u @ p - p @ u @ p) <= 1e-10 * h6.dim
        for cut in (delta, delta + 0.5, w[-1]):
            ubar = expm_i(effective(h6, h6, cut).operator, s)
            assert spectral_norm((u - ubar) @ p) <= 1e-9


def test_sample_state(h4):
    w = h4.eigensystem.values
    psi = sample_low_energy_state(h4, w[0], seed=1)
    ground = h4.eigensystem.vectors[:, 0]
    assert abs(abs(np.vdot(ground, psi)) - 1) < 1e-12
    anyv = sample_low_energy_state(h4, w[-1], seed=2)
    assert np.linalg.norm(anyv) == pytest.approx(1, abs=1e-12)
    np.testing.assert_array_equal(sample_low_energy_state(h4, w[5], 3), sample_low_energy_state(h4, w[5], 3))
    with pytest.raises(ValueError):
        sample_low_energy_state(h4, w[0] - 1, seed=0)


@pytest.mark.parametrize("seed", range(50))
def test_sample_residual(h6, seed):
    w = h6.eigensystem.values
    lam = w[10]
    psi = sample_low_energy_state(h6, lam, seed)
    assert np.linalg.norm(projector_gt(h6, lam).matrix @ psi) <= 1e-10
