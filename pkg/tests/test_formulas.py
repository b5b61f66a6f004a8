from __future__ import annotations

import math

import numpy as np
import oracle
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowtrot.formulas import (
    LambdaLadder,
    Schedule,
    apply_formula,
    ladder,
    ladder_increment,
    load_schedule,
    planning_schedule,
    save_schedule,
    scaled_ladder,
    suzuki_schedule,
)
from lowtrot.hamiltonian import (
    PauliTerm,
    SystemParams,
    assemble_dense,
    assemble_layers,
    build_spec,
    model_gallery,
)
from lowtrot.linalg import expm_i, spectral_norm, unitarity_defect


@pytest.fixture(scope="module")
def chain():
    spec = model_gallery("heisenberg_chain", 6)
    return assemble_dense(spec), assemble_layers(spec)


def test_lie_schedule():
    s = suzuki_schedule(1, 2)
    assert s.steps == ((0, 1.0), (1, 1.0)) and s.q == 2 and s.weight == 2


def test_strang_schedule():
    s = suzuki_schedule(2, 2)
    assert s.steps == ((0, 0.5), (1, 1.0), (0, 0.5)) and s.q == 3 and s.weight == 2
    assert s.is_palindromic()
    for L in range(1, 6):
        assert suzuki_schedule(2, L).q == max(1, 2 * L - 1)


@pytest.mark.parametrize("p", [4, 6])
@pytest.mark.parametrize("L", [1, 2, 3])
def test_suzuki_size_limits(p, L):
    s = suzuki_schedule(p, L)
    assert s.q <= 5 ** (p // 2) * L if p > 4 else s.q <= 5 ** p * L
    assert s.q <= 5 ** p * L
    assert s.weight <= 2.32 ** p * L + 1e-9
    assert s.is_palindromic()


def test_suzuki_p4_coefficients(arithmetic):
    u = arithmetic["suzuki_u4"]
    s = suzuki_schedule(4, 1)
    assert s.q == 1  # a single layer collapses to one exponential
    s2 = suzuki_schedule(4, 2)
    assert s2.steps[0] == pytest.approx((0, u / 2))
    # merging adjacent same-layer steps can only lower the unmerged weight
    assert s2.weight <= 2 * (4 * u + abs(1 - 4 * u)) + 1e-12
    assert s2.weight == pytest.approx(sum(abs(c) for _, c in s2.steps))


def test_suzuki_p4_matches_unmerged_recursion(chain):
    _, layers = chain
    u = 1 / (4 - 4 ** (1 / 3))
    s = 0.3
    strang = [(0, 0.5), (1, 1.0), (0, 0.5)]
    raw = [(l, u * c) for l, c in strang] * 2 + [(l, (1 - 4 * u) * c) for l, c in strang] + [(l, u * c) for l, c in strang] * 2
    ref = np.eye(64)
    for l, c in raw:
        ref = expm_i(layers[l], c * s) @ ref
    np.testing.assert_allclose(apply_formula(suzuki_schedule(4, 2), s, layers), ref, atol=1e-12)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(1, ((0, 0.5),), 1)
    with pytest.raises(ValueError):
        Schedule(1, ((2, 1.0),), 2)
    with pytest.raises(ValueError):
        Schedule(0, ((0, 1.0),), 1)
    for p in (3, 5, 0):
        with pytest.raises(ValueError):
            suzuki_schedule(p, 2)


def test_planning_schedule_for_odd_order():
    s = planning_schedule(3, 2)
    assert s.order == 3 and s.steps == suzuki_schedule(4, 2).steps


def test_schedule_json(tmp_path):
    s = suzuki_schedule(4, 3)
    path = tmp_path / "s.json"
    save_schedule(s, path)
    back = load_schedule(path)
    assert back == s
    assert set(s.to_dict()) == {"p", "steps", "weight"}


# --- ladders ----------------------------------------------------------------


def test_ladder_hand_value(arithmetic):
    P = SystemParams(N=4, k=2, d=2, J=1.0, M=2, L=2, q=2)
    sched = suzuki_schedule(1, 2)
    ldr = ladder(0.0, sched, 0.1, 0.01, P)
    spacing = np.diff(ldr.values)
    np.testing.assert_allclose(spacing, arithmetic["ladder_increment"]["value"], rtol=1e-14)
    assert ldr.values[0] == 0.0 and ldr.delta == 0.01


def test_ladder_top_closed_form():
    P = SystemParams(N=6, k=2, d=2, J=1.0, M=3, L=2)
    sched = suzuki_schedule(2, 2)
    s, delta, base = 0.07, 0.05, 1.3
    ldr = ladder(base, sched, s, delta, P.with_schedule(sched))
    top = base + (P.alpha * sched.weight * s * P.M + sched.q * math.log(sched.q / delta)) / P.lam
    assert ldr.top == pytest.approx(top, rel=1e-13)


def test_ladder_edge_cases():
    P = SystemParams(N=4, k=2, d=2, J=1.0, M=2, L=2, q=2)
    sched = suzuki_schedule(1, 2)
    assert ladder(1.0, sched, 0.0, 2.0, P).values == (1.0, 1.0, 1.0)
    ldr = ladder(0.0, sched, 0.3, 0.1, P)
    assert np.allclose(np.diff(ldr.values), np.diff(ldr.values)[0])
    with pytest.raises(ValueError):
        ladder(0.0, sched, 0.1, 0.0, P)
    with pytest.raises(ValueError):
        ladder(0.0, sched, float("inf"), 0.1, P)
    assert ladder_increment(0.0, 2.0, 2, P) == 0.0


# --- application ------------------------------------------------------------


@pytest.mark.parametrize("variant", ["exact", "effective", "projected", "projected_effective"])
def test_zero_step_identity(chain, variant):
    h, layers = chain
    sched = suzuki_schedule(2, 2)
    ldr = scaled_ladder(0.0, [h.norm] * sched.q)
    out = apply_formula(sched, 0.0, layers, variant, spectrum=h, ladder=ldr, cutoff=h.norm)
    np.testing.assert_allclose(out, np.eye(h.dim), atol=1e-12)


@pytest.mark.parametrize("p", [1, 2, 4])
def test_single_layer_is_exact(p):
    spec = build_spec(3, [PauliTerm((0, 1), "XX", 0.7), PauliTerm((0, 1), "ZZ", 0.2), PauliTerm((2,), "Y", 0.5)],
                      layers=[[0, 1]])
    h = assemble_dense(spec)
    w = apply_formula(suzuki_schedule(p, 1), 0.4, assemble_layers(spec))
    assert spectral_norm(w - expm_i(h, 0.4)) <= 1e-10


@pytest.mark.parametrize("p", [1, 2])
def test_matches_oracle(chain, p):
    _, layers = chain
    ref = oracle.formula(p, oracle.heisenberg_layers(6), 0.13)
    np.testing.assert_allclose(apply_formula(suzuki_schedule(p, 2), 0.13, layers), ref, atol=1e-12)


@given(st.floats(-1, 1), st.sampled_from([1, 2, 4]))
@settings(max_examples=20, deadline=None)
def test_exact_unitary(chain, s, p):
    _, layers = chain
    assert unitarity_defect(apply_formula(suzuki_schedule(p, 2), s, layers)) <= 1e-10 * 64


@given(st.floats(-1, 1), st.sampled_from([2, 4]))
@settings(max_examples=20, deadline=None)
def test_palindromic_reversal(chain, s, p):
    _, layers = chain
    sched = suzuki_schedule(p, 2)
    w_plus = apply_formula(sched, s, layers)
    w_minus = apply_formula(sched, -s, layers)
    assert spectral_norm(w_minus - w_plus.conj().T) <= 1e-10


def test_projected_is_contraction_and_telescopes(chain):
    h, layers = chain
    w = h.eigensystem.values
    sched = suzuki_schedule(2, 2)
    tops = np.linspace(w[0] + 0.5, w[-1] - 0.5, sched.q)
    ldr = scaled_ladder(w[0], tops)
    s = 0.3
    out = apply_formula(sched, s, layers, "projected", spectrum=h, ladder=ldr)
    assert spectral_norm(out) <= 1 + 1e-10
    ref = np.eye(h.dim)
    for (l, c), lam in zip(sched.steps, tops):
        ref = oracle.proj_le(h.matrix, lam) @ oracle.U(layers[l].matrix, c * s) @ ref
    np.testing.assert_allclose(out, ref, atol=1e-11)
    out2 = apply_formula(sched, s, layers, "projected_effective", spectrum=h, ladder=ldr, cutoff=tops[-1])
    assert spectral_norm(out2) <= 1 + 1e-10


def test_effective_variant_uses_compressed_layers(chain):
    h, layers = chain
    w = h.eigensystem.values
    cut = w[10]
    sched = suzuki_schedule(1, 2)
    p = oracle.proj_le(h.matrix, cut)
    ref = oracle.lie([p @ x.matrix @ p for x in layers], 0.2)
    np.testing.assert_allclose(apply_formula(sched, 0.2, layers, "effective", spectrum=h, cutoff=cut), ref, atol=1e-11)


def test_variant_errors(chain):
    h, layers = chain
    sched = suzuki_schedule(1, 2)
    with pytest.raises(ValueError):
        apply_formula(sched, 0.1, layers, "magic")
    with pytest.raises(ValueError):
        apply_formula(sched, 0.1, layers[:1])
    with pytest.raises(ValueError):
        apply_formula(sched, 0.1, layers, "projected", spectrum=h)
    with pytest.raises(ValueError):
        apply_formula(sched, 0.1, layers, "effective", spectrum=h)
    with pytest.raises(ValueError):
        apply_formula(sched, 0.1, layers, "effective", cutoff=1.0)
    ldr = LambdaLadder((0.0, 2.0, 3.0), 0.1)
    with pytest.raises(ValueError, match="top rung"):
        apply_formula(sched, 0.1, layers, "projected_effective", spectrum=h, ladder=ldr, cutoff=2.5)


def test_strang_error_scales_cubically(chain):
    h, layers = chain
    sched = suzuki_schedule(2, 2)
    grid = np.geomspace(0.02, 0.2, 6)
    errs = [spectral_norm(expm_i(h, s) - apply_formula(sched, s, layers)) for s in grid]
    assert oracle.loglog_slope(grid, errs) == pytest.approx(3, abs=0.15)
