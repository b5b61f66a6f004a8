from __future__ import annotations

import itertools
import json

import numpy as np
import oracle
import pytest
from conftest import GOLDEN_TOL
from hypothesis import given, settings
from hypothesis import strategies as st

from lowtrot.hamiltonian import (
    LocalTerm,
    PauliTerm,
    assemble_dense,
    assemble_layers,
    build_spec,
    color_layers,
    degree,
    group_terms,
    load_spec,
    model_gallery,
    n_max,
    parameters,
    save_spec,
    shift_positive,
    spec_from_dict,
    spec_to_dict,
)


def bond_terms(bonds, letters="ZZ"):
    return group_terms(PauliTerm.make(b, letters, 1.0) for b in bonds)


# --- PauliTerm / LocalTerm --------------------------------------------------


@pytest.mark.parametrize("sites,letters", [((1, 0), "XZ"), ((0, 0), "XX"), ((), ""), ((0,), "W"), ((0, 1), "X")])
def test_pauli_term_invariants(sites, letters):
    with pytest.raises(ValueError):
        PauliTerm(sites, letters, 1.0)


def test_make_sorts_sites_with_letters():
    t = PauliTerm.make((3, 1), "XZ", 2.0)
    assert t.sites == (1, 3) and t.letters == "ZX"


def test_group_terms_by_site_set():
    terms = group_terms([PauliTerm((0, 1), "XX", 1), PauliTerm((1, 2), "ZZ", 1), PauliTerm((0, 1), "YY", 1)])
    assert [t.sites for t in terms] == [(0, 1), (1, 2)]
    assert len(terms[0].paulis) == 2


# --- coloring ---------------------------------------------------------------


def test_chain_coloring_even_odd():
    layers = color_layers(bond_terms([(0, 1), (1, 2), (2, 3)]))
    assert layers == [[0, 2], [1]]


def test_single_term_one_layer():
    assert color_layers(bond_terms([(0, 1)])) == [[0]]


def test_coloring_rejects_bad_terms():
    terms = bond_terms([(0, 1), (1, 5)])
    with pytest.raises(ValueError):
        color_layers(terms, n_sites=4)
    with pytest.raises(ValueError):
        color_layers(group_terms([PauliTerm((0, 1, 2), "XXX", 1)]), k=2)
    with pytest.raises(ValueError):
        color_layers([])


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_random_coloring_disjoint_and_bounded(seed):
    rng = np.random.default_rng(seed)
    n, k = 8, 3
    sets = {tuple(sorted(rng.choice(n, size=rng.integers(1, k + 1), replace=False).tolist())) for _ in range(12)}
    terms = group_terms(PauliTerm(s, "Z" * len(s), 1.0) for s in sorted(sets))
    layers = color_layers(terms, n, k)
    # brute-force pairwise check
    for layer in layers:
        for i, j in itertools.combinations(layer, 2):
            assert not set(terms[i].sites) & set(terms[j].sites)
    assert sorted(i for l in layers for i in l) == list(range(len(terms)))
    kk = max(len(t.sites) for t in terms)
    assert len(layers) <= kk * (degree(terms) - 1) + 1


# --- shifts -----------------------------------------------------------------


def test_shift_single_z():
    (t,), a = shift_positive(group_terms([PauliTerm((0,), "Z", 1.0)]))
    assert a == 0 and t.shift == pytest.approx(1.0)
    np.testing.assert_allclose(t.local_spectrum(), [0, 2], atol=1e-12)


def test_shift_positive_layer_untouched():
    term = LocalTerm((0,), (PauliTerm((0,), "Z", 1.0),), shift=1.0)
    (t,), a = shift_positive([term])
    assert t.shift == 1.0 and a == 0


def test_heisenberg_bond_shift_three_quarters():
    terms = group_terms([PauliTerm((0, 1), a + a, 0.25) for a in "XYZ"])
    # oracle: singlet -3/4, triplet +1/4
    w = np.linalg.eigvalsh(sum(0.25 * oracle.string(2, {0: a, 1: a}) for a in "XYZ"))
    np.testing.assert_allclose(w, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)
    (t,), _ = shift_positive(terms, "per_term")
    assert t.shift == pytest.approx(0.75)
    assert t.strength == pytest.approx(1.0)


def test_per_layer_shift_matches_per_term_total():
    paulis = [PauliTerm.make(b, "ZZ", -1.0) for b in [(0, 1), (1, 2), (2, 3)]] + [PauliTerm((i,), "X", -0.5) for i in range(4)]
    a = build_spec(4, paulis, shift_mode="per_term")
    b = build_spec(4, paulis, shift_mode="per_layer")
    assert a.shift_record.total == pytest.approx(b.shift_record.total)
    np.testing.assert_allclose(assemble_dense(a).matrix, assemble_dense(b).matrix, atol=1e-12)
    with pytest.raises(ValueError):
        shift_positive(a.terms, "global")


@pytest.mark.parametrize("name", ["heisenberg_chain", "tfim_chain", "xy_chain", "random_klocal"])
@pytest.mark.parametrize("mode", ["per_term", "per_layer"])
def test_layers_positive_after_shift(name, mode):
    spec = model_gallery(name, 5, seed=3, shift_mode=mode)
    layers = assemble_layers(spec)
    for hl in layers:
        assert hl.eigensystem.values[0] >= -1e-10
    assert assemble_dense(spec).eigensystem.values[0] >= -1e-9 * len(layers)


# --- parameters -------------------------------------------------------------


def test_parameters_four_chain():
    P = parameters(model_gallery("heisenberg_chain", 4))
    assert (P.N, P.k, P.d, P.M, P.L) == (4, 2, 2, 2, 2)
    assert P.J == pytest.approx(1.0)  # post-shift bond norm: 1/4 + 3/4


def test_parameters_single_term_and_padding():
    spec = build_spec(1, [PauliTerm((0,), "X", 1.0)])
    P = parameters(spec)
    assert (P.d, P.L, P.M) == (1, 1, 1)
    spec2 = build_spec(3, [PauliTerm((0, 1), "XX", 1.0)])
    assert parameters(spec2).M == 3
    with pytest.raises(ValueError):
        parameters(spec2, pad=False)


def test_star_graph_degree():
    spec = build_spec(6, [PauliTerm((0, i), "ZZ", 1.0) for i in range(1, 6)])
    counts = [sum(i in t.sites for t in spec.terms) for i in range(6)]
    P = parameters(spec)
    assert P.d == max(counts) == 5
    assert P.L == 5


@given(st.integers(0, 10_000), st.sampled_from(["heisenberg_chain", "tfim_chain", "random_klocal"]), st.integers(3, 7))
@settings(max_examples=30, deadline=None)
def test_parameter_invariants(seed, name, n):
    P = parameters(model_gallery(name, n, seed=seed))
    assert P.L <= P.k * (P.d - 1) + 1
    assert P.N <= P.M * P.L <= P.d * P.N


# --- assembly ---------------------------------------------------------------


def test_assembly_ordering_convention():
    spec = build_spec(2, [PauliTerm((0,), "Z", 1.0)])
    m = assemble_dense(spec).matrix - np.eye(4)  # remove the +1 shift
    np.testing.assert_allclose(m, np.diag([1, 1, -1, -1]), atol=1e-15)


@pytest.mark.parametrize("name", ["heisenberg_chain", "tfim_chain", "xy_chain"])
def test_full_equals_sum_of_layers(name):
    spec = model_gallery(name, 6)
    full = assemble_dense(spec).matrix
    np.testing.assert_allclose(full, sum(h.matrix for h in assemble_layers(spec)), atol=1e-12)
    np.testing.assert_allclose(full, full.conj().T, atol=1e-12)


def test_terms_in_a_layer_commute():
    spec = model_gallery("random_klocal", 6, {"k": 2, "d": 3}, seed=7)
    from lowtrot._kernels import pauli_matrix

    def term_matrix(t):
        return sum(pauli_matrix(6, p.sites, p.letters, p.coefficient) for p in t.paulis)

    for layer in spec.layers:
        for i, j in itertools.combinations(layer, 2):
            a, b = term_matrix(spec.terms[i]), term_matrix(spec.terms[j])
            assert np.linalg.norm(a @ b - b @ a, 2) <= 1e-12


def test_heisenberg_four_ground_energy(golden4):
    H = assemble_dense(model_gallery("heisenberg_chain", 4))
    E0 = H.eigensystem.values[0]
    assert abs(E0 - golden4["E0"]) < GOLDEN_TOL
    # literature value for the open 4-site S=1/2 chain: -(3 + 2 sqrt 3) / 4
    assert E0 - 2.25 == pytest.approx(-(3 + 2 * np.sqrt(3)) / 4, abs=1e-12)


def test_heisenberg_matches_oracle():
    spec = model_gallery("heisenberg_chain", 5)
    for mine, ref in zip(assemble_layers(spec), oracle.heisenberg_layers(5)):
        np.testing.assert_allclose(mine.matrix, ref, atol=1e-13)


def test_size_cap(monkeypatch):
    spec = model_gallery("tfim_chain", 5)
    monkeypatch.setenv("LOWTROT_NMAX", "4")
    assert n_max() == 4
    with pytest.raises(ValueError, match="LOWTROT_NMAX"):
        assemble_dense(spec)


# --- gallery and serialization ---------------------------------------------


def test_gallery_layer_counts():
    assert model_gallery("heisenberg_chain", 4).n_layers == 2
    assert model_gallery("tfim_chain", 3).n_layers == 3


def test_gallery_errors():
    with pytest.raises(ValueError):
        model_gallery("kitaev", 4)
    with pytest.raises(ValueError):
        model_gallery("tfim_chain", 4, {"g": 1.0})
    with pytest.raises(ValueError):
        model_gallery("heisenberg_chain", 4, {"J": -1.0})


def test_random_klocal_reproducible():
    a = model_gallery("random_klocal", 6, {"k": 2, "d": 3}, seed=7)
    b = model_gallery("random_klocal", 6, {"k": 2, "d": 3}, seed=7)
    assert a == b
    assert spec_to_dict(a) == spec_to_dict(b)
    assert parameters(a).d <= 3


def test_spec_json_roundtrip(tmp_path):
    spec = model_gallery("tfim_chain", 4, {"h": 0.7})
    path = tmp_path / "spec.json"
    save_spec(spec, path)
    data = json.loads(path.read_text())
    assert set(data) >= {"n_sites", "terms", "shift_mode"}
    assert set(data["terms"][0]) == {"sites", "paulis", "coeff"}
    back = load_spec(path)
    np.testing.assert_allclose(assemble_dense(back).matrix, assemble_dense(spec).matrix, atol=1e-14)


def test_spec_without_layers_is_colored():
    data = {"n_sites": 3, "shift_mode": "per_term",
            "terms": [{"sites": [0, 1], "paulis": "ZZ", "coeff": 1.0}, {"sites": [1, 2], "paulis": "ZZ", "coeff": 1.0}]}
    spec = spec_from_dict(data)
    assert spec.n_layers == 2
