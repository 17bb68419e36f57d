import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from hamlearn.hamiltonian import (LowIntersectionHamiltonian, all_bitstrings, basis_assignments,
                                  build_cluster_graph_and_color, build_clusters,
                                  build_qubit_graph_and_color, coloring_violations, diagonal_part,
                                  validate)
from hamlearn.instances import heisenberg_chain
from hamlearn.pauli import PauliString
from strategies import instances

TWO_QUBIT = [a + b for a in "IXYZ" for b in "IXYZ"][1:]


def two_qubit_hamiltonian(seed=3):
    rng = np.random.default_rng(seed)
    return LowIntersectionHamiltonian.from_terms(2, [(t, rng.uniform(-1, 1)) for t in TWO_QUBIT])


def test_validate_examples():
    assert validate(heisenberg_chain(4))[0::2] == (2, 13)
    assert validate(LowIntersectionHamiltonian.from_terms(1, [("X", 0.5)])) == (1, 0, 1)
    h = LowIntersectionHamiltonian.from_terms(3, [("XXI", 0.1), ("IZZ", 0.2)])
    assert validate(h)[1] == 1


@pytest.mark.parametrize("terms, message", [
    ([("XX", 0.1), ("XX", 0.2)], "duplicate"),
    ([("II", 0.1)], "identity"),
    ([("XZ", 1.5)], "outside"),
    ([("XZZ", 0.1)], "does not act"),
])
def test_invalid_hamiltonians_rejected(terms, message):
    with pytest.raises(ValueError, match=message):
        LowIntersectionHamiltonian.from_terms(2, terms)


def test_build_clusters_examples():
    assert build_clusters(heisenberg_chain(4)) == ((0, 1), (1, 2), (2, 3))
    assert build_clusters(LowIntersectionHamiltonian.from_terms(1, [("X", 0.3)])) == ((0,),)
    h = LowIntersectionHamiltonian.from_terms(2, [("XX", 0.3), ("ZZ", 0.1)])
    assert build_clusters(h) == ((0, 1),)


def test_chain_of_four_is_a_triangle():
    col = build_cluster_graph_and_color(build_clusters(heisenberg_chain(4)))
    assert col.edges == {(0, 1), (0, 2), (1, 2)}
    assert col.n_colors == 3


def test_long_chain_colors_repeat_with_period_three():
    col = build_cluster_graph_and_color(build_clusters(heisenberg_chain(9)))
    assert col.colors == (0, 1, 2, 0, 1, 2, 0, 1)
    assert col.color_class(0) == ((0, 1), (3, 4), (6, 7))
    # {0,1} and {3,4} share no neighbour cluster touching both
    assert (0, 3) not in col.edges


def test_single_cluster_has_one_color():
    col = build_cluster_graph_and_color(((0, 1, 2),))
    assert col.n_colors == 1 and coloring_violations(col) == []


def test_chain_qubit_graph_has_no_edges():
    h = heisenberg_chain(8)
    col = build_cluster_graph_and_color(build_clusters(h))
    qc = build_qubit_graph_and_color(h, col, 0)
    assert qc.free_qubits == (2, 5)
    assert qc.edges == frozenset() and qc.n_colors == 1


def test_qubit_graph_empty_without_free_qubits():
    h = LowIntersectionHamiltonian.from_terms(2, [("XX", 0.2)])
    col = build_cluster_graph_and_color(build_clusters(h))
    qc = build_qubit_graph_and_color(h, col, 0)
    assert qc.free_qubits == () and qc.n_colors == 0


def test_qubit_graph_rejects_bad_color():
    h = heisenberg_chain(4)
    col = build_cluster_graph_and_color(build_clusters(h))
    with pytest.raises(ValueError):
        build_qubit_graph_and_color(h, col, 3)


def test_qubit_graph_edge_from_three_body_term():
    # ZZZ on {2,3,4} touches the constrained qubit 2 and both free qubits 3 and 4
    h = LowIntersectionHamiltonian.from_terms(5, [("XXXII", 0.1), ("IIZZZ", 0.2)])
    col = build_cluster_graph_and_color(build_clusters(h))
    c = col.color_of((0, 1, 2))
    qc = build_qubit_graph_and_color(h, col, c)
    assert qc.free_qubits == (3, 4)
    assert qc.edges == {(3, 4)} and qc.n_colors == 2


def test_two_qubit_diagonal_part():
    h = two_qubit_hamiltonian()
    lam = {str(p): c for p, c in h.terms}
    got = diagonal_part(h, (0, 1), ("X", "Z"))
    assert got == {(0, 0): 0.0, (1, 1): lam["XZ"], (1, 0): lam["XI"], (0, 1): lam["IZ"]}


def test_chain_diagonal_part_zz():
    h = heisenberg_chain(4, seed=5)
    c = {str(p): v for p, v in h.terms}
    got = diagonal_part(h, (0, 1), ("Z", "Z"))
    assert got == {(0, 0): 0.0, (1, 1): c["ZZII"], (1, 0): c["ZIII"], (0, 1): c["IZII"]}


def test_diagonal_part_with_absent_letter_is_zero():
    h = LowIntersectionHamiltonian.from_terms(2, [("XX", 0.3), ("ZI", 0.2)])
    assert set(diagonal_part(h, (0, 1), ("Y", "Y")).values()) == {0.0}


def test_diagonal_part_rejects_non_cluster():
    with pytest.raises(ValueError):
        diagonal_part(heisenberg_chain(4), (0, 2), ("Z", "Z"))


def test_json_round_trip():
    h = heisenberg_chain(5, seed=2)
    assert LowIntersectionHamiltonian.from_dict(h.to_dict()) == h
    bad = {"n_qubits": 3, "terms": [{"pauli": "XX", "coeff": 0.1}]}
    with pytest.raises(ValueError):
        LowIntersectionHamiltonian.from_dict(bad)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_clusters_cover_every_term(h):
    clusters = build_clusters(h)
    for p in h.paulis:
        assert any(p.support <= set(C) for C in clusters)
    for a, b in itertools.permutations(clusters, 2):
        assert not set(a) <= set(b)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_coloring_is_valid_by_brute_force(h):
    col = build_cluster_graph_and_color(build_clusters(h))
    assert coloring_violations(col) == []
    assert col.n_colors <= col.max_degree() + 1


@settings(max_examples=40, deadline=None)
@given(instances(max_qubits=7))
def test_diagonal_parts_recover_cluster_terms(h):
    for C in build_clusters(h):
        recovered = {}
        for gamma in basis_assignments(C):
            for b, v in diagonal_part(h, C, gamma).items():
                if not any(b):
                    continue
                letters = {q: g for q, g, bit in zip(C, gamma, b) if bit}
                p = PauliString.from_letters(h.n_qubits, letters)
                if v != 0.0:
                    assert recovered.setdefault(p, v) == v
        direct = {p: c for p, c in h.terms if p.support <= set(C) and c != 0.0}
        assert recovered == direct


def test_bitstrings_and_bases_counts():
    assert len(all_bitstrings(3)) == 8 and all_bitstrings(1) == [(0,), (1,)]
    assert len(basis_assignments((0, 1))) == 9
