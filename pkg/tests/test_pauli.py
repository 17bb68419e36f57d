import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dense_oracle import pauli_dense
from hamlearn.pauli import PauliString, commutes, conjugate, support


def ps(text):
    return PauliString.from_str(text)


def test_support_examples():
    assert support(ps("XIZ")) == {0, 2}
    assert support(PauliString.identity(5)) == frozenset()
    assert support(ps("IYY")) == {1, 2}


def test_commutes_examples():
    assert not commutes(ps("X"), ps("Z"))
    assert commutes(ps("X"), ps("X"))
    assert commutes(ps("XZ"), ps("ZX"))


def test_conjugate_examples():
    assert conjugate(ps("X"), ps("Y")) == (-1, ps("Y"))
    assert conjugate(ps("I"), ps("Z")) == (1, ps("Z"))
    assert conjugate(ps("XZ"), ps("XX")) == (-1, ps("XX"))


def test_conjugate_matches_matrix_oracle_examples():
    for p, e in [("X", "Y"), ("XZ", "XX"), ("XZ", "ZX")]:
        s, _ = conjugate(ps(p), ps(e))
        lhs = pauli_dense(p) @ pauli_dense(e) @ pauli_dense(p)
        assert np.allclose(lhs, s * pauli_dense(e))


def test_text_round_trip_and_canonical_letters():
    p = PauliString.from_letters(4, {0: "X", 2: "Y"})
    assert str(p) == "XIYI"
    assert ps(str(p)) == p
    assert p.letters == {0: "X", 2: "Y"}
    assert p.weight == 2


@pytest.mark.parametrize("bad", ["", "XQ", "X Z"])
def test_from_str_rejects_bad_text(bad):
    with pytest.raises(ValueError):
        ps(bad)


def test_from_str_accepts_lowercase():
    assert ps("xz") == ps("XZ")


def test_from_letters_rejects_out_of_range():
    with pytest.raises(ValueError):
        PauliString.from_letters(2, {2: "X"})


def test_mismatched_sizes_raise():
    with pytest.raises(ValueError):
        commutes(ps("X"), ps("XX"))
    with pytest.raises(ValueError):
        conjugate(ps("X"), ps("XX"))


paulis = st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(paulis)
def test_conjugation_sign_matches_dense_oracle(pair):
    a, b = pair
    s, out = conjugate(ps(a), ps(b))
    assert out == ps(b)
    dense = pauli_dense(a) @ pauli_dense(b) @ pauli_dense(a)
    assert np.allclose(dense, s * pauli_dense(b))
    comm = np.allclose(pauli_dense(a) @ pauli_dense(b), pauli_dense(b) @ pauli_dense(a))
    assert commutes(ps(a), ps(b)) == comm == (s == 1)


@settings(max_examples=100, deadline=None)
@given(paulis)
def test_conjugation_is_an_involution(pair):
    p, e = ps(pair[0]), ps(pair[1])
    s1, e1 = conjugate(p, e)
    s2, e2 = conjugate(p, e1)
    assert s1 * s2 == 1 and e2 == e


@settings(max_examples=100, deadline=None)
@given(paulis)
def test_times_matches_dense_product_up_to_phase(pair):
    a, b = ps(pair[0]), ps(pair[1])
    prod = pauli_dense(pair[0]) @ pauli_dense(pair[1])
    ref = pauli_dense(str(a.times(b)))
    phase = np.trace(ref.conj().T @ prod) / prod.shape[0]
    assert abs(abs(phase) - 1) < 1e-12
    assert np.allclose(prod, phase * ref)
