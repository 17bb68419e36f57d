"""Independent dense-matrix reference built from Kronecker products (qubit 0 is the leftmost factor)."""
from functools import reduce

import numpy as np
from scipy.linalg import expm

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_dense(text: str) -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in text])


def hamiltonian_dense(n: int, terms) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for text, coeff in terms:
        out += coeff * pauli_dense(text)
    return out


def evolve_dense(h: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    return expm(-1j * t * h) @ psi


def twirl_dense(h: np.ndarray, unitaries, weights) -> np.ndarray:
    return sum(w * u @ h @ u.conj().T for u, w in zip(unitaries, weights))


def pauli_coefficients(h: np.ndarray, n: int) -> dict[str, complex]:
    """Decompose a dense operator into Pauli strings (drops zero entries)."""
    out = {}
    for idx in np.ndindex(*(4,) * n):
        text = "".join("IXYZ"[i] for i in idx)
        c = np.trace(pauli_dense(text) @ h) / (1 << n)
        if abs(c) > 1e-12:
            out[text] = c
    return out
