"""Tensor products of named single-qubit Clifford gates.

Gate sequences are stored by name so circuits are hashable and printable;
matrices are produced on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

_S2 = 1 / np.sqrt(2)
GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
}
INVERSE = {"I": "I", "X": "X", "Y": "Y", "Z": "Z", "H": "H", "S": "Sdg", "Sdg": "S"}

# Maps |0>, |1> to the +1, -1 eigenstates of the given Pauli (applied left to right).
EIGENBASIS_ROTATION = {"Z": (), "X": ("H",), "Y": ("H", "S")}


def sequence_matrix(names: Sequence[str]) -> np.ndarray:
    """Unitary of a gate sequence applied in order (first name acts first)."""
    return reduce(lambda acc, g: GATES[g] @ acc, names, np.eye(2, dtype=complex))


@dataclass(frozen=True)
class ProductCircuit:
    """One gate sequence per qubit, stored as ``((qubit, (gate, ...)), ...)``."""

    ops: tuple[tuple[int, tuple[str, ...]], ...]

    def __post_init__(self):
        qubits = [q for q, _ in self.ops]
        if len(set(qubits)) != len(qubits):
            raise ValueError("each qubit may appear once")
        for _, seq in self.ops:
            for g in seq:
                if g not in GATES:
                    raise ValueError(f"unknown gate {g!r}")
        object.__setattr__(self, "ops", tuple(sorted((q, tuple(s)) for q, s in self.ops)))

    @classmethod
    def from_mapping(cls, gates: Mapping[int, Sequence[str]]) -> ProductCircuit:
        return cls(tuple((q, tuple(s)) for q, s in gates.items()))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    def gates_on(self, q: int) -> tuple[str, ...]:
        for p, seq in self.ops:
            if p == q:
                return seq
        return ()

    def local_matrix(self, q: int) -> np.ndarray:
        return sequence_matrix(self.gates_on(q))

    def matrix(self, qubits: Sequence[int] | None = None) -> np.ndarray:
        """Kronecker product over ``qubits`` (default: own qubits), first qubit most significant."""
        qubits = self.qubits if qubits is None else tuple(qubits)
        return reduce(np.kron, (self.local_matrix(q) for q in qubits), np.eye(1, dtype=complex))

    def inverse(self) -> ProductCircuit:
        return ProductCircuit(tuple((q, tuple(INVERSE[g] for g in reversed(seq)))
                                    for q, seq in self.ops))

    def apply(self, state: np.ndarray, n_qubits: int) -> np.ndarray:
        """Apply to a state vector (or a stack of them along the first axis)."""
        out = np.asarray(state, dtype=complex)
        lead = out.shape[:-1]
        for q, seq in self.ops:
            if not seq:
                continue
            u = sequence_matrix(seq)
            psi = out.reshape(*lead, 2 ** q, 2, 2 ** (n_qubits - q - 1))
            out = np.einsum("ab,...ibj->...iaj", u, psi).reshape(*lead, -1)
        return out

    def __str__(self):
        return " ".join(f"{q}:{'.'.join(s) or 'I'}" for q, s in self.ops)
