"""N-qubit Pauli strings stored as a pair of bitmasks.

Bit ``q`` of ``x`` / ``z`` refers to qubit ``q``.  A letter is encoded as
(x, z) = I:(0,0), X:(1,0), Z:(0,1), Y:(1,1).  Only conjugation signs are
tracked; phases from general products are never needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

LETTERS = "IXYZ"
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        full = (1 << self.n_qubits) - 1
        if (self.x | self.z) & ~full:
            raise ValueError("Pauli string acts outside its register")

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_str(cls, text: str) -> PauliString:
        """Parse the canonical text form, qubit 0 leftmost (e.g. ``"XIZ"``)."""
        text = text.strip().upper()
        x = z = 0
        for q, ch in enumerate(text):
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {text!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(text), x, z)

    @classmethod
    def from_letters(cls, n_qubits: int, letters: Mapping[int, str]) -> PauliString:
        x = z = 0
        for q, ch in letters.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} outside register of {n_qubits}")
            bx, bz = _BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    def letter(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    @property
    def letters(self) -> dict[int, str]:
        """Non-identity letters keyed by qubit index."""
        return {q: self.letter(q) for q in self.support}

    @property
    def support(self) -> frozenset[int]:
        m = self.x | self.z
        return frozenset(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return not (self.x | self.z)

    def _check(self, other: PauliString):
        if self.n_qubits != other.n_qubits:
            raise ValueError(
                f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def anticommuting_positions(self, other: PauliString) -> int:
        self._check(other)
        return ((self.x & other.z) ^ (self.z & other.x)).bit_count()

    def commutes(self, other: PauliString) -> bool:
        return self.anticommuting_positions(other) % 2 == 0

    def conjugate(self, other: PauliString) -> tuple[int, PauliString]:
        """Return ``(s, other)`` with ``self @ other @ self == s * other``."""
        return (1 if self.commutes(other) else -1), other

    def times(self, other: PauliString) -> PauliString:
        """Product up to phase (bitwise XOR of the symplectic parts)."""
        self._check(other)
        return PauliString(self.n_qubits, self.x ^ other.x, self.z ^ other.z)

    def restricted(self, qubits: Iterable[int]) -> PauliString:
        """Keep only the letters on ``qubits``."""
        mask = 0
        for q in qubits:
            mask |= 1 << q
        return PauliString(self.n_qubits, self.x & mask, self.z & mask)

    def __str__(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def support(p: PauliString) -> frozenset[int]:
    return p.support


def commutes(p: PauliString, q: PauliString) -> bool:
    return p.commutes(q)


def conjugate(p: PauliString, e: PauliString) -> tuple[int, PauliString]:
    return p.conjugate(e)
