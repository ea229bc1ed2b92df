"""Sparse Pauli-string and Pauli-sum algebra.

Strings are encoded symplectically: two bitmasks (X part, Z part) with the
bit of qubit q at position ``n - 1 - q``, so qubit 0 is the leftmost letter
of the printed label. Per qubit the operator is ``i^{xz} X^x Z^z``, which
makes (0,0)=I, (1,0)=X, (0,1)=Z, (1,1)=Y and keeps every basis string
Hermitian. Phases are tracked exactly as an exponent of i modulo 4.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_LETTER_FROM_BITS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS_FROM_LETTER = {v: k for k, v in _LETTER_FROM_BITS.items()}
_PHASES = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _parity_u64(v: np.ndarray) -> np.ndarray:
    v = v ^ (v >> np.uint64(32))
    v = v ^ (v >> np.uint64(16))
    v = v ^ (v >> np.uint64(8))
    v = v ^ (v >> np.uint64(4))
    v = v ^ (v >> np.uint64(2))
    v = v ^ (v >> np.uint64(1))
    return (v & np.uint64(1)).astype(np.float64)


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli string with a phase in {1, i, -1, -i}."""

    n: int
    x: int
    z: int
    phase: int = 0  # exponent of i, mod 4

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("need at least one qubit")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bitmask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Build from a letter string like ``\"XXIZ\"`` (qubit 0 leftmost)."""
        x = z = 0
        for ch in label:
            if ch not in _BITS_FROM_LETTER:
                raise ValueError(f"bad Pauli letter {ch!r}")
            bx, bz = _BITS_FROM_LETTER[ch]
            x = (x << 1) | bx
            z = (z << 1) | bz
        return cls(len(label), x, z, phase)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """A single non-identity letter on one qubit."""
        bx, bz = _BITS_FROM_LETTER[letter]
        bit = 1 << (n - 1 - qubit)
        return cls(n, bx * bit, bz * bit, 0)

    def letter(self, qubit: int) -> str:
        bit = 1 << (self.n - 1 - qubit)
        return _LETTER_FROM_BITS[(int(bool(self.x & bit)), int(bool(self.z & bit)))]

    def label(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def phase_value(self) -> complex:
        return _PHASES[self.phase]

    def to_matrix(self) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for q in range(self.n):
            m = np.kron(m, _PAULI_1Q[self.letter(q)])
        return self.phase_value() * m

    def __repr__(self):
        pre = {0: "", 1: "i*", 2: "-", 3: "-i*"}[self.phase]
        return f"{pre}{self.label()}"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ab with the exact accumulated phase."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    x = a.x ^ b.x
    z = a.z ^ b.z
    # per qubit: (i^{x1 z1} X^{x1}Z^{z1})(i^{x2 z2} X^{x2}Z^{z2})
    #          = i^{x1z1 + x2z2 + 2 z1x2 - x3z3} (i^{x3z3} X^{x3}Z^{z3})
    k = (
        a.phase
        + b.phase
        + _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        + 2 * _popcount(a.z & b.x)
        - _popcount(x & z)
    )
    return PauliString(a.n, x, z, k % 4)


def commutes(a: PauliString, b: PauliString) -> bool:
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def anticommutes(a: PauliString, b: PauliString) -> bool:
    """True iff ab = -ba."""
    return not commutes(a, b)


@dataclass
class PauliSum:
    """Sparse sum of phase-normalized Pauli strings with complex weights."""

    n: int
    terms: dict = field(default_factory=dict)  # (x, z) -> complex

    DROP = 1e-14  # numerical dust threshold

    @classmethod
    def zero(cls, n: int) -> "PauliSum":
        return cls(n, {})

    @classmethod
    def from_terms(cls, items) -> "PauliSum":
        """items: iterable of (PauliString, coeff); string phases are folded in."""
        items = list(items)
        if not items:
            raise ValueError("empty term list; use PauliSum.zero(n)")
        s = cls(items[0][0].n, {})
        for p, c in items:
            s.add(p, c)
        return s

    def add(self, p: PauliString, coeff: complex) -> None:
        if p.n != self.n:
            raise ValueError("size mismatch")
        key = (p.x, p.z)
        c = self.terms.get(key, 0j) + coeff * p.phase_value()
        if abs(c) <= self.DROP:
            self.terms.pop(key, None)
        else:
            self.terms[key] = c

    def coeff(self, p: PauliString) -> complex:
        c = self.terms.get((p.x, p.z), 0j)
        return c * np.conj(p.phase_value()) if c else 0j

    def items(self):
        for (x, z), c in self.terms.items():
            yield PauliString(self.n, x, z, 0), c

    def copy(self) -> "PauliSum":
        return PauliSum(self.n, dict(self.terms))

    def scaled(self, factor: complex) -> "PauliSum":
        out = PauliSum(self.n, {})
        for k, c in self.terms.items():
            v = c * factor
            if abs(v) > self.DROP:
                out.terms[k] = v
        return out

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise ValueError("size mismatch")
        out = self.copy()
        for (x, z), c in other.terms.items():
            out.add(PauliString(self.n, x, z, 0), c)
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other.scaled(-1.0)

    def n_terms(self) -> int:
        return len(self.terms)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def l2_norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix. Each string is a signed permutation: column b maps
        to row b^x with sign (-1)^{popcount(z & b)} times i^{popcount(x & z)}."""
        dim = 1 << self.n
        m = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim, dtype=np.uint64)
        for (x, z), c in self.terms.items():
            rows = cols ^ np.uint64(x)
            signs = 1.0 - 2.0 * _parity_u64(cols & np.uint64(z))
            phase = _PHASES[_popcount(x & z) % 4]
            m[rows, cols] += (c * phase) * signs
        return m


# ---------------------------------------------------------------------------
# conjugation by a two-qubit gate
# ---------------------------------------------------------------------------

_TWO_Q_BASIS = None


def _two_qubit_basis() -> np.ndarray:
    """16 matrices kron(op_i, op_j) indexed by x_i | z_i<<1 | x_j<<2 | z_j<<3."""
    global _TWO_Q_BASIS
    if _TWO_Q_BASIS is None:
        ops = [_PAULI_1Q[_LETTER_FROM_BITS[(i & 1, (i >> 1) & 1)]] for i in range(4)]
        _TWO_Q_BASIS = np.stack(
            [np.kron(ops[idx & 3], ops[idx >> 2]) for idx in range(16)]
        )
    return _TWO_Q_BASIS


def is_unitary(gate: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(
        np.linalg.norm(gate.conj().T @ gate - np.eye(gate.shape[0])) <= tol * gate.shape[0]
    )


def gate_transfer_table(gate: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Real 16x16 table T with U^dag P_old U = sum_new T[new, old] P_new."""
    if gate.shape != (4, 4):
        raise ValueError("expected a 4x4 gate")
    if not is_unitary(gate, tol):
        raise ValueError("gate is not unitary")
    basis = _two_qubit_basis()
    conj = np.einsum("ab,obc,cd->oad", gate.conj().T, basis, gate)
    table = np.einsum("nab,oba->no", basis, conj) / 4.0
    if np.abs(table.imag).max() > 1e-10:
        raise ValueError("conjugation table has a non-real entry; gate not unitary?")
    return np.ascontiguousarray(table.real)


def conjugate_by_gate(s: PauliSum, gate: np.ndarray, qubits: tuple[int, int]) -> PauliSum:
    """Heisenberg map U^dag S U for a 4x4 unitary on the given qubit pair."""
    i, j = qubits
    if i == j or not (0 <= i < s.n and 0 <= j < s.n):
        raise ValueError("need two distinct qubits inside the register")
    table = gate_transfer_table(gate)
    bi = 1 << (s.n - 1 - i)
    bj = 1 << (s.n - 1 - j)
    out = PauliSum(s.n, {})
    for (x, z), c in s.terms.items():
        old = (
            (1 if x & bi else 0)
            | (2 if z & bi else 0)
            | (4 if x & bj else 0)
            | (8 if z & bj else 0)
        )
        bx = x & ~(bi | bj)
        bz = z & ~(bi | bj)
        col = table[:, old]
        for new in range(16):
            w = col[new] * c
            if abs(w) <= PauliSum.DROP:
                continue
            ax = bx | (bi if new & 1 else 0) | (bj if new & 4 else 0)
            az = bz | (bi if new & 2 else 0) | (bj if new & 8 else 0)
            key = (ax, az)
            v = out.terms.get(key, 0j) + w
            if abs(v) <= PauliSum.DROP:
                out.terms.pop(key, None)
            else:
                out.terms[key] = v
    return out


# ---------------------------------------------------------------------------
# textual format: "1.5*XXIZ - 0.5i*YIIZ" with qubit 0 leftmost
# ---------------------------------------------------------------------------

_TERM_RE = re.compile(
    r"^(?:\((?P<re>[^,()+]+?)(?P<im>[+-][^,()]+?)i\)|(?P<imag>[^*]+?)i|(?P<real>[^*i]+?))?"
    r"\*?(?P<label>[IXYZ]+)$"
)


def format_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return f"{c.real:.17g}"
    if c.real == 0.0:
        return f"{c.imag:.17g}i"
    sign = "+" if c.imag >= 0 else "-"
    return f"({c.real:.17g}{sign}{abs(c.imag):.17g}i)"


def format_pauli_sum(s: PauliSum) -> str:
    if not s.terms:
        return "0*" + "I" * s.n
    parts = []
    keys = sorted(s.terms.keys())
    for x, z in keys:
        c = s.terms[(x, z)]
        label = PauliString(s.n, x, z, 0).label()
        parts.append(f"{format_coeff(c)}*{label}")
    return " + ".join(parts).replace("+ -", "- ")


def _parse_coeff(text: str | None) -> complex:
    if text is None or text == "" or text == "+":
        return 1.0 + 0j
    if text == "-":
        return -1.0 + 0j
    return complex(float(text))


def parse_pauli_sum(text: str, n: int | None = None) -> PauliSum:
    """Inverse of :func:`format_pauli_sum`; round-trips exactly at 17 digits."""
    text = text.strip()
    # split on +/- that sit between terms (not inside parens or exponents)
    chunks = []
    depth = 0
    cur = ""
    for k, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and k > 0 and text[k - 1] not in "eE(" and cur.strip():
            chunks.append(cur)
            cur = ch
        else:
            cur += ch
    if cur.strip():
        chunks.append(cur)
    result = None
    for chunk in chunks:
        chunk = chunk.replace(" ", "")
        sign = 1.0
        while chunk and chunk[0] in "+-":
            if chunk[0] == "-":
                sign = -sign
            chunk = chunk[1:]
        m = _TERM_RE.match(chunk)
        if not m:
            raise ValueError(f"cannot parse Pauli term {chunk!r}")
        if m.group("re") is not None:
            c = complex(float(m.group("re")), float(m.group("im") + "1" if m.group("im") in ("+", "-") else m.group("im")))
        elif m.group("imag") is not None:
            c = complex(0.0, _parse_coeff(m.group("imag")).real)
        else:
            c = _parse_coeff(m.group("real"))
        label = m.group("label")
        if n is not None and len(label) != n:
            raise ValueError(f"expected {n} qubits, got label {label!r}")
        p = PauliString.from_label(label)
        if result is None:
            result = PauliSum(p.n, {})
        result.add(p, sign * c)
    if result is None:
        raise ValueError("empty Pauli expression")
    return result
