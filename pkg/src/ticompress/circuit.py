"""Layered translationally invariant circuits of shared two-qubit gates.

A layer owns one 4x4 SU(4) gate and applies it across the bonds of one
permutation class (optionally restricted to a single matching). Controlled
layers fire only when a classical ancilla bit is 1; the simulation uses
branch semantics on the n-site register rather than an explicit ancilla
dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import apply_two_qubit_gate, apply_two_qubit_gate_batch
from .lattice import Lattice, builtin_lattice
from .pauli import is_unitary

UNITARY_TOL = 1e-10


def su_normalize(gate: np.ndarray) -> np.ndarray:
    """Divide out the determinant phase so det = 1. Gates already inside
    SU(4) are returned unchanged, which keeps file round trips bit-exact."""
    det = np.linalg.det(gate)
    if abs(det - 1.0) <= 1e-12:
        return gate
    return gate * np.exp(-1j * np.angle(det) / 4.0)


@dataclass(frozen=True)
class Layer:
    gate: np.ndarray
    class_index: int
    matching_index: int | None = None  # None: every matching of the class
    controlled: bool = False

    def __post_init__(self):
        g = np.asarray(self.gate, dtype=complex)
        if g.shape != (4, 4):
            raise ValueError("layer gate must be 4x4")
        if not is_unitary(g, UNITARY_TOL):
            raise ValueError("layer gate is not unitary")
        object.__setattr__(self, "gate", su_normalize(g))

    def bonds(self, lat: Lattice):
        c = lat.classes[self.class_index]
        if self.matching_index is None:
            return c.bonds
        return c.matchings[self.matching_index]


@dataclass
class Ansatz:
    lattice: Lattice
    layers: list[Layer]
    meta: dict = field(default_factory=dict)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def has_controls(self) -> bool:
        return any(l.controlled for l in self.layers)

    @property
    def n_qubits(self) -> int:
        """Physical width: the register plus one ancilla if any layer is controlled."""
        return self.n_sites + (1 if self.has_controls else 0)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def instances(self, ancilla: int | None = None):
        """Yield (gate, (a, b), layer_idx) bond-level gate applications in
        temporal order. With ancilla=0 controlled layers are skipped; with
        ancilla=1 or None all layers fire."""
        for k, layer in enumerate(self.layers):
            if layer.controlled and ancilla == 0:
                continue
            for bond in layer.bonds(self.lattice):
                yield layer.gate, bond, k

    def reduced(self) -> "Ansatz":
        """The uncontrolled sub-circuit (controlled layers removed)."""
        return Ansatz(self.lattice, [l for l in self.layers if not l.controlled], dict(self.meta))

    def with_gates(self, gates: list[np.ndarray]) -> "Ansatz":
        if len(gates) != len(self.layers):
            raise ValueError("need one gate per layer")
        layers = [replace(l, gate=g) for l, g in zip(self.layers, gates)]
        return Ansatz(self.lattice, layers, dict(self.meta))


def identity_ansatz(lat: Lattice, class_sequence) -> Ansatz:
    layers = [Layer(np.eye(4, dtype=complex), ci) for ci in class_sequence]
    return Ansatz(lat, layers)


def _check_ancilla(ansatz: Ansatz, ancilla: int | None):
    if ansatz.has_controls:
        if ancilla not in (0, 1):
            raise ValueError("controlled circuit: pass ancilla=0 or ancilla=1")
    elif ancilla is not None:
        raise ValueError("ancilla given but the circuit has no controlled layers")


def apply(ansatz: Ansatz, state: np.ndarray, ancilla: int | None = None) -> np.ndarray:
    """Apply the circuit to a statevector on the n-site register."""
    n = ansatz.n_sites
    if state.shape != (1 << n,):
        raise ValueError(f"state must have length 2^{n}")
    _check_ancilla(ansatz, ancilla)
    psi = np.array(state, dtype=complex)
    for gate, (a, b), _ in ansatz.instances(ancilla):
        psi = apply_two_qubit_gate(psi, gate, n, a, b)
    return psi


def apply_batch(ansatz: Ansatz, states: np.ndarray, ancilla: int | None = None) -> np.ndarray:
    """Apply the circuit to every column of a (2^n, m) batch."""
    n = ansatz.n_sites
    _check_ancilla(ansatz, ancilla)
    out = np.array(states, dtype=complex)
    for gate, (a, b), _ in ansatz.instances(ancilla):
        out = apply_two_qubit_gate_batch(out, gate, n, a, b)
    return out


def gate_dense_left(m: np.ndarray, gate: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    """embed(gate) @ m for a (2^n, k) dense block."""
    return apply_two_qubit_gate_batch(m, gate, n, a, b)


def gate_dense_right(m: np.ndarray, gate: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    """m @ embed(gate) for a (k, 2^n) dense block."""
    return apply_two_qubit_gate_batch(m.T, gate.T, n, a, b).T


def dense_matrix(ansatz: Ansatz, ancilla: int | None = None) -> np.ndarray:
    """Full 2^n x 2^n unitary of the requested branch."""
    n = ansatz.n_sites
    if n > 12:
        raise ValueError("dense circuit matrices are capped at 12 qubits")
    _check_ancilla(ansatz, ancilla)
    m = np.eye(1 << n, dtype=complex)
    for gate, (a, b), _ in ansatz.instances(ancilla):
        m = gate_dense_left(m, gate, n, a, b)
    return m


def dense_branches(ansatz: Ansatz) -> tuple[np.ndarray, np.ndarray]:
    """(ancilla=0 branch, ancilla=1 branch) of a controlled circuit."""
    return dense_matrix(ansatz, ancilla=0), dense_matrix(ansatz, ancilla=1)


def repeat_blocks(block: Ansatz, times: int) -> Ansatz:
    """Concatenate the block `times` times; depth bookkeeping in meta."""
    if times < 1:
        raise ValueError("times must be >= 1")
    meta = dict(block.meta)
    meta.update(
        block_depth=block.depth,
        repetitions=times,
        depth=block.depth * times,
    )
    if "dt" in block.meta:
        meta["t_total"] = block.meta["dt"] * times
    return Ansatz(block.lattice, list(block.layers) * times, meta)


# ---------------------------------------------------------------------------
# gate counting under fixed decompositions
# ---------------------------------------------------------------------------


def gate_kind(gate: np.ndarray, tol: float = 1e-12) -> str:
    """'identity', 'product' (1q x 1q), or 'entangling'."""
    if abs(abs(np.trace(gate)) - 4.0) <= tol:
        return "identity"
    schmidt = gate.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    s = np.linalg.svd(schmidt, compute_uv=False)
    if s[1] <= 1e-10 * s[0]:
        return "product"
    return "entangling"


def _instance_cost(kind: str, controlled: bool, gate: np.ndarray) -> tuple[int, int]:
    """(b_gates, cz_gates) for one bond instance."""
    if controlled:
        if kind == "identity":
            return 0, 0
        if kind == "product":
            # one controlled single-qubit gate per non-identity factor
            schmidt = gate.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
            u, s, vh = np.linalg.svd(schmidt)
            cost = 0
            for f in (u[:, 0].reshape(2, 2), vh[0].reshape(2, 2)):
                scale = np.abs(f).max()
                off = abs(f[0, 1]) + abs(f[1, 0])
                if off > 1e-9 * scale or abs(f[0, 0] - f[1, 1]) > 1e-9 * scale:
                    cost += 1
            return cost, cost
        return 9, 9  # numerical synthesis average for a controlled SU(4)
    if kind == "entangling":
        return 2, 3  # two B gates, or three CZ/MS gates
    return 0, 0


@dataclass
class GateCounts:
    b_gates: int
    cz_gates: int
    per_layer: list
    longest_path: int


def gate_counts(ansatz: Ansatz) -> GateCounts:
    """Two-qubit gate budget under the fixed decompositions: 2 B (3 CZ/MS)
    per generic uncontrolled instance, 9 per controlled instance; tensor
    products of single-qubit gates are free when uncontrolled. longest_path
    is the serial B-gate depth on the busiest qubit."""
    per_layer = []
    total_b = total_cz = 0
    per_qubit = np.zeros(ansatz.n_sites, dtype=int)
    for k, layer in enumerate(ansatz.layers):
        kind = gate_kind(layer.gate)
        bonds = layer.bonds(ansatz.lattice)
        b1, cz1 = _instance_cost(kind, layer.controlled, layer.gate)
        n_inst = len(bonds)
        per_layer.append(
            dict(
                layer=k,
                class_index=layer.class_index,
                controlled=layer.controlled,
                kind=kind,
                instances=n_inst,
                b_gates=b1 * n_inst,
                cz_gates=cz1 * n_inst,
            )
        )
        total_b += b1 * n_inst
        total_cz += cz1 * n_inst
        for a, b in bonds:
            per_qubit[a] += b1
            per_qubit[b] += b1
    longest = int(per_qubit.max()) if ansatz.layers else 0
    return GateCounts(total_b, total_cz, per_layer, longest)


# ---------------------------------------------------------------------------
# random states
# ---------------------------------------------------------------------------


def haar_states(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m Haar-random statevectors as the columns of a (2^n, m) array."""
    v = rng.normal(size=(1 << n, m)) + 1j * rng.normal(size=(1 << n, m))
    return v / np.linalg.norm(v, axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# serialization: header lines then one record per layer with 16 complex
# entries at 17 significant digits (bit-exact round trip)
# ---------------------------------------------------------------------------


def format_circuit(ansatz: Ansatz) -> str:
    lines = [f"qubits {ansatz.n_sites}", f"lattice {ansatz.lattice.name}"]
    for key in sorted(ansatz.meta):
        v = ansatz.meta[key]
        if isinstance(v, float):
            lines.append(f"meta {key} {v:.17g}")
        elif isinstance(v, (int, str)):
            lines.append(f"meta {key} {v}")
    for layer in ansatz.layers:
        mi = "-" if layer.matching_index is None else str(layer.matching_index)
        entries = " ".join(
            f"{v.real:.17g} {v.imag:.17g}" for v in layer.gate.ravel()
        )
        lines.append(
            f"layer {layer.class_index} {mi} {1 if layer.controlled else 0} {entries}"
        )
    return "\n".join(lines) + "\n"


def parse_circuit(text: str, lattice: Lattice | None = None) -> Ansatz:
    n = None
    layers = []
    meta: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "qubits":
            n = int(tok[1])
        elif tok[0] == "lattice":
            if lattice is None:
                lattice = builtin_lattice(tok[1])
        elif tok[0] == "meta":
            raw_v = tok[2]
            try:
                v: int | float | str = int(raw_v)
            except ValueError:
                try:
                    v = float(raw_v)
                except ValueError:
                    v = raw_v
            meta[tok[1]] = v
        elif tok[0] == "layer":
            ci = int(tok[1])
            mi = None if tok[2] == "-" else int(tok[2])
            controlled = tok[3] == "1"
            vals = np.array([float(t) for t in tok[4:]])
            if vals.size != 32:
                raise ValueError("layer record needs 16 complex entries")
            gate = (vals[0::2] + 1j * vals[1::2]).reshape(4, 4)
            layers.append(Layer(gate, ci, mi, controlled))
        else:
            raise ValueError(f"cannot parse circuit line {raw!r}")
    if lattice is None or n is None:
        raise ValueError("circuit file missing qubits/lattice header")
    if lattice.n_sites != n:
        raise ValueError("lattice does not match the circuit's qubit count")
    return Ansatz(lattice, layers, meta)


def save_circuit(ansatz: Ansatz, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_circuit(ansatz))


def load_circuit(path: str, lattice: Lattice | None = None) -> Ansatz:
    with open(path) as fh:
        return parse_circuit(fh.read(), lattice)
