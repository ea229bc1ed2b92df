"""Product-formula circuits for the partitioned Heisenberg-in-field model.

The six-part partition splits the Hamiltonian into the XX, YY, ZZ bond
sectors (each further split per permutation class) and the three uniform
field sectors. Every part comes with a Pauli string K that anticommutes
with it term by term; inserting K as a controlled layer before and after
the part's block turns the circuit into an evolution-direction switch: the
ancilla=0 branch runs exp(+iHt/2) and the ancilla=1 branch exp(-iHt/2).

Single-qubit field rotations never stand alone: they are either fused into
the nearest preceding two-qubit layer (when that layer's bonds cover every
site exactly once) or emitted as shared gates over a site-covering set of
matchings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Ansatz, Layer
from .hamiltonian import (
    HEISENBERG_BOND,
    Hamiltonian,
    heisenberg_field,
    spectral_norm,
    two_site_string,
)
from .lattice import Lattice, class_bipartition, site_cover_plan
from .pauli import PauliString, PauliSum, anticommutes

_M1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# sector letter -> anticommuting partner letter, as in the standard choice
_BOND_K_LETTER = {"X": "Z", "Y": "X", "Z": "Y"}
_FIELD_K_LETTER = {"Y": "X", "Z": "X", "X": "Z"}


@dataclass(frozen=True)
class ClassSplit:
    class_index: int
    terms: PauliSum
    k: PauliString


@dataclass(frozen=True)
class Part:
    label: str
    kind: str  # 'bond' or 'field'
    letter: str
    coeff: float
    total: PauliSum
    k_letter: str
    splits: tuple[ClassSplit, ...]  # bond parts: one per class; field parts: one global
    k_global: PauliString | None


@dataclass
class Partition:
    hamiltonian: Hamiltonian
    parts: tuple[Part, ...]

    @property
    def lattice(self) -> Lattice:
        return self.hamiltonian.lattice

    def total(self) -> PauliSum:
        s = PauliSum.zero(self.hamiltonian.n)
        for p in self.parts:
            s = s + p.total
        return s


def _side_a(lat: Lattice, class_index: int) -> set[int]:
    side, positions = class_bipartition(lat.classes[class_index])
    if positions[0] != "first":
        raise ValueError("first matching must be oriented off the bipartition side")
    return side


def _two_color(lat: Lattice) -> set[int] | None:
    """One side of a 2-coloring of the full bond graph, or None if odd cycles."""
    adj: dict[int, list[int]] = {s: [] for s in range(lat.n_sites)}
    for a, b in lat.bonds:
        adj[a].append(b)
        adj[b].append(a)
    color: dict[int, int] = {}
    for seed in range(lat.n_sites):
        if seed in color:
            continue
        color[seed] = 0
        queue = [seed]
        while queue:
            u = queue.pop()
            for v in adj[u]:
                if v in color:
                    if color[v] == color[u]:
                        return None
                else:
                    color[v] = 1 - color[u]
                    queue.append(v)
    return {s for s, c in color.items() if c == 0}


def _string_on_sites(n: int, letter: str, sites) -> PauliString:
    p = PauliString.identity(n)
    x = z = 0
    for s in sites:
        q = PauliString.single(n, s, letter)
        x |= q.x
        z |= q.z
    return PauliString(n, x, z)


def heisenberg_partition(h: Hamiltonian) -> Partition:
    """The six-part split of the Heisenberg-in-field model with its
    anticommuting control strings."""
    lat = h.lattice
    expected = heisenberg_field(lat)
    if h.pauli.terms != expected.pauli.terms:
        raise ValueError("Hamiltonian is not the Heisenberg-in-field model")
    n = lat.n_sites
    parts = []
    # bipartite geometries admit one global K per bond sector; frustrated
    # ones (kagome, triangular) only have the per-class strings
    global_sides = _two_color(lat)
    for letter, _, coeff in HEISENBERG_BOND:
        splits = []
        total = PauliSum.zero(n)
        k_letter = _BOND_K_LETTER[letter]
        for ci, c in enumerate(lat.classes):
            terms = PauliSum.zero(n)
            for a, b in c.bonds:
                terms.add(two_site_string(n, a, letter, b, letter), coeff)
            k = _string_on_sites(n, k_letter, sorted(_side_a(lat, ci)))
            for p, _ in terms.items():
                if not anticommutes(k, p):
                    raise ValueError("control string fails to anticommute")
            splits.append(ClassSplit(ci, terms, k))
            total = total + terms
        k_global = (
            _string_on_sites(n, k_letter, sorted(global_sides))
            if global_sides is not None
            else None
        )
        parts.append(
            Part(letter * 2, "bond", letter, coeff, total, k_letter, tuple(splits), k_global)
        )
    for letter, coeff in (("Y", -1.0), ("Z", 1.0), ("X", 3.0)):
        total = PauliSum.zero(n)
        for q in range(n):
            total.add(PauliString.single(n, q, letter), coeff)
        k_letter = _FIELD_K_LETTER[letter]
        k = _string_on_sites(n, k_letter, range(n))
        for p, _ in total.items():
            if not anticommutes(k, p):
                raise ValueError("control string fails to anticommute")
        parts.append(
            Part(
                f"field{coeff:+g}{letter}",
                "field",
                letter,
                coeff,
                total,
                k_letter,
                (ClassSplit(-1, total, k),),
                k,
            )
        )
    return Partition(h, tuple(parts))


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------


def _bond_gate(letter: str, coeff: float, tau: float) -> np.ndarray:
    """exp(-i tau c sigma x sigma): closed form since (sigma x sigma)^2 = 1."""
    ss = np.kron(_M1Q[letter], _M1Q[letter])
    ang = tau * coeff
    return np.cos(ang) * np.eye(4) - 1j * np.sin(ang) * ss


def _field_rot(letter: str, coeff: float, tau: float) -> np.ndarray:
    ang = tau * coeff
    return np.cos(ang) * np.eye(2) - 1j * np.sin(ang) * _M1Q[letter]


def expm_hermitian(h: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i tau h) for Hermitian h via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# emission pipeline
# ---------------------------------------------------------------------------


def _covers_once(lat: Lattice, layer: Layer) -> bool:
    sites = [s for a, b in layer.bonds(lat) for s in (a, b)]
    return len(sites) == lat.n_sites and len(set(sites)) == lat.n_sites


class _Emitter:
    def __init__(self, lat: Lattice):
        self.lat = lat
        self.tokens: list[tuple] = []  # ('K', key) | ('L', Layer) | ('F', letter, coeff, tau)

    def k(self, key):
        if self.tokens and self.tokens[-1] == ("K", key):
            self.tokens.pop()  # adjacent identical control strings cancel
        else:
            self.tokens.append(("K", key))

    def layer(self, layer: Layer):
        self.tokens.append(("L", layer))

    def field(self, letter: str, coeff: float, tau: float):
        self.tokens.append(("F", letter, coeff, tau))

    def _k_layers(self, key) -> list[Layer]:
        kind, letter, ci = key
        if kind == "bond":
            return [Layer(np.kron(_M1Q[letter], _M1Q["I"]), ci, 0, controlled=True)]
        layers = []
        for pci, mi, mode in site_cover_plan(self.lat):
            f = _M1Q[letter] if mode in ("both", "first") else _M1Q["I"]
            s = _M1Q[letter] if mode in ("both", "second") else _M1Q["I"]
            layers.append(Layer(np.kron(f, s), pci, mi, controlled=True))
        return layers

    def build(self) -> list[Layer]:
        layers: list[Layer] = []
        for tok in self.tokens:
            if tok[0] == "K":
                layers.extend(self._k_layers(tok[1]))
            elif tok[0] == "L":
                layers.append(tok[1])
            else:
                _, letter, coeff, tau = tok
                r = _field_rot(letter, coeff, tau)
                prev = layers[-1] if layers else None
                if (
                    prev is not None
                    and not prev.controlled
                    and _covers_once(self.lat, prev)
                ):
                    gate = np.kron(r, r) @ prev.gate
                    layers[-1] = Layer(gate, prev.class_index, prev.matching_index, False)
                else:
                    for pci, mi, mode in site_cover_plan(self.lat):
                        f = r if mode in ("both", "first") else _M1Q["I"]
                        s = r if mode in ("both", "second") else _M1Q["I"]
                        layers.append(Layer(np.kron(f, s), pci, mi, False))
        return layers


def _emit_block(em: _Emitter, part: Part, split: ClassSplit | None, tau: float, controlled: bool):
    if part.kind == "bond":
        key = ("bond", part.k_letter, split.class_index)
        if controlled:
            em.k(key)
        em.layer(Layer(_bond_gate(part.letter, part.coeff, tau), split.class_index))
        if controlled:
            em.k(key)
    else:
        key = ("field", part.k_letter, None)
        if controlled:
            em.k(key)
        em.field(part.letter, part.coeff, tau)
        if controlled:
            em.k(key)


def _one_pass(em, partition: Partition, tau: float, controlled: bool, reverse: bool):
    blocks = []
    for part in partition.parts:
        if part.kind == "bond":
            for split in part.splits:
                blocks.append((part, split))
        else:
            blocks.append((part, None))
    if reverse:
        blocks.reverse()
    for part, split in blocks:
        _emit_block(em, part, split, tau, controlled)


_SUZUKI_P = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))


def _schedule(order: int, tau: float) -> list[tuple[float, bool]]:
    """List of (tau, reverse) passes realizing one step of the formula."""
    if order == 1:
        return [(tau, False)]
    if order == 2:
        return [(tau / 2, False), (tau / 2, True)]
    if order == 4:
        p = _SUZUKI_P
        out = []
        for u in (p, p, 1 - 4 * p, p, p):
            out.extend(_schedule(2, u * tau))
        return out
    raise ValueError("supported orders: 1, 2, 4")


def trotter_circuit(
    partition: Partition,
    t: float,
    order: int = 1,
    steps: int = 1,
    controlled: bool = False,
) -> Ansatz:
    """Product-formula circuit for exp(-iHt), or its controlled-direction
    variant: with controlled=True the K strings become controlled layers and
    the uncontrolled branch realizes exp(+iHt/2), the controlled one
    exp(-iHt/2)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    block_time = -t / 2 if controlled else t
    tau = block_time / steps
    em = _Emitter(partition.lattice)
    for _ in range(steps):
        for u, reverse in _schedule(order, tau):
            _one_pass(em, partition, u, controlled, reverse)
    layers = em.build()
    meta = dict(
        kind="trotter",
        order=order,
        steps=steps,
        t=t,
        controlled=int(controlled),
        field_layout="fused-or-cover",
    )
    return Ansatz(partition.lattice, layers, meta)


# ---------------------------------------------------------------------------
# minimal-depth class-grouped circuits and warm starts
# ---------------------------------------------------------------------------


def class_grouped_generators(h: Hamiltonian) -> list[np.ndarray]:
    """One 4x4 Hermitian generator per class: the class's two-body sector
    plus the per-site field split evenly over the lattice degree."""
    lat = h.lattice
    n = lat.n_sites
    degs = lat.degrees()
    if len(set(degs)) != 1:
        raise ValueError("class-grouped circuits need a degree-regular lattice")
    deg = degs[0]
    field = np.zeros((2, 2), dtype=complex)
    for letter in "XYZ":
        c0 = h.pauli.coeff(PauliString.single(n, 0, letter))
        for q in range(1, n):
            if abs(h.pauli.coeff(PauliString.single(n, q, letter)) - c0) > 1e-12:
                raise ValueError("field coefficients are not uniform")
        field += c0.real * _M1Q[letter]
    gens = []
    for c in lat.classes:
        g = np.kron(field, np.eye(2)) / deg + np.kron(np.eye(2), field) / deg
        a0, b0 = c.bonds[0]
        for la in "XYZ":
            for lb in "XYZ":
                coeff = h.pauli.coeff(two_site_string(n, a0, la, b0, lb)).real
                for a, b in c.bonds:
                    ref = h.pauli.coeff(two_site_string(n, a, la, b, lb)).real
                    if abs(ref - coeff) > 1e-12:
                        raise ValueError("bond coefficients are not uniform in a class")
                if coeff:
                    g = g + coeff * np.kron(_M1Q[la], _M1Q[lb])
        gens.append(g)
    return gens


def grouped_trotter_circuit(h: Hamiltonian, t: float, order: int = 1, steps: int = 1) -> Ansatz:
    """Product formula over whole-class generators: depth n_classes per
    first-order pass. On chains each class layer is exact for its part."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    gens = class_grouped_generators(h)
    tau = t / steps
    layers = []
    for _ in range(steps):
        for u, reverse in _schedule(order, tau):
            order_idx = range(len(gens) - 1, -1, -1) if reverse else range(len(gens))
            for ci in order_idx:
                layers.append(Layer(expm_hermitian(gens[ci], u), ci))
    meta = dict(kind="grouped-trotter", order=order, steps=steps, t=t)
    return Ansatz(h.lattice, layers, meta)


def trotter_init_point(
    partition: Partition,
    dt: float,
    depth_budget: int,
    control_layers: int = 0,
) -> Ansatz:
    """Warm start for the compression: class-grouped first-order gates fill
    the uncontrolled layers, identities fill the control layers, and the
    generators are capped so the per-gate norm bound
    ||H0_j|| <= 2||H||/(N L) holds by construction."""
    h = partition.hamiltonian
    lat = h.lattice
    nc = lat.n_classes
    if depth_budget < nc:
        raise ValueError(f"depth budget {depth_budget} below the class count {nc}")
    gens = class_grouped_generators(h)
    cycles = depth_budget // nc
    rem = depth_budget % nc
    total_layers = depth_budget + control_layers
    budget = 2.0 * spectral_norm(h) / (lat.n_sites * total_layers)
    max_norm = max(np.abs(np.linalg.eigvalsh(g)).max() for g in gens) / cycles
    scale = min(1.0, budget * (1.0 - 1e-10) / max_norm)
    layers = []
    for _ in range(cycles):
        for ci in range(nc):
            layers.append(Layer(expm_hermitian(gens[ci], dt * scale / cycles), ci))
    for k in range(rem):
        layers.append(Layer(np.eye(4, dtype=complex), k % nc))
    for k in range(control_layers):
        layers.append(Layer(np.eye(4, dtype=complex), k % nc, controlled=True))
    meta = dict(
        kind="trotter-init",
        dt=dt,
        depth=total_layers,
        gamma=control_layers,
        generator_scale=scale,
    )
    return Ansatz(lat, layers, meta)
