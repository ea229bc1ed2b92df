"""Heisenberg-picture Pauli propagation with coefficient truncation.

Observables are expanded over the Hermitian Pauli basis and conjugated
gate by gate in reverse circuit order (U^dag P U for U = the full circuit).
After every gate, strings with |coefficient| below the cut-off are dropped,
which bounds memory at the price of a controlled bias. Terms live in
parallel uint64 mask arrays, so registers are capped at 64 qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import propagate_step
from .circuit import Ansatz
from .pauli import PauliString, PauliSum, gate_transfer_table

DUST = 1e-14


@dataclass
class PropagationConfig:
    kappa: float = 0.0
    max_terms: int | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")


def _gate_sequence(circuit) -> list[tuple[np.ndarray, tuple[int, int]]]:
    if isinstance(circuit, Ansatz):
        anc = 0 if circuit.has_controls else None
        return [(gate, bond) for gate, bond, _ in circuit.instances(anc)]
    return [(gate, tuple(bond)) for gate, bond in circuit]


class _TermArrays:
    __slots__ = ("xs", "zs", "cs", "n")

    def __init__(self, n: int, xs, zs, cs):
        self.n = n
        self.xs = xs
        self.zs = zs
        self.cs = cs

    @classmethod
    def from_string(cls, p: PauliString) -> "_TermArrays":
        if p.n > 64:
            raise ValueError("array propagation is limited to 64 qubits")
        return cls(
            p.n,
            np.array([p.x], dtype=np.uint64),
            np.array([p.z], dtype=np.uint64),
            np.array([p.phase_value()], dtype=np.complex128),
        )

    def to_sum(self) -> PauliSum:
        out = PauliSum(self.n, {})
        for x, z, c in zip(self.xs, self.zs, self.cs):
            if abs(c) > DUST:
                out.terms[(int(x), int(z))] = complex(c)
        return out


def propagate(
    observable: PauliString,
    circuit,
    config: PropagationConfig | None = None,
) -> PauliSum:
    """U^dag P U expanded in the Pauli basis, truncating |coeff| < kappa
    after each gate. `circuit` is an Ansatz (controlled layers excluded) or
    an iterable of (gate4x4, (a, b)) in temporal order."""
    cfg = config or PropagationConfig()
    if observable.weight() < 1:
        raise ValueError("observable must have weight >= 1")
    seq = _gate_sequence(circuit)
    terms = _TermArrays.from_string(observable)
    n = observable.n
    drop = max(cfg.kappa, DUST)
    tables: dict[int, np.ndarray] = {}
    for gate, (a, b) in reversed(seq):
        key = id(gate)
        table = tables.get(key)
        if table is None:
            table = gate_transfer_table(gate)
            tables[key] = table
        xs, zs, cs = propagate_step(
            terms.xs, terms.zs, terms.cs, table, n - 1 - a, n - 1 - b, drop
        )
        terms = _TermArrays(n, xs, zs, cs)
        if cfg.max_terms is not None and len(terms.cs) > cfg.max_terms:
            raise RuntimeError(
                f"term count {len(terms.cs)} exceeded max_terms={cfg.max_terms}"
            )
    return terms.to_sum()


def overlap(a: PauliSum, b: PauliSum) -> float:
    """sum_P alpha_P beta_P, i.e. Tr(AB)/2^N by Pauli orthogonality."""
    if a.n != b.n:
        raise ValueError("size mismatch")
    small, large = (a, b) if len(a.terms) <= len(b.terms) else (b, a)
    acc = 0j
    for key, c in small.terms.items():
        other = large.terms.get(key)
        if other is not None:
            acc += c * other
    return float(acc.real)


@dataclass
class LocalInfidelity:
    i_loc: float
    c1_loc: float
    per_site: list[float] = field(default_factory=list)
    term_counts: dict = field(default_factory=dict)


def local_infidelity(
    target_circuit,
    approx_circuit,
    n_qubits: int,
    config: PropagationConfig | None = None,
) -> LocalInfidelity:
    """Local cost from weight-1 Pauli transfer:
    C1loc = 1/2 - (1/6N) sum_{j,sigma} overlap(U^dag s_j U, W^dag s_j W),
    scaled to the local infidelity 2N 2^N/(2^N+1) C1loc that upper-bounds
    the Haar-sampled evolution infidelity."""
    cfg = config or PropagationConfig()
    n = n_qubits
    per_site = []
    max_target = max_approx = 0
    for j in range(n):
        acc = 0.0
        for letter in "XYZ":
            p = PauliString.single(n, j, letter)
            pt = propagate(p, target_circuit, cfg)
            pa = propagate(p, approx_circuit, cfg)
            max_target = max(max_target, pt.n_terms())
            max_approx = max(max_approx, pa.n_terms())
            acc += overlap(pt, pa)
        per_site.append(acc)
    c1 = 0.5 - sum(per_site) / (6.0 * n)
    dim = float(2**n) if n <= 52 else 2.0**n
    i_loc = 2.0 * n * (dim / (dim + 1.0)) * c1
    return LocalInfidelity(
        i_loc=float(i_loc),
        c1_loc=float(c1),
        per_site=per_site,
        term_counts=dict(target=max_target, approx=max_approx),
    )


def dense_c1_loc(target_u: np.ndarray, approx_u: np.ndarray) -> float:
    """Dense oracle for the local cost (small registers only)."""
    dim = target_u.shape[0]
    n = int(np.log2(dim))
    total = 0.0
    for j in range(n):
        for letter in "XYZ":
            s = PauliString.single(n, j, letter).to_matrix()
            left = target_u.conj().T @ s @ target_u
            right = approx_u.conj().T @ s @ approx_u
            total += np.real(np.trace(left @ right)) / dim
    return 0.5 - total / (6.0 * n)
