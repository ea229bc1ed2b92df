"""Target Hamiltonians and the exact-propagator oracle.

Dense operators are plain complex ndarrays, capped at 12 qubits (a 4096^2
complex matrix is ~256 MB); anything larger must go through Pauli
propagation instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Lattice, builtin_lattice, validate
from .pauli import PauliString, PauliSum, format_pauli_sum, parse_pauli_sum

MAX_DENSE_QUBITS = 12

HEISENBERG_BOND = (("X", "X", 1.0), ("Y", "Y", 1.0), ("Z", "Z", 1.0))
HEISENBERG_FIELD = (("X", 3.0), ("Y", -1.0), ("Z", 1.0))


def _check_dense_size(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise ValueError(
            f"{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}; "
            "use the Pauli-propagation route with a norm bound instead"
        )


@dataclass
class Hamiltonian:
    pauli: PauliSum
    lattice: Lattice
    name: str = "custom"
    _eig: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.lattice.n_sites

    def dense(self) -> np.ndarray:
        _check_dense_size(self.n)
        return self.pauli.to_matrix()

    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition (eigenvalues, eigenvectors)."""
        if self._eig is None:
            _check_dense_size(self.n)
            if not self.pauli.is_hermitian():
                raise ValueError("Hamiltonian has non-real coefficients")
            w, q = np.linalg.eigh(self.dense())
            self._eig = (w, q)
        return self._eig

    def scaled(self, factor: float) -> "Hamiltonian":
        return Hamiltonian(self.pauli.scaled(factor), self.lattice, self.name)


def two_site_string(n: int, a: int, la: str, b: int, lb: str) -> PauliString:
    pa = PauliString.single(n, a, la)
    pb = PauliString.single(n, b, lb)
    return PauliString(n, pa.x | pb.x, pa.z | pb.z)


def heisenberg_field(lat: Lattice) -> Hamiltonian:
    """Heisenberg bonds (XX+YY+ZZ) plus the uniform field 3X - Y + Z."""
    rep = validate(lat)
    if not rep.valid:
        raise ValueError("invalid lattice: " + "; ".join(rep.violations))
    n = lat.n_sites
    s = PauliSum.zero(n)
    for a, b in lat.bonds:
        for la, lb, c in HEISENBERG_BOND:
            s.add(two_site_string(n, a, la, b, lb), c)
    for q in range(n):
        for letter, c in HEISENBERG_FIELD:
            s.add(PauliString.single(n, q, letter), c)
    return Hamiltonian(s, lat, name="heisenberg_field")


_LETTERS = ("X", "Y", "Z")


def random_two_local_ti(lat: Lattice, seed: int, target_norm: float = 1.0) -> Hamiltonian:
    """Random 2-local TI Hamiltonian rescaled to the requested spectral norm.

    One uniform[-1,1] coefficient per (class, two-body sector) and per field
    sector, shared across all bonds of the class / all sites, then a global
    rescale so that the largest eigenvalue magnitude equals target_norm.
    """
    if target_norm <= 0:
        raise ValueError("target_norm must be positive")
    rng = np.random.default_rng([int(seed), 0x7A11])
    n = lat.n_sites
    s = PauliSum.zero(n)
    for c in lat.classes:
        coeffs = rng.uniform(-1.0, 1.0, size=9)
        k = 0
        for la in _LETTERS:
            for lb in _LETTERS:
                for a, b in c.bonds:
                    s.add(two_site_string(n, a, la, b, lb), coeffs[k])
                k += 1
    fields = rng.uniform(-1.0, 1.0, size=3)
    for q in range(n):
        for letter, c in zip(_LETTERS, fields):
            s.add(PauliString.single(n, q, letter), c)
    h = Hamiltonian(s, lat, name=f"random_ti(seed={seed})")
    norm = spectral_norm(h)
    return Hamiltonian(h.pauli.scaled(target_norm / norm), lat, h.name)


def spectral_norm(h: Hamiltonian) -> float:
    w, _ = h.eig()
    return float(np.max(np.abs(w)))


def exact_propagator(h: Hamiltonian, t: float) -> np.ndarray:
    """U = exp(-iHt) through the eigendecomposition; exactly unitary."""
    w, q = h.eig()
    return (q * np.exp(-1j * w * t)) @ q.conj().T


def propagate_states(h: Hamiltonian, t: float, states: np.ndarray) -> np.ndarray:
    """Apply exp(-iHt) to each column of a (2^n, m) batch."""
    w, q = h.eig()
    return q @ (np.exp(-1j * w * t)[:, None] * (q.conj().T @ states))


def eigenphases(u: np.ndarray) -> np.ndarray:
    return np.angle(np.linalg.eigvals(u))


def principal_log_ok(u: np.ndarray, margin: float) -> bool:
    """True iff the unitary's spectrum stays at least `margin` away from -1."""
    return bool(np.max(np.abs(eigenphases(u))) <= np.pi - margin)


# serialization: lattice header plus the Pauli text format


def format_hamiltonian(h: Hamiltonian) -> str:
    return f"lattice {h.lattice.name}\n{format_pauli_sum(h.pauli)}\n"


def parse_hamiltonian(text: str) -> Hamiltonian:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("lattice "):
        raise ValueError("expected 'lattice NAME' header then a Pauli line")
    lat = builtin_lattice(lines[0].split(None, 1)[1])
    return Hamiltonian(parse_pauli_sum(lines[1], n=lat.n_sites), lat)
