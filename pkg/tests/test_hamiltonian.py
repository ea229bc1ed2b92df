import numpy as np
import pytest

from ticompress.hamiltonian import (
    exact_propagator,
    format_hamiltonian,
    heisenberg_field,
    parse_hamiltonian,
    principal_log_ok,
    random_two_local_ti,
    spectral_norm,
)
from ticompress.lattice import builtin_lattice
from ticompress.pauli import PauliString


def test_heisenberg_chain2_terms():
    h = heisenberg_field(builtin_lattice("chain(2)"))
    s = h.pauli
    assert s.coeff(PauliString.from_label("XX")) == 1.0
    assert s.coeff(PauliString.from_label("YY")) == 1.0
    assert s.coeff(PauliString.from_label("ZZ")) == 1.0
    for lab, c in [("XI", 3.0), ("IX", 3.0), ("YI", -1.0), ("ZI", 1.0)]:
        assert s.coeff(PauliString.from_label(lab)) == c
    assert s.n_terms() == 9


def test_heisenberg_kagome_term_count():
    h = heisenberg_field(builtin_lattice("kagome12"))
    assert h.pauli.n_terms() == 24 * 3 + 12 * 3


def test_heisenberg_hermitian():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    assert h.pauli.is_hermitian()
    dense = h.dense()
    np.testing.assert_allclose(dense, dense.conj().T, atol=1e-12)


def test_dense_matches_naive_expansion():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    naive = sum(c * p.to_matrix() for p, c in h.pauli.items())
    np.testing.assert_allclose(h.dense(), naive, atol=1e-12)


def test_spectral_norm_simple_cases():
    lat = builtin_lattice("chain(2)")
    from ticompress.hamiltonian import Hamiltonian
    from ticompress.pauli import PauliSum

    z = Hamiltonian(PauliSum.from_terms([(PauliString.from_label("ZI"), 1.0)]), lat)
    assert abs(spectral_norm(z) - 1.0) < 1e-12
    xx = Hamiltonian(PauliSum.from_terms([(PauliString.from_label("XX"), 1.0)]), lat)
    assert abs(spectral_norm(xx) - 1.0) < 1e-12


def test_spectral_norm_matches_eigensolver():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    w = np.linalg.eigvalsh(h.dense())
    assert abs(spectral_norm(h) - np.max(np.abs(w))) < 1e-12


def test_spectral_norm_pauli_conjugation_invariant():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    p = PauliString.from_label("XZYI").to_matrix()
    conj = p @ h.dense() @ p.conj().T
    w = np.linalg.eigvalsh(conj)
    assert abs(spectral_norm(h) - np.max(np.abs(w))) < 1e-10


def test_random_ti_norm_and_determinism():
    lat = builtin_lattice("chain(4)")
    h1 = random_two_local_ti(lat, seed=42, target_norm=1.0)
    h2 = random_two_local_ti(lat, seed=42, target_norm=1.0)
    assert abs(spectral_norm(h1) - 1.0) < 1e-8
    assert h1.pauli.terms == h2.pauli.terms
    h3 = random_two_local_ti(lat, seed=43)
    assert h3.pauli.terms != h1.pauli.terms


def test_random_ti_is_translationally_invariant():
    lat = builtin_lattice("chain(6)")
    h = random_two_local_ti(lat, seed=5)
    from ticompress.hamiltonian import two_site_string

    for c in lat.classes:
        for la in "XYZ":
            for lb in "XYZ":
                vals = {
                    round(h.pauli.coeff(two_site_string(6, a, la, b, lb)).real, 12)
                    for a, b in c.bonds
                }
                assert len(vals) == 1


def test_propagator_identity_and_inverse():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    u0 = exact_propagator(h, 0.0)
    np.testing.assert_allclose(u0, np.eye(16), atol=1e-12)
    u = exact_propagator(h, 0.3)
    np.testing.assert_allclose(u @ exact_propagator(h, -0.3), np.eye(16), atol=1e-10)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-10)


def test_propagator_group_property():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    u = exact_propagator(h, 0.2) @ exact_propagator(h, 0.5)
    np.testing.assert_allclose(u, exact_propagator(h, 0.7), atol=1e-9)


def test_propagator_single_qubit_closed_form():
    from ticompress.hamiltonian import Hamiltonian
    from ticompress.pauli import PauliSum

    lat = builtin_lattice("chain(2)")
    hz = Hamiltonian(PauliSum.from_terms([(PauliString.from_label("ZI"), 1.0)]), lat)
    u = exact_propagator(hz, np.pi / 2)
    expected = np.kron(np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]), np.eye(2))
    np.testing.assert_allclose(u, expected, atol=1e-12)


def test_dense_size_cap():
    lat = builtin_lattice("chain(14)")
    h = heisenberg_field(lat)
    with pytest.raises(ValueError, match="propagation"):
        h.dense()


def test_principal_log_ok():
    assert principal_log_ok(np.eye(4), 0.1)
    assert not principal_log_ok(np.diag([-1.0, 1.0, 1.0, 1.0]).astype(complex), 0.1)
    h = heisenberg_field(builtin_lattice("chain(4)"))
    dt = (np.pi - 0.2) / spectral_norm(h)
    assert principal_log_ok(exact_propagator(h, dt), 0.1)


def test_serialization_round_trip():
    h = heisenberg_field(builtin_lattice("chain(4)"))
    text = format_hamiltonian(h)
    back = parse_hamiltonian(text)
    assert back.pauli.terms == h.pauli.terms
    assert back.lattice.n_sites == 4
