import numpy as np
import pytest

from ticompress.bgate import (
    B_PHI,
    B_THETA,
    SdfParams,
    b_gate_params,
    decompose_su4_counts,
    echoed_b,
    even_block_entries,
    phase_aligned_distance,
    u_b,
    u_sdf,
    verify_b,
    virtual_z_angle,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def test_sdf_phase_zero_reduces_to_xx():
    p = SdfParams(rabi=1.0, lamb_dicke=0.1, detuning=0.2, phase=0.0)
    assert abs(p.theta - np.pi / 4) < 1e-12
    xx = np.kron(X, X)
    expected = np.cos(np.pi / 4) * np.eye(4) - 1j * np.sin(np.pi / 4) * xx
    np.testing.assert_allclose(u_sdf(p), expected, atol=1e-14)


def test_sdf_unitary_and_spectrum():
    p = SdfParams(rabi=1.0, lamb_dicke=0.1, detuning=0.3, phase=0.7)
    u = u_sdf(p)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-14)
    phases = np.sort(np.angle(np.linalg.eigvals(u)))
    expected = np.sort([-p.theta, -p.theta, p.theta, p.theta])
    np.testing.assert_allclose(phases, expected, atol=1e-12)


def test_sdf_invariant_guard():
    with pytest.raises(ValueError):
        SdfParams(rabi=1.0, lamb_dicke=1.0, detuning=1.0, phase=0.0)  # theta = pi


def test_b_gate_detuning_sets_theta():
    p = b_gate_params()
    assert abs(p.theta - 3 * np.pi / 16) < 1e-14
    assert abs(p.detuning - 4 / np.sqrt(3) * p.rabi * p.lamb_dicke) < 1e-14


def test_echo_collapses_at_phase_zero():
    p = SdfParams(1.0, 0.1, 0.25, 0.0)
    np.testing.assert_allclose(echoed_b(p), u_sdf(p) @ u_sdf(p), atol=1e-14)


def test_echo_block_diagonal_for_any_phase():
    rng = np.random.default_rng(2)
    for _ in range(20):
        phase = rng.uniform(-np.pi, np.pi)
        scale = rng.uniform(0.7, 1.3)
        p = SdfParams(1.0, 0.1, 0.4 * scale, phase)
        b = echoed_b(p)
        for i in (0, 3):
            for j in (1, 2):
                assert abs(b[i, j]) < 1e-14
                assert abs(b[j, i]) < 1e-14


def test_odd_block_independent_of_phase():
    blocks = []
    for phase in np.linspace(-1.2, 1.2, 9):
        p = SdfParams(1.0, 0.1, 0.4, phase)
        b = echoed_b(p)
        blocks.append(b[np.ix_([1, 2], [1, 2])])
    for blk in blocks[1:]:
        assert np.abs(blk - blocks[0]).max() < 1e-12
    # and it equals exp(-i 2 theta X)
    theta = SdfParams(1.0, 0.1, 0.4, 0.0).theta
    expected = np.cos(2 * theta) * np.eye(2) - 1j * np.sin(2 * theta) * X
    np.testing.assert_allclose(blocks[0], expected, atol=1e-12)


def test_even_block_rotation_angle_identity():
    # sin(beta) = sin(2 theta) cos(2 Phi) across a (theta, Phi) grid
    for theta in np.linspace(0.1, 0.7, 7):
        for phi in np.linspace(-1.0, 1.0, 9):
            p = SdfParams(1.0, 0.1, np.sqrt(np.pi * 0.01 / theta), phi)
            assert abs(p.theta - theta) < 1e-12
            b = echoed_b(p)
            d, t = even_block_entries(theta, phi)
            blk = b[np.ix_([0, 3], [0, 3])]
            np.testing.assert_allclose(
                blk, np.array([[d, -1j * t], [-1j * t, np.conj(d)]]), atol=1e-12
            )
            assert abs(abs(d) ** 2 + t**2 - 1.0) < 1e-12
            beta = np.arcsin(t)
            assert abs(np.sin(beta) - np.sin(2 * theta) * np.cos(2 * phi)) < 1e-10


def test_virtual_z_angle_formula():
    lam = virtual_z_angle()
    expected = 0.5 * np.angle(
        np.cos(3 * np.pi / 16) ** 2
        - np.sin(3 * np.pi / 16) ** 2 * np.exp(-4j * B_PHI)
    )
    assert lam == expected


def test_verify_b_identity():
    rep = verify_b()
    assert rep.passed
    assert rep.distance < 1e-10
    assert rep.even_block_residual < 1e-10
    assert rep.odd_block_residual < 1e-10
    assert rep.parity_commutator < 1e-12
    assert rep.off_parity_leakage < 1e-14
    assert rep.phi_form_difference < 1e-15
    assert abs(rep.theta - B_THETA) < 1e-14


def test_verify_b_detuning_perturbation():
    distances = [verify_b(detuning_scale=1 + e).distance for e in (1e-4, 1e-3, 1e-2)]
    assert all(d > 1e-6 for d in distances[1:])
    assert distances[0] < distances[1] < distances[2]
    assert not verify_b(detuning_scale=1.001).passed


def test_u_b_block_structure():
    ub = u_b()
    even = ub[np.ix_([0, 3], [0, 3])]
    odd = ub[np.ix_([1, 2], [1, 2])]
    rot = lambda a: np.cos(a) * np.eye(2) - 1j * np.sin(a) * X
    np.testing.assert_allclose(even, rot(np.pi / 8), atol=1e-12)
    np.testing.assert_allclose(odd, rot(3 * np.pi / 8), atol=1e-12)


def test_phase_aligned_distance():
    u = u_b()
    assert phase_aligned_distance(u, np.exp(0.3j) * u) < 1e-14


def test_decompose_counts():
    assert decompose_su4_counts("b") == 2
    assert decompose_su4_counts("ms") == 3
    assert decompose_su4_counts("cz") == 3
    with pytest.raises(ValueError):
        decompose_su4_counts("iswap")
