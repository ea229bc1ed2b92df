import numpy as np
import pytest

from ticompress.circuit import Ansatz, Layer, dense_matrix, su_normalize
from ticompress.hamiltonian import (
    exact_propagator,
    heisenberg_field,
    spectral_norm,
)
from ticompress.lattice import builtin_lattice
from ticompress.optimize import (
    CostSpec,
    DescentConfig,
    bootstrap,
    cluster_unitaries,
    cost_haar_analytic,
    cost_haar_sampled,
    cost_ticc,
    cost_trace_norm,
    descend,
    evolution_infidelity,
    expm_skew,
    gradient,
    init_budget_check,
    tcrit_sweep,
    transfer,
)
from ticompress.trotter import heisenberg_partition, trotter_init_point


def random_su4(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, r = np.linalg.qr(a)
    return su_normalize(q * (np.diag(r) / np.abs(np.diag(r))))


def random_ansatz(lat, class_seq, rng, flags=None):
    flags = flags or [False] * len(class_seq)
    return Ansatz(lat, [Layer(random_su4(rng), c, controlled=f) for c, f in zip(class_seq, flags)])


def random_tangent(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    d = 0.5 * (a - a.conj().T)
    return d - (np.trace(d) / 4.0) * np.eye(4)


def spec_value(spec, ansatz):
    if spec.kind == "trace_norm":
        return cost_trace_norm(ansatz, exact_propagator(spec.hamiltonian, spec.t))
    if spec.kind == "haar_analytic":
        return cost_haar_analytic(ansatz, exact_propagator(spec.hamiltonian, spec.t))
    if spec.kind == "ticc":
        return cost_ticc(ansatz, spec.hamiltonian, spec.t)
    return cost_haar_sampled(
        ansatz, exact_propagator(spec.hamiltonian, spec.t), spec.samples, spec.seed
    )[0]


def directional_fd(spec, ansatz, directions, eps=1e-5):
    def shifted(s):
        gates = [
            l.gate @ expm_skew(s * d) for l, d in zip(ansatz.layers, directions)
        ]
        return ansatz.with_gates(gates)

    return (spec_value(spec, shifted(eps)) - spec_value(spec, shifted(-eps))) / (2 * eps)


@pytest.mark.parametrize(
    "kind,n_layers,flags",
    [
        ("trace_norm", 2, None),
        ("haar_analytic", 2, None),
        ("ticc", 3, [False, False, True]),
    ],
)
def test_gradient_matches_finite_differences(kind, n_layers, flags):
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    rng = np.random.default_rng(17)
    for trial in range(20):
        ansatz = random_ansatz(lat, [k % 2 for k in range(n_layers)], rng, flags)
        spec = CostSpec(kind, h, t=0.2)
        grads = gradient(ansatz, spec)
        dirs = [random_tangent(rng) for _ in range(n_layers)]
        analytic = sum(
            np.real(np.sum(np.conj(d) * g)) for d, g in zip(dirs, grads)
        )
        fd = directional_fd(spec, ansatz, dirs)
        assert abs(analytic - fd) / max(abs(fd), 1e-12) < 1e-6


def test_gradient_matches_fd_sampled():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    rng = np.random.default_rng(23)
    for trial in range(5):
        ansatz = random_ansatz(lat, [0, 1], rng)
        spec = CostSpec("haar_sampled", h, t=0.2, samples=16, seed=3)
        grads = gradient(ansatz, spec)
        dirs = [random_tangent(rng) for _ in range(2)]
        analytic = sum(np.real(np.sum(np.conj(d) * g)) for d, g in zip(dirs, grads))
        fd = directional_fd(spec, ansatz, dirs)
        assert abs(analytic - fd) / max(abs(fd), 1e-12) < 1e-6


def test_trace_cost_extremes():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    u = exact_propagator(h, 0.1)
    # a circuit that exactly equals the target is not constructible here, so
    # check the bound on the identity circuit and the dense formula instead
    rng = np.random.default_rng(1)
    ansatz = random_ansatz(lat, [0, 1], rng)
    w = dense_matrix(ansatz)
    expected = -np.real(np.trace(u.conj().T @ w))
    assert abs(cost_trace_norm(ansatz, u) - expected) < 1e-10
    assert cost_trace_norm(ansatz, u) >= -16.0 - 1e-9
    assert abs(cost_trace_norm(ansatz, w) + 16.0) < 1e-9  # W = target -> -2^N
    assert abs(cost_trace_norm(ansatz, -w) - 16.0) < 1e-9


def test_trace_cost_small_system_direct():
    lat = builtin_lattice("chain(2)")
    rng = np.random.default_rng(2)
    g = random_su4(rng)
    ansatz = Ansatz(lat, [Layer(g, 0)])
    u = random_su4(rng)
    assert abs(cost_trace_norm(ansatz, u) + np.real(np.trace(u.conj().T @ g))) < 1e-12


def test_haar_sampled_agrees_with_analytic_moment():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    u = exact_propagator(h, 0.3)
    rng = np.random.default_rng(3)
    ansatz = random_ansatz(lat, [0, 1], rng)
    est, err = cost_haar_sampled(ansatz, u, samples=10000, seed=9)
    exact = cost_haar_analytic(ansatz, u)
    assert err > 0
    assert abs(est - exact) < 3 * err


def test_haar_sampled_exact_target_and_determinism():
    lat = builtin_lattice("chain(4)")
    rng = np.random.default_rng(4)
    ansatz = random_ansatz(lat, [0, 1], rng)
    w = dense_matrix(ansatz)
    est, _ = cost_haar_sampled(ansatz, w, samples=50, seed=0)
    assert abs(est) < 1e-12
    a1 = cost_haar_sampled(ansatz, np.eye(16, dtype=complex), samples=1, seed=7)
    a2 = cost_haar_sampled(ansatz, np.eye(16, dtype=complex), samples=1, seed=7)
    assert a1 == a2


def test_ticc_cost_structure():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    t = 0.15
    rng = np.random.default_rng(5)
    # controls = identity, uncontrolled part arbitrary
    layers = [
        Layer(random_su4(rng), 0),
        Layer(random_su4(rng), 1),
        Layer(np.eye(4, dtype=complex), 0, controlled=True),
    ]
    ansatz = Ansatz(lat, layers)
    w = dense_matrix(ansatz, ancilla=0)
    um = exact_propagator(h, -t)
    up = exact_propagator(h, t)
    expected = -np.real(np.trace(um.conj().T @ w)) - np.real(np.trace(up.conj().T @ w))
    assert abs(cost_ticc(ansatz, h, t) - expected) < 1e-9
    # the two-branch dense evaluation matches a hand-assembled version
    rng2 = np.random.default_rng(6)
    layers2 = [
        Layer(random_su4(rng2), 0),
        Layer(random_su4(rng2), 1, controlled=True),
    ]
    a2 = Ansatz(lat, layers2)
    w_full = dense_matrix(a2, ancilla=1)
    w_red = dense_matrix(a2, ancilla=0)
    expected2 = -np.real(np.trace(um.conj().T @ w_full)) - np.real(
        np.trace(up.conj().T @ w_red)
    )
    assert abs(cost_ticc(a2, h, t) - expected2) < 1e-9
    assert cost_ticc(a2, h, t) >= -2 * 16 - 1e-9
    with pytest.raises(ValueError):
        cost_ticc(random_ansatz(lat, [0, 1], rng2), h, t)


def test_gradient_zero_for_layer_without_bonds():
    from ticompress.lattice import Lattice, PermutationClass

    c0 = PermutationClass.from_bond_lists([[(0, 1), (2, 3)]])
    empty = PermutationClass.from_bond_lists([])
    lat = Lattice("with-empty-class", 4, (c0, empty))
    h = heisenberg_field(builtin_lattice("chain(4)"))
    h = type(h)(h.pauli, lat, h.name)
    rng = np.random.default_rng(77)
    ansatz = Ansatz(lat, [Layer(random_su4(rng), 0), Layer(random_su4(rng), 1)])
    grads = gradient(ansatz, CostSpec("trace_norm", h, 0.1))
    assert np.linalg.norm(grads[0]) > 1e-3
    assert np.linalg.norm(grads[1]) == 0.0


def test_gradient_zero_at_exact_optimum():
    # single-bond lattice: one SU(4) layer can match the target exactly
    lat = builtin_lattice("chain(2)")
    h = heisenberg_field(lat)
    t = 0.4
    u = exact_propagator(h, t)
    ansatz = Ansatz(lat, [Layer(su_normalize(u), 0)])
    spec = CostSpec("trace_norm", h, t)
    g = gradient(ansatz, spec)[0]
    assert np.linalg.norm(g) < 1e-8


def test_descend_already_converged():
    lat = builtin_lattice("chain(2)")
    h = heisenberg_field(lat)
    u = exact_propagator(h, 0.4)
    ansatz = Ansatz(lat, [Layer(su_normalize(u), 0)])
    run = descend(ansatz, CostSpec("trace_norm", h, 0.4))
    assert run.converged
    assert run.n_iters == 0


def test_descend_chain4_trotter_init_beats_restarts():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    init = trotter_init_point(part, dt, depth_budget=2)
    spec = CostSpec("trace_norm", h, dt)
    run = descend(init, spec)
    assert run.converged
    costs = [c for _, c, _ in run.cost_trace]
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))
    # multi-restart oracle: 20 random starts should not beat it meaningfully
    rng = np.random.default_rng(31)
    best = min(
        descend(random_ansatz(lat, [0, 1], rng), spec, DescentConfig(max_iters=3000)).final_cost
        for _ in range(20)
    )
    assert run.final_cost <= best + 1e-6


def test_local_convexity_witness():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    run = descend(trotter_init_point(part, dt, 2), CostSpec("trace_norm", h, dt))
    u = exact_propagator(h, dt)
    rng = np.random.default_rng(41)
    grid = np.linspace(-0.05, 0.05, 5)
    for _ in range(50):
        dirs = [random_tangent(rng) for _ in run.final.layers]
        norm = np.sqrt(sum(np.linalg.norm(d) ** 2 for d in dirs))
        dirs = [d / norm for d in dirs]
        vals = []
        for s in grid:
            gates = [l.gate @ expm_skew(s * d) for l, d in zip(run.final.layers, dirs)]
            vals.append(cost_trace_norm(run.final.with_gates(gates), u))
        second = np.diff(vals, 2)
        assert (second >= -1e-8).all()


def test_init_budget_check_accepts_and_boundary():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    init = trotter_init_point(part, dt, depth_budget=2)
    rep = init_budget_check(init, h, dt)
    assert rep.all_within_budget
    assert len(rep.per_layer_norms) == 2
    budget = 2 * spectral_norm(h) / (4 * 2)
    assert abs(rep.budget - budget) < 1e-12
    # exact boundary: gate exp(-i theta XX) has generator norm theta/dt
    xx = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]).astype(complex)

    def with_theta(theta):
        g = np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * xx
        return Ansatz(lat, [Layer(g, 0), init.layers[1]])

    theta_star = budget * dt
    assert init_budget_check(with_theta(theta_star * (1 - 1e-8)), h, dt).all_within_budget
    assert not init_budget_check(with_theta(theta_star * (1 + 1e-8)), h, dt).all_within_budget


def test_init_budget_scale_consistency():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.1
    rng = np.random.default_rng(51)
    gens = [random_tangent(rng) for _ in range(2)]
    norms = {}
    for c in (1.0, 0.5):
        layers = []
        for k, g in enumerate(gens):
            hmat = 1j * g  # Hermitian
            w, v = np.linalg.eigh(hmat)
            layers.append(Layer((v * np.exp(-1j * dt * c * w)) @ v.conj().T, k))
        rep = init_budget_check(Ansatz(lat, layers), h, dt)
        norms[c] = rep.per_layer_norms
    for a, b in zip(norms[1.0], norms[0.5]):
        assert abs(a - 2 * b) < 1e-9 * max(1.0, a)


def test_init_budget_rejects_log_at_minus_one():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    gate = np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex)  # det 1, eigenvalue -1
    ansatz = Ansatz(lat, [Layer(gate, 0)])
    with pytest.raises(ValueError):
        init_budget_check(ansatz, h, 0.1)


def test_cluster_unitaries():
    rng = np.random.default_rng(61)
    u = random_su4(rng)
    v = random_su4(rng)
    tweak = u @ expm_skew(1e-8 * random_tangent(rng))
    reps, assign = cluster_unitaries([u, np.exp(1j * 0.7) * u, tweak, v], threshold=1e-5)
    assert len(reps) == 2
    assert assign == [0, 0, 0, 1]


def test_tcrit_sweep_small_dt_single_cluster():
    lat = builtin_lattice("chain(4)")
    rep = tcrit_sweep(
        lat, [0.05, 0.2], searches_per_dt=4, norm_cap=1.0, seed=7,
        config=DescentConfig(max_iters=4000),
    )
    assert len(rep.entries) == 2
    for e in rep.entries:
        assert e.n_clusters == 1
        assert sum(e.cluster_sizes) == 4


def test_tcrit_sweep_three_class_n6():
    # three permutation classes on six sites (prism graph): the small-dt
    # regime still collapses to a single basin
    from ticompress.lattice import Lattice, PermutationClass, validate

    c1 = PermutationClass.from_bond_lists([[(0, 1), (2, 3), (4, 5)]])
    c2 = PermutationClass.from_bond_lists([[(1, 2), (3, 4), (5, 0)]])
    c3 = PermutationClass.from_bond_lists([[(0, 3), (1, 4), (2, 5)]])
    lat = Lattice("prism6", 6, (c1, c2, c3))
    assert validate(lat).valid
    rep = tcrit_sweep(lat, [0.1], searches_per_dt=6, norm_cap=1.0, seed=1)
    assert rep.entries[0].n_clusters == 1


def test_tcrit_sweep_determinism():
    lat = builtin_lattice("chain(4)")
    kw = dict(searches_per_dt=2, norm_cap=1.0, seed=3, config=DescentConfig(max_iters=500))
    r1 = tcrit_sweep(lat, [0.1], **kw)
    r2 = tcrit_sweep(lat, [0.1], **kw)
    assert r1.entries[0].best_cost == r2.entries[0].best_cost
    assert r1.entries[0].n_clusters == r2.entries[0].n_clusters


def test_descend_with_sampled_cost():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    init = trotter_init_point(part, dt, depth_budget=2)
    spec = CostSpec("haar_sampled", h, dt, samples=64, seed=4)
    run = descend(init, spec, DescentConfig(max_iters=600, grad_tol=1e-7))
    assert run.final_cost < run.cost_trace[0][1]
    # the sampled optimum generalizes: true infidelity drops too
    before, _ = evolution_infidelity(init, h, dt, samples=3000, seed=9)
    after, _ = evolution_infidelity(run.final, h, dt, samples=3000, seed=9)
    assert after < before


def test_ticc_descend_improves_both_branches():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    init = trotter_init_point(part, dt, depth_budget=4, control_layers=2)
    run = descend(init, CostSpec("ticc", h, dt), DescentConfig(max_iters=1200))
    assert run.final_cost < run.cost_trace[0][1] - 2.0
    assert run.final_cost > -2 * 16 - 1e-9  # bounded below by -2^{N+1}
    fwd, _ = evolution_infidelity(run.final, h, dt, samples=2000, seed=0)
    assert fwd < 5e-3  # ancilla=0 branch tracks the forward evolution
    bwd = cost_ticc(run.final, h, dt)
    assert abs(bwd - run.final_cost) < 1e-9


def test_bootstrap_repeat_and_reoptimize():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    dt = 0.05
    part = heisenberg_partition(h)
    spec = CostSpec("trace_norm", h, dt)
    block = descend(trotter_init_point(part, dt, 2), spec)
    boots = bootstrap(block, 4 * dt, reoptimize=False)
    assert boots.final.depth == 8
    with pytest.raises(ValueError):
        bootstrap(block, 2.5 * dt, reoptimize=False)
    re_spec = CostSpec("trace_norm", h, 4 * dt)
    reopt = bootstrap(block, 4 * dt, reoptimize=True, spec=re_spec,
                      config=DescentConfig(max_iters=300))
    assert reopt.final_cost <= cost_trace_norm(boots.final, exact_propagator(h, 4 * dt)) + 1e-12


def test_evolution_infidelity_exact_and_trotter_scaling():
    lat = builtin_lattice("chain(4)")
    h = heisenberg_field(lat)
    u = exact_propagator(h, 0.3)
    val, err = evolution_infidelity(u, h, 0.3, samples=200, seed=5)
    assert abs(val) < 1e-12
    from ticompress.trotter import heisenberg_partition, trotter_circuit

    part = heisenberg_partition(h)
    vals = []
    for t in (0.2, 0.4):
        circ = trotter_circuit(part, t, order=1, steps=1)
        v, _ = evolution_infidelity(circ, h, t, samples=3000, seed=6)
        vals.append(v)
    slope = np.log(vals[1] / vals[0]) / np.log(2.0)
    # infidelity ~ t^4 for first-order Trotter amplitude error t^2
    assert 4 - 1.5 < slope < 4 + 1.5
    v1 = evolution_infidelity(circ, h, 0.4, samples=100, seed=11)
    v2 = evolution_infidelity(circ, h, 0.4, samples=100, seed=11)
    assert v1 == v2


def test_transfer_structure_and_infidelity_growth():
    lat4 = builtin_lattice("chain(4)")
    lat8 = builtin_lattice("chain(8)")
    h4 = heisenberg_field(lat4)
    h8 = heisenberg_field(lat8)
    t = 0.1
    part = heisenberg_partition(h4)
    run = descend(trotter_init_point(part, t, 2), CostSpec("trace_norm", h4, t))
    moved = transfer(run.final, lat8)
    assert moved.lattice.n_sites == 8
    src, _ = evolution_infidelity(run.final, h4, t, samples=4000, seed=2)
    dst, _ = evolution_infidelity(moved, h8, t, samples=4000, seed=2)
    assert dst <= 3 * max(src, 1e-14)
    # identity block transfers to identity
    ident = Ansatz(lat4, [Layer(np.eye(4, dtype=complex), 0)])
    np.testing.assert_allclose(dense_matrix(transfer(ident, lat8)), np.eye(256), atol=1e-12)
    with pytest.raises(ValueError):
        transfer(run.final, builtin_lattice("kagome12"))
