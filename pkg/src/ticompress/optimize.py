"""Cost functions and Riemannian gradient descent over the shared SU(4) gates.

The optimization variable is the tuple of per-layer 4x4 unitaries. Euclidean
gradients come from environment contraction (the partial trace of the rest
of the network against the target), get projected onto the traceless
skew-Hermitian tangent space, and steps follow the exponential retraction
V <- V exp(-eta D), which keeps every gate exactly unitary.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuit import (
    Ansatz,
    Layer,
    apply_batch,
    dense_matrix,
    gate_dense_left,
    gate_dense_right,
    haar_states,
)
from .hamiltonian import (
    Hamiltonian,
    exact_propagator,
    propagate_states,
    spectral_norm,
)
from .lattice import Lattice


# ---------------------------------------------------------------------------
# cost specification
# ---------------------------------------------------------------------------


@dataclass
class CostSpec:
    """What to optimize: kind in {'trace_norm', 'haar_sampled',
    'haar_analytic', 'ticc'}, the target Hamiltonian and time, and sampling
    parameters for the Monte-Carlo kind."""

    kind: str
    hamiltonian: Hamiltonian
    t: float
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("trace_norm", "haar_sampled", "haar_analytic", "ticc"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "haar_sampled" and self.samples < 1:
            raise ValueError("haar_sampled needs samples >= 1")
        if not np.isfinite(self.t):
            raise ValueError("t must be finite")


@dataclass
class OptimizationRun:
    initial: Ansatz
    final: Ansatz
    cost_trace: list = field(default_factory=list)  # (iteration, cost, grad_norm)
    converged: bool = False
    n_iters: int = 0
    wall_time: float = 0.0
    seed: int | None = None

    @property
    def final_cost(self) -> float:
        return self.cost_trace[-1][1] if self.cost_trace else float("nan")


# ---------------------------------------------------------------------------
# dense environment machinery
# ---------------------------------------------------------------------------


def _ptr_pair(x: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    """4x4 m with Tr(x . embed(V on a,b)) = Tr(m V): partial trace of x."""
    r = 1 << (n - 2)
    t = x.reshape((2,) * (2 * n))
    t = np.moveaxis(t, (a, b, n + a, n + b), (0, 1, 2, 3))
    t = t.reshape(4, 4, r, r)
    return np.einsum("pqrr->pq", t)


def _instances(ansatz: Ansatz, reduced: bool):
    anc = 0 if (ansatz.has_controls and reduced) else (1 if ansatz.has_controls else None)
    return list(ansatz.instances(anc))


def _circuit_matrix(ansatz: Ansatz, instances) -> np.ndarray:
    n = ansatz.n_sites
    w = np.eye(1 << n, dtype=complex)
    for gate, (a, b), _ in instances:
        w = gate_dense_left(w, gate, n, a, b)
    return w


def _trace_envs(ansatz: Ansatz, instances, target: np.ndarray):
    """z = Tr(target^dag W) and per-instance environments m_k with
    z = Tr(m_k V_k) for every k."""
    n = ansatz.n_sites
    w = _circuit_matrix(ansatz, instances)
    z = complex(np.sum(target.conj() * w))
    envs = []
    if instances:
        gk, (ak, bk), _ = instances[-1]
        x = gate_dense_left(w, gk.conj().T, n, ak, bk) @ target.conj().T
        for k in range(len(instances) - 1, -1, -1):
            gate, (a, b), layer_idx = instances[k]
            envs.append((layer_idx, _ptr_pair(x, n, a, b)))
            if k > 0:
                gp, (ap, bp), _ = instances[k - 1]
                x = gate_dense_left(x, gp.conj().T, n, ap, bp)
                x = gate_dense_right(x, gate, n, a, b)
    return z, envs


def _sampled_envs(ansatz: Ansatz, instances, states: np.ndarray, target_states: np.ndarray):
    """Per-sample overlaps z_s = <v_s|U^dag W|v_s> and per-instance
    environment stacks (s, 4, 4)."""
    n = ansatz.n_sites
    wv = np.array(states, dtype=complex)
    for gate, (a, b), _ in instances:
        wv = apply_batch_one(wv, gate, n, a, b)
    z = np.sum(target_states.conj() * wv, axis=0)
    envs = []
    if instances:
        gk, (ak, bk), _ = instances[-1]
        av = apply_batch_one(wv, gk.conj().T, n, ak, bk)
        bv = target_states
        r = 1 << (n - 2)
        m = states.shape[1]
        for k in range(len(instances) - 1, -1, -1):
            gate, (a, b), layer_idx = instances[k]
            at = np.moveaxis(av.reshape((2,) * n + (m,)), (a, b), (0, 1)).reshape(4, r, m)
            bt = np.moveaxis(bv.reshape((2,) * n + (m,)), (a, b), (0, 1)).reshape(4, r, m)
            env = np.einsum("prs,qrs->spq", at, bt.conj())
            envs.append((layer_idx, env))
            if k > 0:
                gp, (ap, bp), _ = instances[k - 1]
                av = apply_batch_one(av, gp.conj().T, n, ap, bp)
                bv = apply_batch_one(bv, gate.conj().T, n, a, b)
    return z, envs


def apply_batch_one(states, gate, n, a, b):
    from ._backend import apply_two_qubit_gate_batch

    return apply_two_qubit_gate_batch(states, gate, n, a, b)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


class _Objective:
    """Evaluates the scalar cost and per-layer Euclidean gradients."""

    def __init__(self, spec: CostSpec, ansatz: Ansatz):
        self.spec = spec
        h = spec.hamiltonian
        n = h.lattice.n_sites
        self.dim = 1 << n
        kind = spec.kind
        if kind == "ticc":
            if not ansatz.has_controls:
                raise ValueError("ticc cost needs at least one controlled layer")
            self.targets = {
                "full": exact_propagator(h, -spec.t),
                "reduced": exact_propagator(h, spec.t),
            }
        else:
            if ansatz.has_controls:
                raise ValueError("plain costs need an uncontrolled circuit; use 'ticc'")
            self.target = exact_propagator(h, spec.t)
        if kind == "haar_sampled":
            rng = np.random.default_rng([spec.seed, 0x5A3])
            self.states = haar_states(n, spec.samples, rng)
            self.target_states = propagate_states(h, spec.t, self.states)
        # gradient-norm tolerance is taken relative to this value
        self.scale = float(2 * self.dim if kind == "ticc" else (self.dim if kind == "trace_norm" else 1.0))

    def value(self, ansatz: Ansatz) -> float:
        kind = self.spec.kind
        if kind == "ticc":
            wf = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
            wr = _circuit_matrix(ansatz, _instances(ansatz, reduced=True))
            return float(
                -np.real(np.sum(self.targets["full"].conj() * wf))
                - np.real(np.sum(self.targets["reduced"].conj() * wr))
            )
        if kind == "trace_norm":
            w = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
            return float(-np.real(np.sum(self.target.conj() * w)))
        if kind == "haar_analytic":
            w = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
            z = complex(np.sum(self.target.conj() * w))
            d = self.dim
            return float(1.0 - (abs(z) ** 2 + d) / (d * (d + 1)))
        wv = np.array(self.states)
        n = ansatz.n_sites
        for gate, (a, b), _ in ansatz.instances(None):
            wv = apply_batch_one(wv, gate, n, a, b)
        z = np.sum(self.target_states.conj() * wv, axis=0)
        return float(1.0 - np.mean(np.abs(z) ** 2))

    def euclidean_grads(self, ansatz: Ansatz) -> tuple[float, list[np.ndarray]]:
        kind = self.spec.kind
        grads = [np.zeros((4, 4), dtype=complex) for _ in ansatz.layers]
        if kind == "ticc":
            value = 0.0
            for name, reduced in (("full", False), ("reduced", True)):
                inst = _instances(ansatz, reduced)
                z, envs = _trace_envs(ansatz, inst, self.targets[name])
                value += -z.real
                for layer_idx, m in envs:
                    grads[layer_idx] += -m.conj().T
            return value, grads
        if kind == "trace_norm":
            inst = _instances(ansatz, reduced=False)
            z, envs = _trace_envs(ansatz, inst, self.target)
            for layer_idx, m in envs:
                grads[layer_idx] += -m.conj().T
            return float(-z.real), grads
        if kind == "haar_analytic":
            inst = _instances(ansatz, reduced=False)
            z, envs = _trace_envs(ansatz, inst, self.target)
            d = self.dim
            for layer_idx, m in envs:
                grads[layer_idx] += -(2.0 / (d * (d + 1))) * z * m.conj().T
            return float(1.0 - (abs(z) ** 2 + d) / (d * (d + 1))), grads
        inst = _instances(ansatz, reduced=False)
        z, envs = _sampled_envs(ansatz, inst, self.states, self.target_states)
        s = self.spec.samples
        for layer_idx, env in envs:
            # sum_s z_s * env_s^dag
            contrib = np.einsum("s,sji->ij", z, env.conj())
            grads[layer_idx] += -(2.0 / s) * contrib
        return float(1.0 - np.mean(np.abs(z) ** 2)), grads


def _project_tangent(gate: np.ndarray, egrad: np.ndarray) -> np.ndarray:
    """Traceless skew-Hermitian algebra direction D with
    d/ds cost(V exp(sD')) = Re<D', D> for tangent directions D'."""
    m = gate.conj().T @ egrad
    sk = 0.5 * (m - m.conj().T)
    return sk - (np.trace(sk) / 4.0) * np.eye(4)


def expm_skew(s: np.ndarray) -> np.ndarray:
    """exp(S) for skew-Hermitian S, exactly unitary via eigh."""
    h = -1j * s
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# public cost functions
# ---------------------------------------------------------------------------


def cost_trace_norm(ansatz: Ansatz, target_u: np.ndarray) -> float:
    """-Re Tr(U^dag W); the minimum -2^N is attained exactly at W = U."""
    w = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
    if w.shape != target_u.shape:
        raise ValueError("dimension mismatch between circuit and target")
    return float(-np.real(np.sum(target_u.conj() * w)))


def haar_second_moment(z: complex, dim: int) -> float:
    """E_Haar |<v|A|v>|^2 for a unitary A with Tr A = z."""
    return (abs(z) ** 2 + dim) / (dim * (dim + 1))


def cost_haar_analytic(ansatz: Ansatz, target_u: np.ndarray) -> float:
    w = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
    z = complex(np.sum(target_u.conj() * w))
    return float(1.0 - haar_second_moment(z, w.shape[0]))


def cost_haar_sampled(
    ansatz: Ansatz, target_u: np.ndarray, samples: int, seed: int
) -> tuple[float, float]:
    """Monte-Carlo estimate of 1 - E|<v|U^dag W|v>|^2 with its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = ansatz.n_sites
    rng = np.random.default_rng([seed, 0x5A3])
    states = haar_states(n, samples, rng)
    wv = apply_batch(ansatz, states)
    uv = target_u @ states
    z = np.sum(uv.conj() * wv, axis=0)
    vals = 1.0 - np.abs(z) ** 2
    err = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return float(vals.mean()), err


def cost_ticc(ansatz: Ansatz, h: Hamiltonian, t: float) -> float:
    """Sum of the backward trace cost on the full circuit and the forward
    trace cost on the control-stripped circuit."""
    if not ansatz.has_controls:
        raise ValueError("ticc cost needs at least one controlled layer")
    wf = _circuit_matrix(ansatz, _instances(ansatz, reduced=False))
    wr = _circuit_matrix(ansatz, _instances(ansatz, reduced=True))
    return float(
        -np.real(np.sum(exact_propagator(h, -t).conj() * wf))
        - np.real(np.sum(exact_propagator(h, t).conj() * wr))
    )


def gradient(ansatz: Ansatz, spec: CostSpec) -> list[np.ndarray]:
    """Per-layer tangent-space gradients (traceless skew-Hermitian)."""
    obj = _Objective(spec, ansatz)
    _, egrads = obj.euclidean_grads(ansatz)
    return [_project_tangent(l.gate, g) for l, g in zip(ansatz.layers, egrads)]


# ---------------------------------------------------------------------------
# descent
# ---------------------------------------------------------------------------


@dataclass
class DescentConfig:
    max_iters: int = 5000
    grad_tol: float = 1e-9  # relative to the cost scale (2^N for trace kinds)
    init_step: float = 0.05
    shrink: float = 0.5
    grow: float = 1.3
    max_backtracks: int = 40
    armijo: float = 1e-4
    polish_iters: int = 200


def descend(initial: Ansatz, spec: CostSpec, config: DescentConfig | None = None) -> OptimizationRun:
    """Backtracking gradient descent with the exponential retraction.

    Accepted iterates never increase the cost; convergence is declared when
    the tangent-gradient norm falls below grad_tol * scale.
    """
    cfg = config or DescentConfig()
    obj = _Objective(spec, initial)
    tol = cfg.grad_tol * obj.scale
    t0 = time.perf_counter()
    current = Ansatz(initial.lattice, list(initial.layers), dict(initial.meta))
    cost, egrads = obj.euclidean_grads(current)
    if not np.isfinite(cost):
        raise FloatingPointError("non-finite cost at the initial point")
    directions = [_project_tangent(l.gate, g) for l, g in zip(current.layers, egrads)]
    gnorm = float(np.sqrt(sum(np.linalg.norm(d) ** 2 for d in directions)))
    trace = [(0, cost, gnorm)]
    eta = cfg.init_step
    eta_success = cfg.init_step
    converged = gnorm < tol
    iters = 0
    while not converged and iters < cfg.max_iters:
        iters += 1
        accepted = False
        for _ in range(cfg.max_backtracks):
            gates = [
                l.gate @ expm_skew(-eta * d)
                for l, d in zip(current.layers, directions)
            ]
            candidate = current.with_gates(gates)
            new_cost = obj.value(candidate)
            if not np.isfinite(new_cost):
                raise FloatingPointError(f"non-finite cost at iteration {iters}")
            if new_cost <= cost - cfg.armijo * eta * gnorm**2:
                accepted = True
                break
            eta *= cfg.shrink
        if not accepted:
            break  # cost hit float resolution; switch to the polish phase
        eta_success = eta
        current = candidate
        cost = new_cost
        _, egrads = obj.euclidean_grads(current)
        directions = [_project_tangent(l.gate, g) for l, g in zip(current.layers, egrads)]
        gnorm = float(np.sqrt(sum(np.linalg.norm(d) ** 2 for d in directions)))
        trace.append((iters, cost, gnorm))
        eta *= cfg.grow
        converged = gnorm < tol
    # polish: cost deltas are below float resolution here, but the analytic
    # gradient is still accurate, so drive its norm down with small steps
    # accepted on monotone gradient-norm decrease
    polish = 0
    eta = eta_success
    cost_slack = 8 * np.finfo(float).eps * max(1.0, abs(cost))
    while not converged and polish < cfg.polish_iters and eta > 1e-12:
        polish += 1
        gates = [l.gate @ expm_skew(-eta * d) for l, d in zip(current.layers, directions)]
        candidate = current.with_gates(gates)
        new_cost, egrads = obj.euclidean_grads(candidate)
        new_dirs = [_project_tangent(l.gate, g) for l, g in zip(candidate.layers, egrads)]
        new_gnorm = float(np.sqrt(sum(np.linalg.norm(d) ** 2 for d in new_dirs)))
        if new_gnorm < gnorm * (1 - 1e-3) and new_cost <= cost + cost_slack:
            current, cost, directions, gnorm = candidate, new_cost, new_dirs, new_gnorm
            trace.append((iters + polish, cost, gnorm))
            converged = gnorm < tol
        else:
            eta *= cfg.shrink
    return OptimizationRun(
        initial=initial,
        final=current,
        cost_trace=trace,
        converged=bool(converged),
        n_iters=iters,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# initialization budget (convergence certificate)
# ---------------------------------------------------------------------------


@dataclass
class InitBudgetReport:
    per_layer_norms: list[float]
    budget: float
    all_within_budget: bool
    log_margins: list[float]  # pi - |largest eigenphase| per gate


def gate_generator_norm(gate: np.ndarray, dt: float, margin: float = 1e-6) -> tuple[float, float]:
    """||log(V)/dt|| through the principal branch, plus the eigenphase margin
    to the branch cut. Raises when the spectrum touches -1."""
    t, _ = scipy.linalg.schur(gate, output="complex")
    phases = np.angle(np.diag(t))
    top = float(np.max(np.abs(phases)))
    if top > np.pi - margin:
        raise ValueError("gate eigenvalue too close to -1; principal log undefined")
    return top / abs(dt), float(np.pi - top)


def init_budget_check(ansatz: Ansatz, h: Hamiltonian, dt: float) -> InitBudgetReport:
    """Certify an initialization: every per-gate generator norm
    ||i log(V_j)/dt|| must stay within 2||H||/(N L). Initializations inside
    this budget start in the provably convex basin for small enough dt."""
    n = h.lattice.n_sites
    depth = len(ansatz.layers)
    budget = 2.0 * spectral_norm(h) / (n * depth)
    norms = []
    margins = []
    for layer in ansatz.layers:
        nv, margin = gate_generator_norm(layer.gate, dt)
        norms.append(nv)
        margins.append(margin)
    ok = all(v <= budget for v in norms)
    return InitBudgetReport(norms, budget, ok, margins)


# ---------------------------------------------------------------------------
# basin-of-attraction sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepEntry:
    dt: float
    n_clusters: int
    cluster_sizes: list[int]
    cluster_costs: list[float]
    n_converged: int
    best_cost: float


@dataclass
class SweepReport:
    entries: list[SweepEntry]
    seed: int
    norm_cap: float
    searches_per_dt: int


def _random_init(lat: Lattice, depth: int, norm_cap: float, dt: float, rng) -> Ansatz:
    """Per-layer traceless Hermitian generators, globally rescaled so the
    summed gate-norm bound equals norm_cap."""
    gens = []
    for _ in range(depth):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        hmat = 0.5 * (a + a.conj().T)
        hmat -= (np.trace(hmat) / 4.0) * np.eye(4)
        gens.append(hmat)
    classes = [k % lat.n_classes for k in range(depth)]
    bound = sum(
        len(lat.classes[ci].bonds) * np.abs(np.linalg.eigvalsh(g)).max()
        for ci, g in zip(classes, gens)
    )
    scale = norm_cap / bound
    layers = []
    for ci, g in zip(classes, gens):
        w, v = np.linalg.eigh(scale * g)
        gate = (v * np.exp(-1j * dt * w)) @ v.conj().T
        layers.append(Layer(gate, ci))
    return Ansatz(lat, layers)


def _phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    d = a.shape[0]
    inner = abs(np.trace(a.conj().T @ b))
    return float(np.sqrt(max(0.0, 2.0 * d - 2.0 * inner)))


def cluster_unitaries(ws: list[np.ndarray], threshold: float = 1e-5):
    """Greedy clustering by global-phase-aligned Frobenius distance."""
    reps: list[np.ndarray] = []
    assignment = []
    for w in ws:
        hit = None
        for k, rep in enumerate(reps):
            if _phase_aligned_distance(w, rep) < threshold:
                hit = k
                break
        if hit is None:
            reps.append(w)
            hit = len(reps) - 1
        assignment.append(hit)
    return reps, assignment


def _sweep_search(args):
    (lat, dt, dt_idx, search_idx, norm_cap, seed, cfg, fixed_h) = args
    from .hamiltonian import random_two_local_ti

    h = fixed_h if fixed_h is not None else random_two_local_ti(
        lat, seed=int(np.random.default_rng([seed, 0x7, dt_idx]).integers(2**31)),
    )
    rng = np.random.default_rng([seed, dt_idx, search_idx])
    init = _random_init(lat, lat.n_classes, norm_cap, dt, rng)
    spec = CostSpec("trace_norm", h, dt)
    run = descend(init, spec, cfg)
    return dt_idx, search_idx, dense_matrix(run.final), run.final_cost, run.converged


def tcrit_sweep(
    lat: Lattice,
    dt_grid,
    searches_per_dt: int,
    norm_cap: float = 1.0,
    seed: int = 0,
    config: DescentConfig | None = None,
    fixed_h: Hamiltonian | None = None,
    workers: int = 1,
    cluster_threshold: float = 1e-5,
) -> SweepReport:
    """Random-restart convergence sweep over time steps.

    Per dt: a fresh random TI target with unit norm (unless fixed_h), random
    admissible initializations, descent, then clustering of the endpoint
    unitaries. A single cluster across all searches signals one basin.
    """
    if searches_per_dt < 2:
        raise ValueError("need at least 2 searches per dt")
    cfg = config or DescentConfig()
    jobs = [
        (lat, float(dt), di, si, norm_cap, seed, cfg, fixed_h)
        for di, dt in enumerate(dt_grid)
        for si in range(searches_per_dt)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_search, jobs, chunksize=4))
    else:
        results = [_sweep_search(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    entries = []
    for di, dt in enumerate(dt_grid):
        rows = [r for r in results if r[0] == di]
        ws = [r[2] for r in rows]
        costs = [r[3] for r in rows]
        reps, assignment = cluster_unitaries(ws, cluster_threshold)
        sizes = [assignment.count(k) for k in range(len(reps))]
        cluster_costs = [
            min(c for c, a in zip(costs, assignment) if a == k) for k in range(len(reps))
        ]
        entries.append(
            SweepEntry(
                dt=float(dt),
                n_clusters=len(reps),
                cluster_sizes=sizes,
                cluster_costs=cluster_costs,
                n_converged=sum(1 for r in rows if r[4]),
                best_cost=min(costs),
            )
        )
    return SweepReport(entries, seed, norm_cap, searches_per_dt)


# ---------------------------------------------------------------------------
# bootstrapping, infidelity, transfer
# ---------------------------------------------------------------------------


def bootstrap(
    block_run: OptimizationRun,
    t_total: float,
    reoptimize: bool,
    spec: CostSpec | None = None,
    config: DescentConfig | None = None,
) -> OptimizationRun:
    """Repeat an optimized small-time block to reach t_total; optionally
    reoptimize every layer of the repeated circuit from that starting point."""
    from .circuit import repeat_blocks

    block = block_run.final
    dt = block.meta.get("dt")
    if dt is None:
        raise ValueError("block has no meta['dt'] to derive the repetition count")
    ratio = t_total / dt
    times = int(round(ratio))
    if times < 1 or abs(ratio - times) > 1e-9:
        raise ValueError(f"t_total/dt = {ratio} is not a positive integer")
    repeated = repeat_blocks(block, times)
    if not reoptimize:
        return OptimizationRun(
            initial=repeated, final=repeated, cost_trace=[], converged=block_run.converged,
            n_iters=0, wall_time=0.0,
        )
    if spec is None:
        raise ValueError("reoptimize=True needs a cost spec")
    return descend(repeated, spec, config)


def evolution_infidelity(
    u, h: Hamiltonian, t: float, samples: int = 2000, seed: int = 0
) -> tuple[float, float]:
    """Haar-sampled 1 - E|<v| U_t^dag U |v>|^2 against the exact propagator.

    `u` may be an Ansatz (controlled circuits are scored on the ancilla=0
    branch) or a dense unitary.
    """
    n = h.lattice.n_sites
    rng = np.random.default_rng([seed, 0xEF1D])
    states = haar_states(n, samples, rng)
    exact = propagate_states(h, t, states)
    if isinstance(u, Ansatz):
        approx = apply_batch(u, states, ancilla=0 if u.has_controls else None)
    else:
        approx = u @ states
    z = np.sum(exact.conj() * approx, axis=0)
    vals = 1.0 - np.abs(z) ** 2
    err = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return float(vals.mean()), err


def transfer(block: Ansatz, target: Lattice) -> Ansatz:
    """Reuse the shared gates class-by-class on a larger lattice."""
    if target.n_classes != block.lattice.n_classes:
        raise ValueError(
            f"class count mismatch: {block.lattice.n_classes} vs {target.n_classes}"
        )
    for layer in block.layers:
        if layer.matching_index is not None and layer.matching_index >= len(
            target.classes[layer.class_index].matchings
        ):
            raise ValueError("target lattice lacks a matching used by the block")
    meta = dict(block.meta)
    meta["transferred_from"] = block.lattice.name
    return Ansatz(target, list(block.layers), meta)
