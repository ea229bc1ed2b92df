#!/usr/bin/env python3
"""Benchmark the hot kernels: numba @njit vs the pure-numpy fallback.

The backend is fixed at import time by TICOMPRESS_BACKEND, so --compare
re-runs this script in two subprocesses (one per backend) and prints both
columns.

Usage:
    python benchmarks/bench_kernels.py [--qubits N] [--repeats R] [--compare]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_statevector(n: int, repeats: int) -> float:
    from ticompress._backend import apply_two_qubit_gate

    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(a)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    pairs = [(i, (i + 1) % n) for i in range(n)]
    apply_two_qubit_gate(psi, q, n, 0, 1)  # warm up JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        for a_, b_ in pairs:
            psi = apply_two_qubit_gate(psi, q, n, a_, b_)
    dt = time.perf_counter() - t0
    return dt / (repeats * len(pairs))


def bench_propagation(repeats: int) -> float:
    from ticompress.hamiltonian import heisenberg_field
    from ticompress.lattice import builtin_lattice
    from ticompress.pauli import PauliString
    from ticompress.pauliprop import PropagationConfig, propagate
    from ticompress.trotter import heisenberg_partition, trotter_circuit

    lat = builtin_lattice("chain(10)")
    circ = trotter_circuit(heisenberg_partition(heisenberg_field(lat)), 0.4, order=2, steps=2)
    gates = sum(1 for _ in circ.instances(None))
    obs = PauliString.single(10, 0, "X")
    propagate(obs, circ, PropagationConfig(kappa=1e-5))  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        propagate(obs, circ, PropagationConfig(kappa=1e-5))
    dt = time.perf_counter() - t0
    return dt / (repeats * gates)


def run_current(n: int, repeats: int) -> dict:
    from ticompress._backend import USE_NUMBA

    return dict(
        backend="numba" if USE_NUMBA else "numpy",
        statevector_us=bench_statevector(n, repeats) * 1e6,
        propagation_us=bench_propagation(max(2, repeats // 4)) * 1e6,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--qubits", type=int, default=12)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--compare", action="store_true", help="run both backends")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    if not args.compare:
        res = run_current(args.qubits, args.repeats)
        if args.json:
            print(json.dumps(res))
        else:
            print(f"backend: {res['backend']}")
            print(f"statevector 2q gate ({args.qubits} qubits): {res['statevector_us']:9.2f} us/gate")
            print(f"propagation step (chain(10), kappa=1e-5): {res['propagation_us']:9.2f} us/gate")
        return 0

    rows = []
    for backend in ("numpy", "numba"):
        env = dict(os.environ, TICOMPRESS_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--qubits", str(args.qubits),
             "--repeats", str(args.repeats), "--json"],
            env=env, capture_output=True, text=True, check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    print(f"{'kernel':<42}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for key, label in (
        ("statevector_us", f"statevector 2q gate, {args.qubits} qubits [us]"),
        ("propagation_us", "propagation step, chain(10) kappa=1e-5 [us]"),
    ):
        a, b = rows[0][key], rows[1][key]
        print(f"{label:<42}{a:>12.2f}{b:>12.2f}{a / b:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
