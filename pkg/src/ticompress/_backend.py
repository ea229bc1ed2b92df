"""Hot-loop kernels: numba-jitted versions with pure-numpy fallbacks.

Set ``TICOMPRESS_BACKEND=numpy`` to force the numpy path (e.g. for
benchmarking or on platforms without a working numba). Default is numba
whenever it imports.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


_requested = os.environ.get("TICOMPRESS_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"TICOMPRESS_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )
if _requested == "numba" and not _numba_available():
    raise RuntimeError("TICOMPRESS_BACKEND=numba but numba is not importable")

USE_NUMBA = _requested != "numpy" and _numba_available()


# ---------------------------------------------------------------------------
# two-qubit gate application on a statevector
#
# Convention: qubit 0 is the most significant bit of the amplitude index.
# The 4x4 gate acts with qubit a on its first tensor factor, i.e. the gate
# basis index is 2*bit(a) + bit(b).
# ---------------------------------------------------------------------------


def _apply_2q_numpy(state: np.ndarray, gate: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    psi = state.reshape((2,) * n)
    psi = np.moveaxis(psi, (a, b), (0, 1))
    shp = psi.shape
    out = (gate @ psi.reshape(4, -1)).reshape(shp)
    return np.moveaxis(out, (0, 1), (a, b)).reshape(-1)


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _apply_2q_kernel(state, gate, pa, pb):
        # pa, pb: bit positions (from LSB) of the two target qubits, pa != pb
        ta = np.uint64(1) << np.uint64(pa)
        tb = np.uint64(1) << np.uint64(pb)
        p1 = max(pa, pb)
        p2 = min(pa, pb)
        k1 = np.uint64(1) << np.uint64(p1)
        k2 = np.uint64(1) << np.uint64(p2)
        nstates = state.shape[0] >> 2
        for g in range(nstates):
            i = np.uint64(g)
            i = ((i >> np.uint64(p2)) << np.uint64(p2 + 1)) | (i & (k2 - np.uint64(1)))
            i = ((i >> np.uint64(p1)) << np.uint64(p1 + 1)) | (i & (k1 - np.uint64(1)))
            i0 = i
            i1 = i | tb
            i2 = i | ta
            i3 = i | ta | tb
            s0 = state[i0]
            s1 = state[i1]
            s2 = state[i2]
            s3 = state[i3]
            state[i0] = gate[0, 0] * s0 + gate[0, 1] * s1 + gate[0, 2] * s2 + gate[0, 3] * s3
            state[i1] = gate[1, 0] * s0 + gate[1, 1] * s1 + gate[1, 2] * s2 + gate[1, 3] * s3
            state[i2] = gate[2, 0] * s0 + gate[2, 1] * s1 + gate[2, 2] * s2 + gate[2, 3] * s3
            state[i3] = gate[3, 0] * s0 + gate[3, 1] * s1 + gate[3, 2] * s2 + gate[3, 3] * s3
        return state

    def apply_two_qubit_gate(state, gate, n, a, b):
        out = state.copy()
        return _apply_2q_kernel(out, np.ascontiguousarray(gate), n - 1 - a, n - 1 - b)

else:

    def apply_two_qubit_gate(state, gate, n, a, b):
        return _apply_2q_numpy(state, gate, n, a, b)


def apply_two_qubit_gate_batch(states: np.ndarray, gate: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    """Apply one 4x4 gate to every column of a (2^n, m) batch of states."""
    m = states.shape[1]
    psi = states.reshape((2,) * n + (m,))
    psi = np.moveaxis(psi, (a, b), (0, 1))
    shp = psi.shape
    out = (gate @ psi.reshape(4, -1)).reshape(shp)
    return np.moveaxis(out, (0, 1), (a, b)).reshape(1 << n, m)


# ---------------------------------------------------------------------------
# one conjugation step of Pauli propagation
#
# Terms are stored as parallel arrays (xs, zs, coeffs) with per-qubit X/Z
# bits packed into uint64 masks (qubit q sits at bit n-1-q, so masks compare
# lexicographically like the Pauli label string). A gate on qubits (i, j)
# maps each term to up to 16 terms weighted by the real 16x16 transfer
# matrix T[new, old], where the 4-bit letter index of a qubit pair is
# x_i | z_i<<1 | x_j<<2 | z_j<<3.
# ---------------------------------------------------------------------------


def _propagate_step_numpy(xs, zs, cs, table, pi, pj, drop, dust):
    bi = np.uint64(1) << np.uint64(pi)
    bj = np.uint64(1) << np.uint64(pj)
    xi = (xs & bi) != 0
    zi = (zs & bi) != 0
    xj = (xs & bj) != 0
    zj = (zs & bj) != 0
    old = (
        xi.astype(np.int64)
        | (zi.astype(np.int64) << 1)
        | (xj.astype(np.int64) << 2)
        | (zj.astype(np.int64) << 3)
    )
    keep = ~(bi | bj)
    base_x = xs & keep
    base_z = zs & keep
    # weights[t, new] = cs[t] * table[new, old[t]]
    weights = cs[:, None] * table[:, old].T
    new_idx = np.arange(16, dtype=np.uint64)
    add_x = np.where(new_idx & np.uint64(1), bi, np.uint64(0)) | np.where(
        new_idx & np.uint64(4), bj, np.uint64(0)
    )
    add_z = np.where(new_idx & np.uint64(2), bi, np.uint64(0)) | np.where(
        new_idx & np.uint64(8), bj, np.uint64(0)
    )
    out_x = (base_x[:, None] | add_x[None, :]).ravel()
    out_z = (base_z[:, None] | add_z[None, :]).ravel()
    out_c = weights.ravel()
    # only numerical dust is pruned pre-merge; the kappa cut applies to whole
    # strings after coefficients have accumulated
    mask = np.abs(out_c) > dust
    out_x, out_z, out_c = out_x[mask], out_z[mask], out_c[mask]
    if out_x.size == 0:
        return out_x, out_z, out_c
    if pi < 32 and pj < 32 and (out_x >> np.uint64(32)).max() == 0:
        order = np.argsort((out_x << np.uint64(32)) | out_z, kind="stable")
    else:
        order = np.lexsort((out_x, out_z))
    out_x, out_z, out_c = out_x[order], out_z[order], out_c[order]
    boundary = np.empty(out_x.size, dtype=bool)
    boundary[0] = True
    boundary[1:] = (out_x[1:] != out_x[:-1]) | (out_z[1:] != out_z[:-1])
    starts = np.flatnonzero(boundary)
    merged_c = np.add.reduceat(out_c, starts)
    merged_x = out_x[starts]
    merged_z = out_z[starts]
    mask = np.abs(merged_c) > drop
    return merged_x[mask], merged_z[mask], merged_c[mask]


if USE_NUMBA:

    @njit(cache=True)
    def _propagate_step_kernel(xs, zs, cs, table, pi, pj, drop, dust):
        n_in = xs.shape[0]
        bi = np.uint64(1) << np.uint64(pi)
        bj = np.uint64(1) << np.uint64(pj)
        keep = ~(bi | bj)
        out_x = np.empty(16 * n_in, dtype=np.uint64)
        out_z = np.empty(16 * n_in, dtype=np.uint64)
        out_c = np.empty(16 * n_in, dtype=np.complex128)
        m = 0
        for t in range(n_in):
            old = 0
            if xs[t] & bi:
                old |= 1
            if zs[t] & bi:
                old |= 2
            if xs[t] & bj:
                old |= 4
            if zs[t] & bj:
                old |= 8
            bx = xs[t] & keep
            bz = zs[t] & keep
            c = cs[t]
            for new in range(16):
                w = table[new, old] * c
                if abs(w) > dust:
                    ax = bx
                    az = bz
                    if new & 1:
                        ax |= bi
                    if new & 2:
                        az |= bi
                    if new & 4:
                        ax |= bj
                    if new & 8:
                        az |= bj
                    out_x[m] = ax
                    out_z[m] = az
                    out_c[m] = w
                    m += 1
        out_x = out_x[:m]
        out_z = out_z[:m]
        out_c = out_c[:m]
        if m == 0:
            return out_x, out_z, out_c
        narrow = True
        for t in range(m):
            if (out_x[t] >> np.uint64(32)) != 0:
                narrow = False
                break
        if narrow:
            # single combined-key sort when the x masks fit in 32 bits
            keys = (out_x << np.uint64(32)) | out_z
            order = np.argsort(keys, kind="mergesort")
            out_x = out_x[order]
            out_z = out_z[order]
            out_c = out_c[order]
        else:
            order = np.argsort(out_x, kind="mergesort")
            out_x = out_x[order]
            out_z = out_z[order]
            out_c = out_c[order]
            order = np.argsort(out_z, kind="mergesort")
            out_x = out_x[order]
            out_z = out_z[order]
            out_c = out_c[order]
        mer_x = np.empty(m, dtype=np.uint64)
        mer_z = np.empty(m, dtype=np.uint64)
        mer_c = np.empty(m, dtype=np.complex128)
        k = -1
        for t in range(m):
            if k >= 0 and out_x[t] == mer_x[k] and out_z[t] == mer_z[k]:
                mer_c[k] += out_c[t]
            else:
                k += 1
                mer_x[k] = out_x[t]
                mer_z[k] = out_z[t]
                mer_c[k] = out_c[t]
        k += 1
        fin_x = np.empty(k, dtype=np.uint64)
        fin_z = np.empty(k, dtype=np.uint64)
        fin_c = np.empty(k, dtype=np.complex128)
        m = 0
        for t in range(k):
            if abs(mer_c[t]) > drop:
                fin_x[m] = mer_x[t]
                fin_z[m] = mer_z[t]
                fin_c[m] = mer_c[t]
                m += 1
        return fin_x[:m], fin_z[:m], fin_c[:m]

    def propagate_step(xs, zs, cs, table, pi, pj, drop, dust=1e-14):
        return _propagate_step_kernel(xs, zs, cs, table, pi, pj, drop, dust)

else:

    def propagate_step(xs, zs, cs, table, pi, pj, drop, dust=1e-14):
        return _propagate_step_numpy(xs, zs, cs, table, pi, pj, drop, dust)
