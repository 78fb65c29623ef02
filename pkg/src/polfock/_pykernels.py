"""Pure-Python/numpy implementation of the creation-operator expansion kernel.

Same contract as the compiled ``_ckernels.expand``: given occupation rows,
amplitudes, the registry columns an element touches and the element matrix,
return the expanded (not yet globally merged) rows and amplitudes.
"""

from math import factorial, sqrt

import numpy as np


def local_transfer(n_local, U, nonzero):
    """Expand ``prod_j (sum_i U[i, j] a_i^dag)^n_j / sqrt(n_j!)`` on vacuum.

    Returns a list of ``(output occupation tuple, amplitude)`` pairs. The
    expansion proceeds photon by photon, merging equal partial configurations
    so the cost follows the number of distinct outputs, not ``k**n``.
    """
    k = len(n_local)
    partial = {(0,) * k: 1.0 + 0.0j}
    for j, nj in enumerate(n_local):
        for _ in range(nj):
            nxt = {}
            for cfg, c in partial.items():
                for i in nonzero[j]:
                    new = list(cfg)
                    new[i] += 1
                    key = tuple(new)
                    nxt[key] = nxt.get(key, 0.0) + c * U[i, j]
            partial = nxt
    in_fact = 1
    for nj in n_local:
        in_fact *= factorial(nj)
    out = []
    for cfg, c in partial.items():
        out_fact = 1
        for m in cfg:
            out_fact *= factorial(m)
        out.append((cfg, c * sqrt(out_fact / in_fact)))
    return out


def expand(occ, amp, cols, U):
    occ = np.asarray(occ, dtype=np.uint8)
    amp = np.asarray(amp, dtype=np.complex128)
    cols = np.asarray(cols, dtype=np.intp)
    U = np.asarray(U, dtype=np.complex128)
    T, M = occ.shape
    if T == 0:
        return occ.copy(), amp.copy()
    nonzero = [np.flatnonzero(U[:, j]).tolist() for j in range(U.shape[1])]

    local = occ[:, cols]
    patterns, inverse = np.unique(local, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()

    row_blocks = []
    amp_blocks = []
    for p, pattern in enumerate(patterns):
        idx = np.flatnonzero(inverse == p)
        transfer = local_transfer(tuple(int(x) for x in pattern), U, nonzero)
        if not transfer:
            continue
        cfgs = np.array([cfg for cfg, _ in transfer], dtype=np.uint8)
        coeffs = np.array([c for _, c in transfer], dtype=np.complex128)
        L = len(transfer)
        rows = np.repeat(occ[idx], L, axis=0)
        rows[:, cols] = np.tile(cfgs, (len(idx), 1))
        row_blocks.append(rows)
        amp_blocks.append(np.outer(amp[idx], coeffs).ravel())
    if not row_blocks:
        return np.zeros((0, M), dtype=np.uint8), np.zeros(0, dtype=np.complex128)
    return np.concatenate(row_blocks), np.concatenate(amp_blocks)
