# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled creation-operator expansion kernel (see ``_pykernels.expand``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memcmp, memset

cnp.import_array()

cdef enum:
    MAX_FACT = 64


cdef double _fact[MAX_FACT]
_fact[0] = 1.0
cdef int _i
for _i in range(1, MAX_FACT):
    _fact[_i] = _fact[_i - 1] * _i


cdef double _binom_cap(int n, int k):
    # C(n, k) as a double, used only to bound buffer sizes
    cdef double r = 1.0
    cdef int i
    if k > n - k:
        k = n - k
    for i in range(k):
        r = r * (n - i) / (i + 1)
    return r


cdef inline Py_ssize_t _hash(const unsigned char *cfg, Py_ssize_t k, Py_ssize_t mask):
    # FNV-1a over the local configuration
    cdef unsigned long long h = 1469598103934665603ULL
    cdef Py_ssize_t i
    for i in range(k):
        h = (h ^ cfg[i]) * 1099511628211ULL
    return <Py_ssize_t> (h & <unsigned long long> mask)


def expand(const unsigned char[:, ::1] occ,
           const double complex[::1] amp,
           const Py_ssize_t[::1] cols,
           const double complex[:, ::1] U):
    cdef Py_ssize_t T = occ.shape[0]
    cdef Py_ssize_t M = occ.shape[1]
    cdef Py_ssize_t k = cols.shape[0]
    cdef Py_ssize_t t, i, j, r, a, b, n_cur, n_nxt, found, slot, H, mask
    cdef long long gen = 0
    cdef int nj, p
    cdef double bound, comb, max_bound = 1.0, total = 0.0
    cdef double complex c, coeff
    cdef double in_fact, out_fact

    if U.shape[0] != k or U.shape[1] != k:
        raise ValueError("element matrix does not match column count")
    for i in range(k):
        if cols[i] < 0 or cols[i] >= M:
            raise IndexError("column index out of range")

    cdef int *nnz = <int *> malloc(k * sizeof(int))
    cdef int *nz_rows = <int *> malloc(k * k * sizeof(int))
    if nnz == NULL or nz_rows == NULL:
        free(nnz)
        free(nz_rows)
        raise MemoryError()
    for j in range(k):
        nnz[j] = 0
        for i in range(k):
            if U[i, j] != 0:
                nz_rows[j * k + nnz[j]] = <int> i
                nnz[j] += 1

    # buffer bounds: per-term product of column fan-outs, capped by compositions;
    # empty columns count as fan-out 1 because partial expansions still need room
    for t in range(T):
        bound = 1.0
        p = 0
        for j in range(k):
            nj = occ[t, cols[j]]
            p += nj
            if nnz[j] > 1:
                for a in range(nj):
                    bound *= nnz[j]
        if p >= MAX_FACT:
            free(nnz)
            free(nz_rows)
            raise OverflowError("too many photons in element modes")
        comb = _binom_cap(p + k - 1, k - 1)
        if comb < bound:
            bound = comb
        if bound > max_bound:
            max_bound = bound
        total += bound

    cdef Py_ssize_t B = <Py_ssize_t> max_bound
    cdef Py_ssize_t R = <Py_ssize_t> total
    out_rows_arr = np.empty((R, M), dtype=np.uint8)
    out_amp_arr = np.empty(R, dtype=np.complex128)
    cdef unsigned char[:, ::1] out_rows = out_rows_arr
    cdef double complex[::1] out_amp = out_amp_arr

    cdef unsigned char *cur_cfg = <unsigned char *> malloc(B * k + 1)
    cdef unsigned char *nxt_cfg = <unsigned char *> malloc(B * k + 1)
    cdef double complex *cur_c = <double complex *> malloc(B * sizeof(double complex))
    cdef double complex *nxt_c = <double complex *> malloc(B * sizeof(double complex))
    cdef unsigned char *tmp_cfg
    cdef double complex *tmp_c
    cdef unsigned char *probe = <unsigned char *> malloc(k + 1)
    # open-addressing table mapping configurations to slots of nxt_*; entries
    # are valid only when their stamp equals the current generation
    H = 16
    while H < 2 * B:
        H *= 2
    mask = H - 1
    cdef Py_ssize_t *tab_idx = <Py_ssize_t *> malloc(H * sizeof(Py_ssize_t))
    cdef long long *tab_gen = <long long *> malloc(H * sizeof(long long))
    if (cur_cfg == NULL or nxt_cfg == NULL or cur_c == NULL or nxt_c == NULL or probe == NULL
            or tab_idx == NULL or tab_gen == NULL):
        free(cur_cfg); free(nxt_cfg); free(cur_c); free(nxt_c); free(probe)
        free(tab_idx); free(tab_gen); free(nnz); free(nz_rows)
        raise MemoryError()
    for slot in range(H):
        tab_gen[slot] = -1

    r = 0
    for t in range(T):
        memset(cur_cfg, 0, k)
        cur_c[0] = 1.0
        n_cur = 1
        in_fact = 1.0
        for j in range(k):
            nj = occ[t, cols[j]]
            in_fact *= _fact[nj]
            for a in range(nj):
                n_nxt = 0
                gen += 1
                for b in range(n_cur):
                    for i in range(nnz[j]):
                        memcpy(probe, cur_cfg + b * k, k)
                        probe[nz_rows[j * k + i]] += 1
                        coeff = cur_c[b] * U[nz_rows[j * k + i], j]
                        found = -1
                        slot = _hash(probe, k, mask)
                        while tab_gen[slot] == gen:
                            if memcmp(nxt_cfg + tab_idx[slot] * k, probe, k) == 0:
                                found = tab_idx[slot]
                                break
                            slot = (slot + 1) & mask
                        if found >= 0:
                            nxt_c[found] = nxt_c[found] + coeff
                        else:
                            memcpy(nxt_cfg + n_nxt * k, probe, k)
                            nxt_c[n_nxt] = coeff
                            tab_gen[slot] = gen
                            tab_idx[slot] = n_nxt
                            n_nxt += 1
                tmp_cfg = cur_cfg; cur_cfg = nxt_cfg; nxt_cfg = tmp_cfg
                tmp_c = cur_c; cur_c = nxt_c; nxt_c = tmp_c
                n_cur = n_nxt
        for b in range(n_cur):
            out_fact = 1.0
            for i in range(k):
                out_fact *= _fact[cur_cfg[b * k + i]]
            for i in range(M):
                out_rows[r, i] = occ[t, i]
            for i in range(k):
                out_rows[r, cols[i]] = cur_cfg[b * k + i]
            out_amp[r] = amp[t] * cur_c[b] * sqrt(out_fact / in_fact)
            r += 1

    free(cur_cfg); free(nxt_cfg); free(cur_c); free(nxt_c); free(probe)
    free(tab_idx); free(tab_gen); free(nnz); free(nz_rows)
    return out_rows_arr[:r], out_amp_arr[:r]
