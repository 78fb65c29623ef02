"""Independent amplitude oracle based on matrix permanents.

Nothing here touches the sparse expansion kernels: output amplitudes of a
linear-optical network are computed as

    <m| U |n> = Perm(U[rows(m), cols(n)]) / sqrt(prod n! prod m!)

where ``rows(m)`` / ``cols(n)`` repeat each mode index by its occupation.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .fock import FockState


def permanent_naive(A):
    """Permanent by summing over all permutations (small matrices only)."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= A[i, j]
        total += prod
    return total


def permanent_ryser(A):
    """Ryser's inclusion-exclusion formula."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for k in range(1, n + 1):
        for cols in itertools.combinations(range(n), k):
            total += (-1) ** k * np.prod(A[:, cols].sum(axis=1))
    return (-1) ** n * total


def _expand_indices(occupation):
    return [i for i, n in enumerate(occupation) for _ in range(int(n))]


def fock_amplitude(U, n_in, m_out, permanent=permanent_naive):
    """Transition amplitude from occupation ``n_in`` to ``m_out`` under ``U``.

    ``U[i, j]`` is the amplitude for a photon entering mode ``j`` to leave in
    mode ``i``.
    """
    if sum(n_in) != sum(m_out):
        return 0j
    rows = _expand_indices(m_out)
    cols = _expand_indices(n_in)
    norm = math.prod(math.factorial(int(k)) for k in n_in) * math.prod(
        math.factorial(int(k)) for k in m_out
    )
    return permanent(np.asarray(U)[np.ix_(rows, cols)]) / math.sqrt(norm)


def occupations(n_modes, n_photons):
    """All occupation tuples of ``n_photons`` over ``n_modes`` (lexicographic)."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n_modes), n_photons):
        occ = [0] * n_modes
        for i in combo:
            occ[i] += 1
        out.append(tuple(occ))
    return sorted(out)


def evolve_terms(U, terms, permanent=permanent_naive):
    """Map ``{occupation: amplitude}`` through ``U``; returns a dense dict."""
    U = np.asarray(U, dtype=np.complex128)
    out = {}
    for n_in, c in terms.items():
        for m_out in occupations(U.shape[0], sum(n_in)):
            out[m_out] = out.get(m_out, 0j) + c * fock_amplitude(U, n_in, m_out, permanent)
    return out


def network_matrix(registry, elements):
    """Single-photon transfer matrix of ``elements`` over every mode of ``registry``."""
    M = len(registry)
    total = np.eye(M, dtype=np.complex128)
    for e in elements:
        big = np.eye(M, dtype=np.complex128)
        tbins = range(registry.tbins) if e.per_tbin else [None]
        for t in tbins:
            idx = [registry.index((s, p, t if q is None else q)) for s, p, q in e.modes]
            big[np.ix_(idx, idx)] = e.matrix
        total = big @ total
    return total


def evolve_state(state, U, permanent=permanent_naive):
    """Oracle evolution of a FockState by the single-photon matrix ``U``."""
    out = evolve_terms(U, state.terms, permanent)
    return {k: v for k, v in out.items() if abs(v) > 0}


def herald_success_probability(circuit, spec, outcome=("H", "H")):
    """Probability that ``circuit`` heralds ``outcome`` at (b3, b4) with one
    photon in each of b1 and b2, computed with permanents."""
    reg = circuit.registry
    U = network_matrix(reg, circuit.elements)
    initial = circuit.prepare(spec)
    if not isinstance(initial, FockState):
        raise ValueError("oracle success probability needs ideal sources")
    total = 0.0
    for p1, p2 in itertools.product("HV", repeat=2):
        m_out = [0] * len(reg)
        for mode in (("b1", p1, 0), ("b2", p2, 0), ("b3", outcome[0], 0), ("b4", outcome[1], 0)):
            m_out[reg.index(mode)] = 1
        amp = sum(c * fock_amplitude(U, n_in, m_out) for n_in, c in initial.terms.items())
        total += abs(amp) ** 2
    return total * initial.weight
