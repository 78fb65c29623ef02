import math

import numpy as np
import pytest

from polfock import oracle
from polfock.circuit import CircuitConfig, build_canonical_circuit
from polfock.elements import apply_all
from polfock.fock import FockState, registry_create
from polfock.sources import InputSpec


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_permanent_small_cases():
    assert oracle.permanent_naive(np.array([[2.0]])) == 2.0
    assert oracle.permanent_naive(np.array([[1, 2], [3, 4]])) == 10
    assert oracle.permanent_naive(np.ones((4, 4))) == math.factorial(4)


def test_ryser_matches_naive():
    rng = np.random.default_rng(1)
    for n in range(1, 6):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert oracle.permanent_ryser(A) == pytest.approx(oracle.permanent_naive(A), abs=1e-10)


def test_hom_amplitudes_from_permanents():
    h = 1 / math.sqrt(2)
    U = np.array([[h, 1j * h], [1j * h, h]])
    assert abs(oracle.fock_amplitude(U, (1, 1), (1, 1))) < 1e-15
    assert abs(oracle.fock_amplitude(U, (1, 1), (2, 0))) ** 2 == pytest.approx(0.5)


def test_oracle_evolution_is_unitary():
    rng = np.random.default_rng(4)
    U = random_unitary(3, rng)
    out = oracle.evolve_terms(U, {(1, 1, 1): 1.0})
    assert sum(abs(a) ** 2 for a in out.values()) == pytest.approx(1.0, abs=1e-12)


def test_occupations_count():
    assert len(oracle.occupations(4, 3)) == math.comb(6, 3)


def test_network_matrix_matches_sparse_apply_on_gate():
    c = build_canonical_circuit(CircuitConfig(input="+H"))
    start = c.prepare()
    U = oracle.network_matrix(c.registry, c.elements)
    ref = oracle.evolve_state(start, U)
    out = apply_all(start, c.elements)
    keys = set(ref) | set(out.terms)
    assert max(abs(ref.get(k, 0) - out.terms.get(k, 0)) for k in keys) < 1e-12


def test_success_probability_is_one_sixteenth_per_outcome():
    c = build_canonical_circuit(CircuitConfig())
    for token in ("HH", "HV", "VH", "VV"):
        for outcome in (("H", "H"), ("V", "V")):
            p = oracle.herald_success_probability(c, InputSpec.from_tokens(token), outcome)
            assert p == pytest.approx(1 / 16, abs=1e-12)


def test_evolve_state_agrees_on_two_modes():
    reg = registry_create(["m"])
    s = FockState.from_terms(reg, {(2, 0): 0.6, (1, 1): 0.8j})
    theta = 0.3
    U = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    out = oracle.evolve_state(s, U)
    assert sum(abs(a) ** 2 for a in out.values()) == pytest.approx(1.0)
