import itertools
import math

import numpy as np
import pytest

from polfock import measurement as m
from polfock.circuit import Circuit, CircuitConfig, build_canonical_circuit, canonical_elements
from polfock.elements import DistinguishabilityModel, rotate_pol
from polfock.errors import ConfigError, InvariantError
from polfock.fock import registry_create
from polfock.measurement import (
    CNOT,
    HeraldRule,
    derive_feed_forward,
    equal_up_to_phase,
    fidelity,
    herald,
    two_qubit_state,
)
from polfock.sources import InputSpec

BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


@pytest.fixture(scope="module")
def ideal():
    return build_canonical_circuit(CircuitConfig())


def test_fidelity_basic_properties():
    reg = registry_create(["b1", "b2"])
    a = two_qubit_state(reg, BELL)
    b = two_qubit_state(reg, np.exp(0.7j) * BELL)
    c = two_qubit_state(reg, np.array([0, 1, 0, 0]))
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, b) == pytest.approx(1.0)
    assert fidelity(a, c) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(0)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    y = rng.normal(size=4) + 1j * rng.normal(size=4)
    s1 = two_qubit_state(reg, x / np.linalg.norm(x))
    s2 = two_qubit_state(reg, y / np.linalg.norm(y))
    assert fidelity(s1, s2) == pytest.approx(fidelity(s2, s1), abs=1e-14)
    with pytest.raises(ValueError):
        fidelity(two_qubit_state(reg, 2 * BELL), a)


def test_equal_up_to_phase():
    assert equal_up_to_phase(1j * CNOT, CNOT)
    assert not equal_up_to_phase(CNOT, np.eye(4))


def test_passive_herald_probability_and_output(ideal):
    for token, expected in zip(m.QUBIT_BASIS, ("HH", "HV", "VV", "VH")):
        res = herald(ideal.run(InputSpec.from_tokens(token)), ideal.herald)
        assert res.probability == pytest.approx(1 / 16, abs=1e-12)
        vec = m.qubit_vector(res.state)
        assert abs(vec[m.QUBIT_BASIS.index(expected)]) == pytest.approx(1.0, abs=1e-12)


def test_all_detector_patterns_sum_to_one(ideal):
    state = ideal.evolve(ideal.prepare(InputSpec.from_tokens("+H")))
    dist = m.outcome_distribution(state, ["b1", "b2", "b3", "b4"])
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_feed_forward_table(ideal):
    table = derive_feed_forward(ideal)
    assert table.corrections == {
        ("H", "H"): ("I", "I"),
        ("H", "V"): ("I", "X"),
        ("V", "H"): ("Z", "I"),
        ("V", "V"): ("Z", "X"),
    }
    for outcome in table.corrections:
        assert equal_up_to_phase(table.corrected_map(outcome), CNOT, 1e-10)
    assert table.total_success_probability == pytest.approx(0.25, abs=1e-12)


def test_feed_forward_fails_for_scrambled_circuit(ideal):
    elements = list(ideal.elements)
    elements[-1] = rotate_pol("b3", -30)
    broken = Circuit(ideal.registry, tuple(elements), ideal.herald, ideal.input_spec)
    with pytest.raises(InvariantError):
        derive_feed_forward(broken)


def test_coincidence_rows_sum_to_one(ideal):
    table = m.coincidence_table(ideal)
    assert np.allclose(table.conditional.sum(axis=1), 1.0, atol=1e-9)
    expected = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.allclose(table.conditional, expected, atol=1e-12)


def test_herald_at_45_degrees_matches_plus_detection():
    # reading b3 at 45 deg without the analysis rotation equals the canonical H reading
    base = build_canonical_circuit(CircuitConfig())
    rule = HeraldRule((m.HeraldRequirement("b3", 45.0, "H"), m.HeraldRequirement("b4", 0.0, "H")))
    stripped = Circuit(base.registry, base.elements[:-1], rule, base.input_spec)
    for token in m.QUBIT_BASIS:
        spec = InputSpec.from_tokens(token)
        a = herald(base.run(spec), base.herald)
        b = herald(stripped.run(spec), rule)
        assert a.probability == pytest.approx(b.probability, abs=1e-12)


def test_threshold_inference_is_weaker_condition(ideal):
    rule = m.HeraldRule.passive(m.DetectorKind.THRESHOLD, threshold_inference=True)
    spec = InputSpec.from_tokens("+H")
    exact = herald(ideal.run(spec), ideal.herald).probability
    loose = m.pattern_probability(ideal.run(spec), m.herald_ports(rule), exact=False)
    assert loose >= exact


def test_herald_rule_text_roundtrip():
    rule = HeraldRule.passive().with_outcomes(("V", "H"))
    assert HeraldRule.parse(rule.describe()) == rule
    with pytest.raises(ConfigError):
        HeraldRule((m.HeraldRequirement("b1", 0.0, "H"),))


def _dist_circuit(delay, arm_offset=0.0):
    model = DistinguishabilityModel(delay=delay, arm_offset=arm_offset)
    return build_canonical_circuit(CircuitConfig(input="+H", distinguishability=model))


def test_hom_scan_limits():
    c = _dist_circuit(0.0)
    points = m.hom_scan(c, [0.0, 5 * 700.0])
    assert points[0].spurious == pytest.approx(0.0, abs=1e-15)
    assert points[0].visibility == pytest.approx(1.0, abs=1e-12)
    assert points[1].desired == pytest.approx(points[1].spurious, rel=1e-9)


def test_hom_visibility_tracks_overlap_squared():
    # symmetric delay on both ancilla photons: correlation visibility = v^2
    c = _dist_circuit(0.0)
    for d in (100.0, 300.0, 600.0):
        p = m.hom_scan(c, [d])[0]
        assert p.visibility == pytest.approx(p.overlap ** 2, abs=1e-12)


def test_hom_scan_requires_two_tbins(ideal):
    with pytest.raises(ConfigError):
        m.hom_scan(ideal, [0.0])


def test_density_traces_temporal_bins():
    c = _dist_circuit(2e4)  # fully distinguishable ancilla photons
    res = herald(c.run(), c.herald)
    rho = res.density()
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.diag(rho).real, 0.25, atol=1e-12)
    assert abs(rho[0, 3]) < 1e-12


def test_pure_output_and_herald_members(ideal):
    res = herald(ideal.run(InputSpec.from_tokens("+H")), ideal.herald)
    assert res.is_pure
    assert m.density_fidelity(res.density(), BELL) == pytest.approx(1.0, abs=1e-12)


def test_environment_is_shared_between_inputs(ideal):
    for outcome in itertools.product("HV", repeat=2):
        rule = ideal.herald.with_outcomes(outcome)
        keys = {herald(ideal.run(InputSpec.from_tokens(t)), rule).members[0][1][1] for t in m.QUBIT_BASIS}
        assert len(keys) == 1


def test_canonical_elements_structure():
    plain = canonical_elements()
    with_delay = canonical_elements(DistinguishabilityModel())
    assert len(with_delay) == len(plain) + 2
    assert [e.name.split("(")[0] for e in with_delay[:2]] == ["delay_mix", "delay_mix"]
