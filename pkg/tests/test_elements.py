import math

import numpy as np
import pytest

from polfock.elements import (
    DistinguishabilityModel,
    Element,
    apply,
    beam_splitter,
    compose,
    delay_mix,
    filter_to_dump,
    hwp,
    identity,
    pbs_45,
    pbs_45_direct,
    pbs_hv,
    polarizer,
    rotate_pol,
)
from polfock.errors import CutoffError, InvariantError, RegistryError
from polfock.fock import FockState, registry_create, state_single, superpose, tensor

H2 = 1 / math.sqrt(2)


def photon(reg, label, pol, t=0):
    return state_single(reg, (label, pol, t))


def test_constructors_pass_kind_check():
    model = DistinguishabilityModel(delay=300.0)
    elements = [
        identity("a1"), rotate_pol("a1", 17), hwp("a1", 22.5), pbs_hv("a1", "a2", "b1", "b2"),
        pbs_45("a1", "a2", "b1", "b2"), pbs_45_direct("a1", "a2", "b1", "b2"),
        polarizer("a1", 30), filter_to_dump("a1", "l1", (0.6, 0.8j)),
        beam_splitter(("a1", "H"), ("a2", "H"), 0.3), delay_mix("a3", model),
    ]
    for e in elements:
        assert e.check_error() <= 1e-10, e.name


def test_non_unitary_matrix_rejected():
    with pytest.raises(InvariantError):
        Element("bad", [("a1", "H"), ("a1", "V")], [[1, 1], [0, 1]])


def test_rotation_sign_convention():
    reg = registry_create(["a1"])
    out = apply(photon(reg, "a1", "H"), rotate_pol("a1", 90))
    assert out.amplitude((0, 1)) == pytest.approx(1.0)
    out = apply(photon(reg, "a1", "V"), rotate_pol("a1", 90))
    assert out.amplitude((1, 0)) == pytest.approx(-1.0)


def test_hwp_is_rotation_after_v_flip():
    flip = Element("flip", [("a1", "H"), ("a1", "V")], np.diag([1, -1]))
    for theta in (0.0, 11.0, 22.5, 45.0):
        ref = compose("ref", [flip, rotate_pol("a1", 2 * theta)])
        assert np.allclose(hwp("a1", theta).matrix, ref.matrix, atol=1e-15)


def test_hwp_at_22_5_maps_h_to_plus():
    reg = registry_create(["a1"])
    out = apply(photon(reg, "a1", "H"), hwp("a1", 22.5))
    assert out.amplitude((1, 0)) == pytest.approx(H2)
    assert out.amplitude((0, 1)) == pytest.approx(H2)


def test_pbs_hv_routing():
    reg = registry_create(["a1", "a2", "b1", "b2"])
    pbs = pbs_hv("a1", "a2", "b1", "b2")
    out = apply(photon(reg, "a1", "H"), pbs)
    assert out.terms == {(0, 0, 0, 0, 1, 0, 0, 0): 1.0}
    out = apply(photon(reg, "a1", "V"), pbs)
    assert out.terms == {(0, 0, 0, 0, 0, 0, 0, 1): 1.0}
    out = apply(photon(reg, "a2", "V"), pbs)
    assert out.terms == {(0, 0, 0, 0, 0, 1, 0, 0): 1.0}


def test_pbs_45_composite_matches_direct():
    a = pbs_45("a2", "a4", "b2", "b4").matrix
    b = pbs_45_direct("a2", "a4", "b2", "b4").matrix
    assert np.max(np.abs(a - b)) <= 1e-12


def test_pbs_45_transmits_both_photons_half_the_time():
    # |H>|H> on the inputs: both photons pass straight through with weight 1/2
    reg = registry_create(["a2", "a4", "b2", "b4"])
    s = FockState.from_terms(reg, {(1, 0, 1, 0, 0, 0, 0, 0): 1.0})
    out = apply(s, pbs_45("a2", "a4", "b2", "b4"))
    b2 = reg.label_indices("b2")
    b4 = reg.label_indices("b4")
    straight = sum(
        abs(a) ** 2 for occ, a in out.terms.items()
        if sum(occ[i] for i in b2) == 1 and sum(occ[i] for i in b4) == 1
    )
    assert straight == pytest.approx(0.5, abs=1e-12)


def test_pbs_requires_distinct_labels():
    with pytest.raises(RegistryError):
        pbs_hv("a1", "a1", "b1", "b2")


def test_polarizer_malus_and_weight():
    reg = registry_create(["a1"])
    h = photon(reg, "a1", "H")
    out = apply(h, polarizer("a1", 0))
    assert out.probability() == pytest.approx(1.0)
    out = apply(photon(reg, "a1", "V"), polarizer("a1", 0))
    assert out.is_zero() and out.probability() == 0.0
    out = apply(h, polarizer("a1", 45))
    assert out.weight == pytest.approx(0.5)
    assert out.norm2() == pytest.approx(1.0)
    assert out.amplitude((1, 0)) == pytest.approx(H2)
    assert out.amplitude((0, 1)) == pytest.approx(H2)


def test_filter_to_dump_is_lossy_polarizer():
    reg = registry_create(["a1", "l1"])
    out = apply(photon(reg, "a1", "H"), filter_to_dump("a1", "l1", (H2, H2)))
    kept = sum(abs(a) ** 2 for occ, a in out.terms.items() if occ[0] + occ[1] == 1)
    assert kept == pytest.approx(0.5, abs=1e-14)
    assert out.norm2() == pytest.approx(1.0, abs=1e-14)


def test_hom_bunching_on_balanced_splitter():
    reg = registry_create(["a1", "a2"])
    s = FockState.from_terms(reg, {(1, 0, 1, 0): 1.0})
    out = apply(s, beam_splitter(("a1", "H"), ("a2", "H")))
    assert abs(out.amplitude((1, 0, 1, 0))) < 1e-15
    assert abs(out.amplitude((2, 0, 0, 0))) ** 2 == pytest.approx(0.5)


def test_unitary_preserves_photon_number_and_norm():
    rng = np.random.default_rng(2)
    reg = registry_create(["a1", "a2"])
    s = FockState.from_terms(reg, {
        (1, 1, 0, 0): complex(*rng.normal(size=2)),
        (0, 2, 1, 0): complex(*rng.normal(size=2)),
        (0, 0, 1, 2): complex(*rng.normal(size=2)),
    }).normalized()
    e = beam_splitter(("a1", "V"), ("a2", "H"), 0.37)
    out = apply(s, e)
    assert set(out.photon_numbers()) == {2, 3}
    assert out.norm2() == pytest.approx(1.0, rel=1e-10)
    back = apply(out, e.inverse())
    assert np.array_equal(back.occ, s.occ)
    assert np.max(np.abs(back.amp - s.amp)) <= 1e-10


def test_polarization_elements_act_per_tbin():
    reg = registry_create(["a1"], tbins=2)
    for t in (0, 1):
        out = apply(photon(reg, "a1", "H", t), rotate_pol("a1", 30))
        c, s = math.cos(math.radians(30)), math.sin(math.radians(30))
        assert out.amplitude(np.eye(4, dtype=int)[reg.index(("a1", "H", t))]) == pytest.approx(c)
        assert out.amplitude(np.eye(4, dtype=int)[reg.index(("a1", "V", t))]) == pytest.approx(s)


def test_delay_mix_limits():
    model = DistinguishabilityModel()
    assert model.overlap() == 1.0
    reg = registry_create(["a3"], tbins=2)
    h0 = photon(reg, "a3", "H", 0)
    out = apply(h0, delay_mix("a3", model))
    assert out.terms == {(1, 0, 0, 0): 1.0}
    far = model.with_delay(20 * model.coherence_time)
    out = apply(h0, delay_mix("a3", far))
    assert out.terms == pytest.approx({(0, 1, 0, 0): 1.0})


def test_overlap_is_gaussian_in_delay():
    model = DistinguishabilityModel(coherence_time=700.0)
    fwhm_half = model.with_delay(350.0).overlap()
    assert fwhm_half == pytest.approx(0.5, abs=1e-12)
    vals = [model.with_delay(d).overlap() for d in np.linspace(0, 3000, 31)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert model.with_delay(model.delay_for_overlap(0.8)).overlap() == pytest.approx(0.8)


def test_arm_offset_only_shifts_requested_arm():
    model = DistinguishabilityModel(delay=100.0, arm_offset=50.0)
    assert delay_mix("a4", model).matrix[0, 0] == pytest.approx(model.overlap())
    assert delay_mix("a3", model, offset=model.arm_offset).matrix[0, 0] == pytest.approx(
        model.with_delay(150.0).overlap()
    )


def test_delay_mix_needs_two_tbins():
    reg = registry_create(["a3"])
    with pytest.raises(RegistryError):
        apply(photon(reg, "a3", "H"), delay_mix("a3", DistinguishabilityModel()))


def test_cutoff_error_from_product():
    r1, r2 = registry_create(["a1"], n_max=2), registry_create(["a2"], n_max=2)
    two = FockState.from_terms(r1, {(2, 0): 1.0})
    with pytest.raises(CutoffError):
        tensor(two, FockState.from_terms(r2, {(1, 0): 1.0}))


def test_element_dump_roundtrip():
    for e in (pbs_45("a2", "a4", "b2", "b4"), polarizer("a1", 30),
              delay_mix("a3", DistinguishabilityModel(delay=200.0))):
        text = e.dump()
        back = Element.load(text)
        assert back.modes == e.modes and back.kind == e.kind
        assert np.max(np.abs(back.matrix - e.matrix)) < 1e-14


def test_element_dump_golden():
    text = rotate_pol("a1", 90).dump()
    assert text == (
        "element: rotate_pol(a1,90)\n"
        "kind: unitary\n"
        "modes: a1.H.* a1.V.*\n"
        "a1.H.*\t6.12323399573677e-17,0 -1,0\n"
        "a1.V.*\t1,0 6.12323399573677e-17,0\n"
    )


def test_superposition_through_pbs_keeps_amplitudes():
    reg = registry_create(["a1", "a2", "b1", "b2"])
    plus = superpose(H2, photon(reg, "a1", "H"), H2, photon(reg, "a1", "V"))
    out = apply(plus, pbs_hv("a1", "a2", "b1", "b2"))
    assert out.amplitude((0, 0, 0, 0, 1, 0, 0, 0)) == pytest.approx(H2)
    assert out.amplitude((0, 0, 0, 0, 0, 0, 0, 1)) == pytest.approx(H2)
