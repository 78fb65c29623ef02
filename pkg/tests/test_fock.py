import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polfock.errors import CutoffError, RegistryError
from polfock.fock import (
    JONES,
    PRUNE_TOL,
    FockState,
    Mode,
    ModeRegistry,
    add_all,
    embed,
    inner_product,
    marginal,
    registry_create,
    state_single,
    superpose,
    tensor,
)


def test_registry_order_is_label_pol_tbin():
    reg = registry_create(["a1", "a2"], tbins=2)
    assert [str(m) for m in reg.modes] == [
        "a1.H.0", "a1.H.1", "a1.V.0", "a1.V.1",
        "a2.H.0", "a2.H.1", "a2.V.0", "a2.V.1",
    ]
    assert reg.index(("a2", "V", 1)) == 7


def test_registry_rejects_bad_labels():
    with pytest.raises(RegistryError):
        registry_create(["a1", "a1"])
    with pytest.raises(RegistryError):
        registry_create([])
    with pytest.raises(RegistryError):
        registry_create(["a.1"])
    with pytest.raises(RegistryError):
        registry_create(["a1"]).index(("b1", "H", 0))


def test_mode_roundtrip_and_validation():
    assert Mode.parse("b3.V.1") == Mode("b3", "V", 1)
    with pytest.raises(RegistryError):
        Mode("a1", "D")
    with pytest.raises(RegistryError):
        Mode.parse("a1-H-0")


def test_plus_minus_tokens_are_orthonormal():
    p, m = np.array(JONES["+"]), np.array(JONES["-"])
    assert np.vdot(p, p).real == pytest.approx(1.0, abs=1e-15)
    assert abs(np.vdot(p, m)) < 1e-15
    assert np.allclose(p, [1 / math.sqrt(2), 1 / math.sqrt(2)])


def test_single_photon_state():
    reg = registry_create(["a1"])
    s = state_single(reg, ("a1", "H", 0))
    assert s.terms == {(1, 0): 1.0}
    assert s.probability() == 1.0


def test_superpose_gives_plus_state():
    reg = registry_create(["a1"])
    h = state_single(reg, ("a1", "H", 0))
    v = state_single(reg, ("a1", "V", 0))
    plus = superpose(1 / math.sqrt(2), h, 1 / math.sqrt(2), v)
    assert plus.norm2() == pytest.approx(1.0, abs=1e-15)
    assert plus.amplitude((0, 1)) == pytest.approx(1 / math.sqrt(2))


def test_superpose_cancellation_prunes_terms():
    reg = registry_create(["a1"])
    h = state_single(reg, ("a1", "H", 0))
    s = superpose(1.0, h, -1.0, h)
    assert s.is_zero()
    tiny = superpose(1.0, h, -(1.0 - PRUNE_TOL / 10), h)
    assert tiny.is_zero()


def test_cutoff_enforced():
    reg = registry_create(["a1"], n_max=2)
    with pytest.raises(CutoffError):
        FockState.from_terms(reg, {(3, 0): 1.0})


def test_inner_product_matches_dict_sum():
    rng = np.random.default_rng(3)
    reg = registry_create(["a1", "a2"])
    keys = [(1, 0, 1, 0), (0, 1, 1, 0), (1, 1, 0, 0), (0, 0, 0, 2)]
    a = {k: complex(*rng.normal(size=2)) for k in keys[:3]}
    b = {k: complex(*rng.normal(size=2)) for k in keys[1:]}
    expected = sum(np.conj(a[k]) * b[k] for k in a if k in b)
    got = inner_product(FockState.from_terms(reg, a), FockState.from_terms(reg, b))
    assert got == pytest.approx(expected, abs=1e-14)


def test_tensor_and_marginal():
    r1, r2 = registry_create(["a1"]), registry_create(["a2"])
    h = state_single(r1, ("a1", "H", 0))
    plus = superpose(1 / math.sqrt(2), state_single(r2, ("a2", "H", 0)),
                     1 / math.sqrt(2), state_single(r2, ("a2", "V", 0)))
    prod = tensor(h, plus)
    assert prod.registry.labels == ("a1", "a2")
    assert prod.norm2() == pytest.approx(1.0)
    m = marginal(prod, ["a2"])
    assert m == pytest.approx({(0, 1): 0.5, (1, 0): 0.5})
    assert marginal(prod, ["a1"]) == pytest.approx({(1, 0): 1.0})


def test_embed_places_modes():
    small = registry_create(["a2"])
    big = registry_create(["a1", "a2", "a3"])
    s = embed(state_single(small, ("a2", "V", 0)), big)
    assert s.terms == {(0, 0, 0, 1, 0, 0): 1.0}


def test_add_all_rejects_mixed_registries():
    r1, r2 = registry_create(["a1"]), registry_create(["a2"])
    with pytest.raises(RegistryError):
        add_all([(1.0, FockState.vacuum(r1)), (1.0, FockState.vacuum(r2))], r1)


def test_text_roundtrip_is_bit_exact():
    reg = ModeRegistry(["a1", "b2"], tbins=2, n_max=4)
    rng = np.random.default_rng(11)
    terms = {}
    for _ in range(6):
        occ = tuple(int(x) for x in rng.multinomial(3, [1 / 8] * 8))
        terms[occ] = complex(*rng.normal(size=2))
    s = FockState.from_terms(reg, terms, weight=0.37)
    back = FockState.from_text(s.to_text())
    assert back.registry == reg
    assert back.weight == s.weight
    assert np.array_equal(back.occ, s.occ)
    assert np.array_equal(back.amp, s.amp)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(
    st.tuples(*[st.integers(0, 2)] * 4),
    st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
    max_size=8,
))
def test_terms_are_canonical(terms):
    reg = registry_create(["a1", "a2"], n_max=8)
    s = FockState.from_terms(reg, terms)
    keys = [tuple(r) for r in s.occ]
    assert keys == sorted(set(keys))
    assert all(abs(a) >= PRUNE_TOL for a in s.amp)
    for k, v in terms.items():
        if abs(v) >= PRUNE_TOL:
            assert s.amplitude(k) == v
