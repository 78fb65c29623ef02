"""Initial states: Bell ancilla, product input qubits, perturbative SPDC.

SPDC emission is truncated at two pairs per crystal pass. The one-pair term is
the phi+ state; the two-pair term is the normalized bosonic state
``K^2 |0> / sqrt(12)`` with ``K = a_xH^dag a_yH^dag + a_xV^dag a_yV^dag``, so
that ``P(2 pairs) / P(1 pair) = epsilon**2`` exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .elements import apply, filter_to_dump, pol_projector
from .errors import ConfigError, RegistryError
from .fock import JONES, FockState, add_all, embed, tensor

EPSILON_MAX = 0.3
NORM_TOL = 1e-12

_BASIS = ("HH", "HV", "VH", "VV")


@dataclass(frozen=True)
class InputSpec:
    """Two-qubit input a1*|HH> + a2*|HV> + a3*|VH> + a4*|VV> on (a1, a2)."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(complex(a) for a in self.alpha)
        if len(alpha) != 4:
            raise ConfigError("an input spec needs exactly four amplitudes")
        norm = sum(abs(a) ** 2 for a in alpha)
        if abs(norm - 1.0) > NORM_TOL:
            raise ConfigError(f"input amplitudes are not normalized (sum |a|^2 = {norm:.12g})")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_tokens(cls, tokens):
        """Product input from two polarization tokens, e.g. ``"+H"``."""
        tokens = tokens.strip()
        if len(tokens) != 2 or any(t not in JONES for t in tokens):
            raise ConfigError(f"input tokens must be two of {sorted(JONES)}, got {tokens!r}")
        j1, j2 = JONES[tokens[0]], JONES[tokens[1]]
        return cls(tuple(a * b for a in j1 for b in j2))

    @classmethod
    def parse(cls, text):
        """Token pair (``+H``) or four complex numbers separated by commas/semicolons."""
        text = text.strip()
        if len(text) == 2 and all(t in JONES for t in text):
            return cls.from_tokens(text)
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        try:
            values = [complex(p.strip().replace(" ", "").replace("i", "j")) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"cannot parse input spec {text!r}") from exc
        if len(values) == 8:  # re, im pairs
            values = [complex(values[2 * k].real, values[2 * k + 1].real) for k in range(4)]
        return cls(tuple(values))

    def vector(self):
        return np.array(self.alpha, dtype=np.complex128)

    def is_computational(self):
        return sum(1 for a in self.alpha if abs(a) > NORM_TOL) == 1

    def factors(self):
        """Single-qubit Jones vectors (q1, q2) if the input is a product state."""
        m = self.vector().reshape(2, 2)
        u, s, vh = np.linalg.svd(m)
        if s[1] > 1e-9:
            raise ConfigError("input spec is entangled; polarizers can only prepare product inputs")
        q1 = u[:, 0] * s[0]
        q2 = vh[0, :]
        # put the global phase on q1 and make its largest entry real-positive
        k = int(np.argmax(np.abs(q2)))
        ph = q2[k] / abs(q2[k])
        q2 = q2 / ph
        q1 = q1 * ph
        return q1, q2

    def label(self):
        for a, b in itertools.product(JONES, repeat=2):
            if np.allclose(InputSpec.from_tokens(a + b).vector(), self.vector(), atol=1e-12):
                return a + b
        return "(" + ",".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self.alpha) + ")"


def check_epsilon(epsilon):
    if epsilon is None or not (0.0 <= float(epsilon) <= EPSILON_MAX):
        raise ConfigError(f"pair amplitude epsilon must lie in [0, {EPSILON_MAX}], got {epsilon}")
    return float(epsilon)


def _mode_state(reg, photons, amplitude=1.0):
    """Single-term state with the given list of (label, pol) photons in tbin 0."""
    occ = np.zeros((1, len(reg)), dtype=np.uint8)
    for label, pol in photons:
        occ[0, reg.index((label, pol, 0))] += 1
    norm = math.prod(math.factorial(int(n)) for n in occ[0])
    # |n> = prod (a^dag)^n / sqrt(n!) |0>, so a^dag products carry sqrt(n!)
    return FockState(reg, occ, np.array([amplitude * math.sqrt(norm)], dtype=np.complex128))


def bell_phi_plus(reg, labels=("a3", "a4")):
    """(|H>|H> + |V>|V>)/sqrt(2) on two spatial labels."""
    x, y = labels
    reg.require_labels(x, y)
    h = 1.0 / math.sqrt(2.0)
    return add_all([(h, _mode_state(reg, [(x, "H"), (y, "H")])),
                    (h, _mode_state(reg, [(x, "V"), (y, "V")]))], reg)


def product_input(reg, spec, labels=("a1", "a2")):
    """General two-qubit input, one photon per spatial label."""
    x, y = labels
    reg.require_labels(x, y)
    parts = []
    for a, (p1, p2) in zip(spec.alpha, _BASIS):
        if a != 0:
            parts.append((a, _mode_state(reg, [(x, p1), (y, p2)])))
    return add_all(parts, reg)


def pair_term(reg, labels, n_pairs):
    """Normalized state proportional to ``K^n |0>`` for the phi+ pair operator K."""
    x, y = labels
    reg.require_labels(x, y)
    if n_pairs == 0:
        return _mode_state(reg, [])
    parts = []
    # K^n = sum_k C(n,k) (a_xH a_yH)^k (a_xV a_yV)^(n-k)
    for k in range(n_pairs + 1):
        photons = [(x, "H"), (y, "H")] * k + [(x, "V"), (y, "V")] * (n_pairs - k)
        parts.append((math.comb(n_pairs, k), _mode_state(reg, photons)))
    return add_all(parts, reg).normalized()


def spdc_emission(reg, labels_pair, epsilon, max_pairs=2):
    """Unnormalized truncated emission: vac + eps*phi+ + eps^2*(two-pair term)."""
    epsilon = check_epsilon(epsilon)
    if max_pairs not in (1, 2):
        raise ConfigError("max_pairs must be 1 or 2")
    parts = [(epsilon ** n, pair_term(reg, labels_pair, n)) for n in range(max_pairs + 1)]
    return add_all(parts, reg)


def preparation_filters(spec, labels=("a1", "a2"), dumps=("l1", "l2")):
    """Lossy polarizers (with beam dumps) preparing the product input ``spec``."""
    q1, q2 = spec.factors()
    return [
        filter_to_dump(labels[0], dumps[0], q1, f"prepare({labels[0]})"),
        filter_to_dump(labels[1], dumps[1], q2, f"prepare({labels[1]})"),
    ]


def double_pair_input(reg, spec, epsilon, labels=("a1", "a2")):
    """Four-photon two-pair component on the input modes after the preparation polarizers.

    The returned state has norm ``epsilon**2`` (the two-pair emission amplitude)
    and its ``weight`` is the probability that all four photons pass the
    polarizers.
    """
    epsilon = check_epsilon(epsilon)
    if epsilon == 0.0:
        return FockState.zero(reg)
    q1, q2 = spec.factors()
    state = pair_term(reg, labels, 2).scaled(epsilon ** 2)
    state = apply(state, pol_projector(labels[0], q1))
    if state.is_zero():
        return state
    return apply(state, pol_projector(labels[1], q2))


def emission_orders(epsilon, max_pairs=2, max_total=3, ancilla_epsilon=None):
    """(n_input, n_ancilla, probability) for every pass-emission order kept.

    Orders are weighted by ``eps_in**(2 n1) * eps_anc**(2 n2)`` and normalized
    over the kept set. ``ancilla_epsilon`` defaults to ``epsilon`` (balanced
    pumping of the two passes).
    """
    epsilon = check_epsilon(epsilon)
    ancilla_epsilon = epsilon if ancilla_epsilon is None else check_epsilon(ancilla_epsilon)
    orders = [
        (n1, n2, epsilon ** (2 * n1) * ancilla_epsilon ** (2 * n2))
        for n1 in range(max_pairs + 1)
        for n2 in range(max_pairs + 1)
        if n1 + n2 <= max_total
    ]
    z = sum(w for _, _, w in orders)
    return [(n1, n2, w / z) for n1, n2, w in orders]


def spdc_ensemble(reg, spec, epsilon, *, max_pairs=2, max_total=3, min_photons=4,
                  input_blocked=False, ancilla_blocked=False, ancilla_epsilon=None,
                  input_labels=("a1", "a2"), ancilla_labels=("a3", "a4"), dumps=("l1", "l2")):
    """Double-pass SPDC source as a weighted ensemble of pure states.

    Each crystal pass emits independently, so the emission orders
    ``(n_input, n_ancilla)`` form a classical mixture. The input pass goes
    through lossy preparation polarizers; the ancilla pass is left as emitted.
    A blocked pass still emits but its photons are absorbed. Orders reaching
    the gate with fewer than ``min_photons`` photons are omitted from the
    returned list (their probability stays in the normalization).
    ``epsilon`` is the input-pass amplitude; ``ancilla_epsilon`` (default
    equal) the ancilla-pass amplitude.

    Returns a list of ``((n_input, n_ancilla), probability, state)``.
    """
    reg.require_labels(*input_labels, *ancilla_labels, *dumps)
    filters = preparation_filters(spec, input_labels, dumps)
    ensemble = []
    for n1, n2, w in emission_orders(epsilon, max_pairs, max_total, ancilla_epsilon):
        k1 = 0 if input_blocked else n1
        k2 = 0 if ancilla_blocked else n2
        if 2 * (k1 + k2) < min_photons or w == 0.0:
            continue
        state = _product_same_registry(pair_term(reg, input_labels, k1),
                                       pair_term(reg, ancilla_labels, k2))
        for f in filters:
            state = apply(state, f)
        ensemble.append(((n1, n2), w, state))
    return ensemble


def _product_same_registry(s1, s2):
    """Product of two states occupying disjoint modes of one registry."""
    if s1.registry != s2.registry:
        raise RegistryError("states live on different registries")
    both = (s1.occ.sum(axis=0) > 0) & (s2.occ.sum(axis=0) > 0)
    if both.any():
        raise RegistryError("states overlap in occupied modes")
    rows = np.repeat(s1.occ, len(s2), axis=0) + np.tile(s2.occ, (len(s1), 1))
    # combining disjoint modes needs no bosonic re-weighting
    amp = np.outer(s1.amp, s2.amp).ravel()
    return FockState(s1.registry, rows, amp, s1.weight * s2.weight)


def ideal_initial_state(reg, spec, input_labels=("a1", "a2"), ancilla_labels=("a3", "a4")):
    """Deterministic single-photon inputs with a perfect phi+ ancilla."""
    sub_in = reg.subregistry(input_labels)
    sub_anc = reg.subregistry(ancilla_labels)
    return embed(tensor(product_input(sub_in, spec, input_labels), bell_phi_plus(sub_anc, ancilla_labels)), reg)
