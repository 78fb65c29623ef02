"""Detectors, heralding, feed-forward corrections and figures of merit.

All probabilities are exact: a detection pattern's probability is the summed
squared amplitude of every Fock term consistent with it. Polarization analysis
at angle ``theta`` is done by rotating the analysed label by ``-theta`` and
reading H/V, so the "H-like" outcome is linear polarization at ``theta``.

Classical mixtures (temporal-bin environments, SPDC emission orders) are
handled as ensembles: lists of ``(probability, FockState)`` pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .elements import apply, rotate_pol
from .errors import ConfigError, InvariantError
from .fock import FockState, ModeRegistry, inner_product
from .sources import InputSpec

QUBIT_BASIS = ("HH", "HV", "VH", "VV")
HERALD_LABELS = ("b3", "b4")
OUTPUT_LABELS = ("b1", "b2")
NORM_CHECK_TOL = 1e-9

PAULIS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "XZ": np.array([[0, -1], [1, 0]], dtype=np.complex128),
}
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)


class DetectorKind(Enum):
    THRESHOLD = "threshold"
    NUMBER_RESOLVING = "number_resolving"


@dataclass(frozen=True)
class HeraldRequirement:
    label: str
    angle: float = 0.0
    outcome: str = "H"
    detector: DetectorKind = DetectorKind.NUMBER_RESOLVING

    def __post_init__(self):
        if self.outcome not in ("H", "V"):
            raise ConfigError(f"herald outcome must be H or V, got {self.outcome!r}")
        object.__setattr__(self, "detector", DetectorKind(self.detector))


@dataclass(frozen=True)
class HeraldRule:
    """Post-selection: one photon at each herald label with the required
    polarization, and one photon in each output label (four-fold condition).

    With ``threshold_inference`` the lab's weaker conditioning is used instead:
    a threshold herald clicks on >= 1 photon of the required polarization and
    an output counts as present on >= 1 photon of any polarization.
    """

    requirements: tuple
    outputs: tuple = OUTPUT_LABELS
    threshold_inference: bool = False

    def __post_init__(self):
        reqs = tuple(self.requirements)
        object.__setattr__(self, "requirements", reqs)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        labels = [r.label for r in reqs]
        if not labels or len(set(labels)) != len(labels):
            raise ConfigError("herald labels must be non-empty and distinct")
        if not set(labels) <= set(HERALD_LABELS):
            raise ConfigError(f"herald labels must be a subset of {HERALD_LABELS}, got {labels}")
        if set(self.outputs) & set(labels):
            raise ConfigError("output labels overlap herald labels")
        if not set(self.outputs) <= set(OUTPUT_LABELS):
            raise ConfigError(f"output labels must be a subset of {OUTPUT_LABELS}")

    @classmethod
    def passive(cls, detector=DetectorKind.NUMBER_RESOLVING, threshold_inference=False,
                angles=(0.0, 0.0)):
        """(H, H) at (b3, b4): the outcome needing no correction."""
        return cls(
            tuple(HeraldRequirement(lab, ang, "H", detector) for lab, ang in zip(HERALD_LABELS, angles)),
            OUTPUT_LABELS,
            threshold_inference,
        )

    @property
    def labels(self):
        return tuple(r.label for r in self.requirements)

    @property
    def outcomes(self):
        return tuple(r.outcome for r in self.requirements)

    def with_outcomes(self, outcomes):
        reqs = tuple(
            HeraldRequirement(r.label, r.angle, o, r.detector)
            for r, o in zip(self.requirements, outcomes)
        )
        return HeraldRule(reqs, self.outputs, self.threshold_inference)

    def describe(self):
        parts = [f"{r.label}:{r.angle:g}:{r.outcome}:{r.detector.value}" for r in self.requirements]
        return " ".join(parts)

    @classmethod
    def parse(cls, text, threshold_inference=False):
        reqs = []
        for item in text.split():
            label, angle, outcome, det = item.split(":")
            reqs.append(HeraldRequirement(label, float(angle), outcome, DetectorKind(det)))
        return cls(tuple(reqs), OUTPUT_LABELS, threshold_inference)


@dataclass(frozen=True)
class Port:
    """A polarization-analysed detector on one spatial label."""

    label: str
    angle: float = 0.0
    outcome: str | None = "H"  # None: any polarization
    detector: DetectorKind = DetectorKind.NUMBER_RESOLVING


def as_ensemble(obj):
    """Normalize a FockState or an ensemble to a list of (probability, state)."""
    if isinstance(obj, FockState):
        return [(1.0, obj)]
    out = []
    for item in obj:
        if isinstance(item, FockState):
            out.append((1.0, item))
        elif len(item) == 3:
            out.append((float(item[1]), item[2]))
        else:
            out.append((float(item[0]), item[1]))
    return out


def _rotated(state, angles):
    for label, angle in sorted(angles.items()):
        if angle:
            state = apply(state, rotate_pol(label, -angle))
    return state


def _port_mask(state, port, exact):
    reg = state.registry
    total = state.occ[:, reg.label_indices(port.label)].sum(axis=1, dtype=np.int64)
    if port.outcome is None:
        return total == 1 if exact else total >= 1
    hits = state.occ[:, reg.label_indices(port.label, port.outcome)].sum(axis=1, dtype=np.int64)
    if exact:
        return (total == 1) & (hits == 1)
    if port.detector is DetectorKind.THRESHOLD:
        return hits >= 1
    return hits == 1


def _check_angles(ports):
    angles = {}
    for p in ports:
        if angles.setdefault(p.label, p.angle) != p.angle:
            raise ValueError(f"conflicting analysis angles on {p.label}")
    return angles


def _pattern_mask(state, ports, exact):
    mask = np.ones(len(state), dtype=bool)
    for p in ports:
        mask &= _port_mask(state, p, exact)
    return mask


def pattern_probability(states, ports, exact=True):
    """Probability of a joint detection pattern over an ensemble."""
    angles = _check_angles(ports)
    total = 0.0
    for w, s in as_ensemble(states):
        if s.is_zero() or w == 0.0:
            continue
        r = _rotated(s, angles)
        mask = _pattern_mask(r, ports, exact)
        total += w * r.weight * float(np.sum(np.abs(r.amp[mask]) ** 2))
    return total


def joint_probabilities(states, fixed_ports, scan_labels, angles, exact=True):
    """``P(fixed ports, scan_labels -> (X, Y))`` for every X, Y in {H, V}.

    Returns an array ordered like :data:`QUBIT_BASIS` (for two scan labels).
    The rotations are applied once per ensemble member.
    """
    rot = _check_angles(fixed_ports)
    for lab, ang in zip(scan_labels, angles):
        rot[lab] = ang
    out = np.zeros(2 ** len(scan_labels))
    for w, s in as_ensemble(states):
        if s.is_zero() or w == 0.0:
            continue
        r = _rotated(s, rot)
        base = _pattern_mask(r, fixed_ports, exact)
        probs = np.abs(r.amp) ** 2
        for k, pols in enumerate(itertools.product("HV", repeat=len(scan_labels))):
            mask = base.copy()
            for lab, pol in zip(scan_labels, pols):
                mask &= _port_mask(r, Port(lab, 0.0, pol, DetectorKind.THRESHOLD), exact)
            out[k] += w * r.weight * float(np.sum(probs[mask]))
    return out


def herald_ports(rule):
    return [Port(r.label, r.angle, r.outcome, r.detector) for r in rule.requirements]


def outcome_distribution(state, labels):
    """Probability of every (n_H, n_V) count pattern over ``labels``."""
    reg = state.registry
    cols = [(reg.label_indices(lab, "H"), reg.label_indices(lab, "V")) for lab in labels]
    probs = np.abs(state.amp) ** 2
    dist = {}
    for t in range(len(state)):
        key = tuple(
            (int(state.occ[t, h].sum()), int(state.occ[t, v].sum())) for h, v in cols
        )
        dist[key] = dist.get(key, 0.0) + state.weight * float(probs[t])
    return dict(sorted(dist.items()))


@dataclass
class HeraldResult:
    """Outcome of post-selection.

    ``members`` lists ``(probability, env_key, state)``: the normalized
    conditional state of the output labels for each distinguishable
    configuration of the unobserved modes.
    """

    probability: float
    members: list
    registry: ModeRegistry | None
    rule: HeraldRule

    @property
    def is_pure(self):
        return len(self.members) == 1

    @property
    def state(self):
        if not self.members:
            return FockState.zero(self.registry)
        if len(self.members) > 1:
            raise ValueError("conditional output is a mixture; use density()")
        return self.members[0][2]

    def density(self):
        """4x4 polarization density matrix of (b1, b2), temporal bins traced out."""
        rho = np.zeros((4, 4), dtype=np.complex128)
        for p, _, s in self.members:
            psi = _pol_tbin_tensor(s, self.rule.outputs)
            m = psi.transpose(0, 2, 1, 3).reshape(4, -1)  # (p1 p2) x (t1 t2)
            rho += p * (m @ m.conj().T)
        return rho


def _pol_tbin_tensor(state, labels):
    reg = state.registry
    T = reg.tbins
    psi = np.zeros((2, T, 2, T), dtype=np.complex128)
    idx = {}
    for a, lab in enumerate(labels):
        for pi, pol in enumerate("HV"):
            for t in range(T):
                idx[reg.index((lab, pol, t))] = (a, pi, t)
    for row, amp in zip(state.occ, state.amp):
        occupied = np.flatnonzero(row)
        if row.sum() != 2 or len(occupied) != 2:
            raise ValueError("density() needs exactly one photon in each output label")
        (a1, p1, t1), (a2, p2, t2) = sorted(idx[i] for i in occupied)
        if (a1, a2) != (0, 1):
            raise ValueError("density() needs exactly one photon in each output label")
        psi[p1, t1, p2, t2] += amp
    return psi


def herald(state, rule):
    """Project onto the herald outcome and the four-fold condition.

    Returns a :class:`HeraldResult` whose probability is the branch probability
    (including each state's ``weight``). A zero-probability branch yields an
    empty member list rather than an error.
    """
    exact = not rule.threshold_inference
    ports = herald_ports(rule)
    out_ports = [Port(lab, 0.0, None) for lab in rule.outputs]
    angles = _check_angles(ports)
    groups = {}
    registry_out = None
    probability = 0.0
    for m_idx, (w, s) in enumerate(as_ensemble(state)):
        reg = s.registry
        out_cols = sorted(i for lab in rule.outputs for i in reg.label_indices(lab))
        env_cols = [i for i in range(len(reg)) if i not in set(out_cols)]
        registry_out = reg.subregistry(tuple(lab for lab in reg.labels if lab in rule.outputs))
        if s.is_zero() or w == 0.0:
            continue
        r = _rotated(s, angles)
        mask = _pattern_mask(r, ports + out_ports, exact)
        if not mask.any():
            continue
        scale = math.sqrt(w * r.weight)
        occ = r.occ[mask]
        amp = r.amp[mask] * scale
        probability += float(np.sum(np.abs(amp) ** 2))
        env = occ[:, env_cols]
        for t in range(len(occ)):
            key = (m_idx, env[t].tobytes())
            rows, amps = groups.setdefault(key, ([], []))
            rows.append(occ[t, out_cols])
            amps.append(amp[t])
    members = []
    for key, (rows, amps) in groups.items():
        st = FockState(registry_out, np.array(rows), np.array(amps))
        p = st.norm2()
        if p == 0.0:
            continue
        members.append((p / probability, key, st.normalized()))
    return HeraldResult(probability, members, registry_out, rule)


def qubit_vector(state, labels=OUTPUT_LABELS):
    """Amplitudes over |HH>, |HV>, |VH>, |VV> of a one-photon-per-label state (tbin 0)."""
    reg = state.registry
    vec = np.zeros(4, dtype=np.complex128)
    index = {}
    for k, (p1, p2) in enumerate(QUBIT_BASIS):
        occ = np.zeros(len(reg), dtype=np.uint8)
        occ[reg.index((labels[0], p1, 0))] = 1
        occ[reg.index((labels[1], p2, 0))] = 1
        index[occ.tobytes()] = k
    for row, a in zip(state.occ, state.amp):
        k = index.get(np.ascontiguousarray(row).tobytes())
        if k is None:
            raise ValueError("state is not a two-qubit polarization state in tbin 0")
        vec[k] = a
    return vec


def two_qubit_state(registry, vec, labels=OUTPUT_LABELS):
    """FockState on ``registry`` with amplitudes ``vec`` over HH, HV, VH, VV."""
    rows, amps = [], []
    for a, (p1, p2) in zip(vec, QUBIT_BASIS):
        occ = np.zeros(len(registry), dtype=np.uint8)
        occ[registry.index((labels[0], p1, 0))] = 1
        occ[registry.index((labels[1], p2, 0))] = 1
        rows.append(occ)
        amps.append(a)
    return FockState(registry, np.array(rows), np.array(amps, dtype=np.complex128))


def fidelity(conditional_state, target_state):
    """|<target|out>|^2 for two unit-norm pure states."""
    for s in (conditional_state, target_state):
        if abs(s.norm2() - 1.0) > NORM_CHECK_TOL:
            raise ValueError(f"fidelity needs unit-norm states (norm^2 = {s.norm2():.12g})")
    return abs(inner_product(target_state, conditional_state)) ** 2


def density_fidelity(rho, target_vec):
    v = np.asarray(target_vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    tr = np.trace(rho).real
    if tr <= 0:
        raise ValueError("empty density matrix")
    return float((v.conj() @ rho @ v).real / tr)


def equal_up_to_phase(a, b, tol=1e-10):
    """True if ``a == exp(i phi) b`` elementwise to ``tol`` for the best phi."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b))) <= tol


# feed-forward ---------------------------------------------------------------


@dataclass
class FeedForwardTable:
    """Pauli corrections on (b1 control, b2 target) per herald outcome."""

    corrections: dict
    probabilities: dict
    maps: dict = field(repr=False)

    @property
    def total_success_probability(self):
        return sum(self.probabilities.values())

    def correction(self, outcome):
        p1, p2 = self.corrections[tuple(outcome)]
        return np.kron(PAULIS[p1], PAULIS[p2])

    def corrected_map(self, outcome):
        return self.correction(outcome) @ self.maps[tuple(outcome)]

    def describe(self):
        return "\n".join(
            f"{o[0]}{o[1]} -> {c[0]},{c[1]}  p={self.probabilities[o]:.12g}"
            for o, c in self.corrections.items()
        )


def conditional_map(circuit, rule):
    """4x4 map from computational inputs to unnormalized (b1, b2) amplitudes.

    Column k holds ``sqrt(p_k)`` times the conditional output for input
    ``QUBIT_BASIS[k]``; the herald environment must be identical for all
    inputs so the columns share one phase reference.
    """
    M = np.zeros((4, 4), dtype=np.complex128)
    probs = np.zeros(4)
    env = None
    for k, label in enumerate(QUBIT_BASIS):
        ensemble = as_ensemble(circuit.prepare(InputSpec.from_tokens(label)))
        if len(ensemble) != 1:
            raise ConfigError("the conditional map needs ideal (pure) sources")
        res = herald(circuit.evolve(ensemble[0][1]), rule)
        probs[k] = res.probability
        if res.probability == 0.0:
            continue
        if not res.is_pure:
            raise ConfigError("the conditional map needs an indistinguishable (pure) circuit")
        _, key, st = res.members[0]
        if env is None:
            env = key
        elif key != env:
            raise InvariantError("herald environment differs between inputs")
        M[:, k] = math.sqrt(res.probability) * qubit_vector(st, rule.outputs)
    return M, probs


def derive_feed_forward(circuit, tol=1e-10):
    """Brute-force the Pauli pair that turns each herald branch into CNOT.

    Raises :class:`InvariantError` if some outcome admits no correction.
    """
    rule = circuit.herald
    corrections, probabilities, maps = {}, {}, {}
    for outcome in itertools.product("HV", repeat=len(rule.requirements)):
        M, probs = conditional_map(circuit, rule.with_outcomes(outcome))
        p = probs.mean()
        if p <= 0 or np.max(np.abs(probs - p)) > tol:
            raise InvariantError(
                f"herald outcome {outcome}: branch probabilities differ between inputs {probs}"
            )
        N = M / math.sqrt(p)
        found = None
        for p1, p2 in itertools.product(PAULIS, repeat=2):
            C = np.kron(PAULIS[p1], PAULIS[p2]) @ N
            if equal_up_to_phase(C, CNOT, tol):
                found = (p1, p2)
                break
        if found is None:
            raise InvariantError(f"no Pauli correction makes herald outcome {outcome} a CNOT")
        corrections[outcome] = found
        probabilities[outcome] = float(p)
        maps[outcome] = N
    return FeedForwardTable(corrections, probabilities, maps)


# tables and scans ------------------------------------------------------------


@dataclass
class CoincidenceTable:
    inputs: tuple
    outputs: tuple
    joint: np.ndarray  # unnormalized herald-joint probabilities
    angles: tuple

    @property
    def conditional(self):
        sums = self.joint.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(sums > 0, self.joint / np.where(sums > 0, sums, 1), 0.0)


def coincidence_table(circuit, inputs=QUBIT_BASIS, angles=(0.0, 0.0)):
    """Herald-conditioned output statistics of (b1, b2) for each input.

    Rows follow ``inputs``; columns are the four analysed outcome pairs
    HH, HV, VH, VV at the given analysis angles.
    """
    rule = circuit.herald
    exact = not rule.threshold_inference
    joint = np.zeros((len(inputs), 4))
    for r, token in enumerate(inputs):
        spec = token if isinstance(token, InputSpec) else InputSpec.parse(token)
        ensemble = [(w, circuit.evolve(s)) for w, s in as_ensemble(circuit.prepare(spec))]
        joint[r] = joint_probabilities(ensemble, herald_ports(rule), rule.outputs, angles, exact)
    labels = tuple(t.label() if isinstance(t, InputSpec) else t for t in inputs)
    return CoincidenceTable(labels, QUBIT_BASIS, joint, tuple(angles))


@dataclass(frozen=True)
class HomPoint:
    delay: float
    overlap: float
    desired: float
    spurious: float

    @property
    def visibility(self):
        total = self.desired + self.spurious
        return (self.desired - self.spurious) / total if total > 0 else 0.0


def hom_scan(circuit, delays, spec=None):
    """Herald-conditioned +/- basis correlations of (b1, b2) versus delay.

    ``desired`` is the joint probability of the correlated outcomes (++ and
    --), ``spurious`` of the anticorrelated ones (+- and -+). The circuit must
    carry a distinguishability model on a registry with two temporal bins.
    """
    if circuit.registry.tbins < 2 or circuit.distinguishability is None:
        raise ConfigError("hom_scan needs tbins >= 2 and a distinguishability model")
    spec = spec or InputSpec.from_tokens("+H")
    points = []
    for d in delays:
        c = circuit.with_delay(float(d))
        table = coincidence_table(c, inputs=(spec,), angles=(45.0, 45.0))
        pp, pm, mp, mm = table.joint[0]
        points.append(HomPoint(float(d), c.distinguishability.overlap(), pp + mm, pm + mp))
    return points


def scan_visibility(points):
    """Dip visibility (max - min) / (max + min) of the spurious rate over a scan."""
    s = [p.spurious for p in points]
    hi, lo = max(s), min(s)
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
