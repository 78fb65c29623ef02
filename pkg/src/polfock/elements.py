"""Linear-optical elements as creation-operator rewrite rules.

An :class:`Element` carries a square matrix ``U`` over a list of mode
references. Applying it rewrites every creation operator
``a_j^dag -> sum_i U[i, j] a_i^dag`` and expands each occupation vector
multinomially. Mode references are ``(spatial, pol, tbin)``; a ``tbin`` of
``None`` means the element acts identically on every temporal bin of the
registry (all polarization optics are like this).

Phase conventions
-----------------
* PBS: H is transmitted, V is reflected, every coefficient is +1.
* ``rotate_pol(theta)``: ``a_H -> cos a_H + sin a_V``, ``a_V -> -sin a_H + cos a_V``.
* ``hwp(theta)`` (axis at theta): ``rotate_pol(2 theta)`` after a sign flip on V.
* Elements that move photons to new spatial labels (PBS) are the swap
  ``[[0, F^dag], [F, 0]]`` over input+output modes, with ``F`` the
  input-to-output block; output modes are expected to be empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import CutoffError, InvariantError, RegistryError
from .fock import PRUNE_TOL, FockState, JONES, linear_jones

UNITARY_TOL = 1e-10
DUMP_DIGITS = 15


def _ref(spatial, pol, tbin=None):
    return (spatial, pol, tbin)


def _fmt_ref(ref):
    spatial, pol, tbin = ref
    return f"{spatial}.{pol}.{'*' if tbin is None else tbin}"


def _parse_ref(text):
    spatial, pol, tbin = text.split(".")
    return (spatial, pol, None if tbin == "*" else int(tbin))


@dataclass(frozen=True, eq=False)
class Element:
    name: str
    modes: tuple
    matrix: np.ndarray = field(repr=False)
    kind: str = "unitary"

    def __post_init__(self):
        modes = tuple(_ref(*m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        U = np.array(self.matrix, dtype=np.complex128)
        if U.shape != (len(modes), len(modes)):
            raise ValueError(f"{self.name}: matrix shape {U.shape} does not match {len(modes)} modes")
        if len(set(modes)) != len(modes):
            raise RegistryError(f"{self.name}: repeated mode reference")
        generic = {m[2] is None for m in modes}
        if len(generic) > 1:
            raise ValueError(f"{self.name}: mixes per-tbin and explicit-tbin modes")
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)
        if self.kind not in ("unitary", "projector"):
            raise ValueError(f"unknown element kind {self.kind!r}")
        err = self.check_error()
        if err > UNITARY_TOL:
            raise InvariantError(f"{self.name}: fails {self.kind} check (error {err:.3g})")

    def check_error(self):
        """Max-norm deviation from unitarity, or from idempotent Hermitian."""
        U = self.matrix
        if self.kind == "unitary":
            return float(np.max(np.abs(U.conj().T @ U - np.eye(len(U)))))
        return float(max(np.max(np.abs(U @ U - U)), np.max(np.abs(U - U.conj().T))))

    @property
    def per_tbin(self):
        return bool(self.modes) and self.modes[0][2] is None

    @property
    def labels(self):
        return tuple(dict.fromkeys(m[0] for m in self.modes))

    def resolve(self, registry):
        """Registry columns and the (block-diagonal over tbins) matrix."""
        try:
            if self.per_tbin:
                cols = [registry.index((s, p, t)) for t in range(registry.tbins) for s, p, _ in self.modes]
                U = np.kron(np.eye(registry.tbins), self.matrix)
            else:
                cols = [registry.index(m) for m in self.modes]
                U = self.matrix
        except RegistryError as exc:
            raise RegistryError(f"{self.name}: {exc}") from None
        return np.array(cols, dtype=np.intp), np.ascontiguousarray(U)

    def inverse(self):
        if self.kind != "unitary":
            raise ValueError("projectors have no inverse")
        return Element(f"inverse({self.name})", self.modes, self.matrix.conj().T)

    def dump(self):
        """Labeled matrix text, 15 significant digits per real/imag part."""
        names = [_fmt_ref(m) for m in self.modes]
        lines = [f"element: {self.name}", f"kind: {self.kind}", "modes: " + " ".join(names)]
        for name, row in zip(names, self.matrix):
            cells = " ".join(
                f"{z.real:.{DUMP_DIGITS}g},{z.imag:.{DUMP_DIGITS}g}" for z in row
            )
            lines.append(f"{name}\t{cells}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        name = lines[0].split(":", 1)[1].strip()
        kind = lines[1].split(":", 1)[1].strip()
        modes = tuple(_parse_ref(t) for t in lines[2].split(":", 1)[1].split())
        rows = []
        for line in lines[3:3 + len(modes)]:
            _, cells = line.split("\t")
            rows.append([complex(float(c.split(",")[0]), float(c.split(",")[1])) for c in cells.split()])
        return cls(name, modes, np.array(rows, dtype=np.complex128).reshape(len(modes), len(modes)), kind)


def _embed_matrix(element, modes):
    """Matrix of ``element`` extended by identity onto the reference list ``modes``."""
    pos = {m: i for i, m in enumerate(modes)}
    big = np.eye(len(modes), dtype=np.complex128)
    idx = [pos[m] for m in element.modes]
    big[np.ix_(idx, idx)] = element.matrix
    return big


def compose(name, elements):
    """Single element equal to applying ``elements`` in order."""
    modes = tuple(dict.fromkeys(m for e in elements for m in e.modes))
    U = np.eye(len(modes), dtype=np.complex128)
    for e in elements:
        U = _embed_matrix(e, modes) @ U
    return Element(name, modes, U)


def identity(spatial):
    return Element(f"identity({spatial})", [(spatial, "H"), (spatial, "V")], np.eye(2))


def rotate_pol(spatial, angle):
    """Polarization rotation by ``angle`` degrees on every tbin of ``spatial``."""
    c, s = math.cos(math.radians(angle)), math.sin(math.radians(angle))
    U = np.array([[c, -s], [s, c]])
    return Element(f"rotate_pol({spatial},{angle:g})", [(spatial, "H"), (spatial, "V")], U)


def hwp(spatial, theta):
    """Half-wave plate with its fast axis at ``theta`` degrees."""
    t = math.radians(2 * theta)
    U = np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]])
    return Element(f"hwp({spatial},{theta:g})", [(spatial, "H"), (spatial, "V")], U)


def _route(name, inputs, outputs, forward):
    """Swap-form unitary sending input modes to output modes through ``forward``."""
    modes = list(inputs) + list(outputs)
    n = len(inputs)
    U = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    U[n:, :n] = forward
    U[:n, n:] = forward.conj().T
    return Element(name, modes, U)


def _check_distinct(*labels):
    if len(set(labels)) != len(labels):
        raise RegistryError(f"PBS ports must be distinct spatial labels, got {labels}")


def _pbs_ports(in1, in2, out1, out2):
    inputs = [(in1, "H"), (in1, "V"), (in2, "H"), (in2, "V")]
    outputs = [(out1, "H"), (out1, "V"), (out2, "H"), (out2, "V")]
    return inputs, outputs


def pbs_hv(in1, in2, out1, out2):
    """PBS transmitting H (in1->out1, in2->out2) and reflecting V (in1->out2, in2->out1)."""
    _check_distinct(in1, in2, out1, out2)
    inputs, outputs = _pbs_ports(in1, in2, out1, out2)
    F = np.zeros((4, 4))
    F[0, 0] = 1  # in1 H -> out1 H
    F[3, 1] = 1  # in1 V -> out2 V
    F[2, 2] = 1  # in2 H -> out2 H
    F[1, 3] = 1  # in2 V -> out1 V
    return _route(f"pbs_hv({in1},{in2}->{out1},{out2})", inputs, outputs, F)


def pbs_45(in1, in2, out1, out2):
    """PBS rotated by 45 degrees, built as rotate(-45) -> pbs_hv -> rotate(+45)."""
    _check_distinct(in1, in2, out1, out2)
    inputs, outputs = _pbs_ports(in1, in2, out1, out2)
    chain = compose("chain", [
        rotate_pol(in1, -45), rotate_pol(in2, -45),
        pbs_hv(in1, in2, out1, out2),
        rotate_pol(out1, 45), rotate_pol(out2, 45),
    ])
    pos = {m: i for i, m in enumerate(chain.modes)}
    F = chain.matrix[np.ix_([pos[_ref(*m)] for m in outputs], [pos[_ref(*m)] for m in inputs])]
    return _route(f"pbs_45({in1},{in2}->{out1},{out2})", inputs, outputs, F)


def pbs_45_direct(in1, in2, out1, out2):
    """The same PBS defined directly: transmit |+>, reflect |->."""
    _check_distinct(in1, in2, out1, out2)
    inputs, outputs = _pbs_ports(in1, in2, out1, out2)
    plus = np.array(JONES["+"])
    minus = np.array(JONES["-"])
    # single-photon map on (pol of in1, pol of in2) -> (pol of out1, pol of out2)
    F = np.zeros((4, 4), dtype=np.complex128)
    P_plus, P_minus = np.outer(plus, plus.conj()), np.outer(minus, minus.conj())
    F[0:2, 0:2] = P_plus   # in1 + -> out1
    F[2:4, 0:2] = P_minus  # in1 - -> out2
    F[2:4, 2:4] = P_plus   # in2 + -> out2
    F[0:2, 2:4] = P_minus  # in2 - -> out1
    return _route(f"pbs_45({in1},{in2}->{out1},{out2})", inputs, outputs, F)


def pol_projector(spatial, jones, name=None):
    v = np.asarray(jones, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    P = np.outer(v, v.conj())
    return Element(name or f"projector({spatial})", [(spatial, "H"), (spatial, "V")], P, "projector")


def polarizer(spatial, angle):
    """Ideal linear polarizer transmitting polarization at ``angle`` degrees.

    Non-unitary: apply() renormalizes and folds the transmitted probability
    into the state's ``weight``.
    """
    return pol_projector(spatial, linear_jones(angle), f"polarizer({spatial},{angle:g})")


def filter_to_dump(spatial, dump, jones, name=None):
    """Unitary polarizer model: the component orthogonal to ``jones`` goes to ``dump``.

    Unlike :func:`polarizer` this keeps absorbed photons as a traced-out
    environment, so multi-photon states lose photons one at a time.
    """
    _check_distinct(spatial, dump)
    v = np.asarray(jones, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    P = np.outer(v, v.conj())
    Q = np.eye(2) - P
    U = np.block([[P, Q], [Q, P]])
    modes = [(spatial, "H"), (spatial, "V"), (dump, "H"), (dump, "V")]
    return Element(name or f"filter({spatial}->{dump})", modes, U)


def beam_splitter(m1, m2, transmissivity=0.5):
    """Symmetric beam splitter ``[[t, i r], [i r, t]]`` between two single modes.

    ``m1`` and ``m2`` are mode references ``(spatial, pol[, tbin])``.
    """
    t = math.sqrt(transmissivity)
    r = math.sqrt(1.0 - transmissivity)
    U = np.array([[t, 1j * r], [1j * r, t]])
    return Element(f"bs({_fmt_ref(_ref(*m1))},{_fmt_ref(_ref(*m2))})", [m1, m2], U)


def linear(modes, matrix, name="linear"):
    """Arbitrary unitary on an explicit list of mode references."""
    return Element(name, modes, matrix)


@dataclass(frozen=True)
class DistinguishabilityModel:
    """Gaussian temporal-overlap model for an adjustable arrival-time delay.

    ``coherence_time`` is read as the FWHM of the single-photon wavepacket
    (after filtering), so ``sigma = coherence_time / sqrt(8 ln 2)`` and the
    overlap is ``exp(-delay**2 / (2 sigma**2))``. ``arm_offset`` is a residual
    extra delay on one arm of the ancilla pair (path mismatch left after
    alignment); it is zero for a perfectly balanced setup. All times in fs.
    """

    pump_duration: float = 200.0
    coherence_time: float = 700.0
    delay: float = 0.0
    arm_offset: float = 0.0

    def __post_init__(self):
        if not (self.pump_duration > 0 and self.coherence_time > 0):
            raise ValueError("pump duration and coherence time must be positive")
        if not (math.isfinite(self.delay) and math.isfinite(self.arm_offset)):
            raise ValueError("delays must be finite")

    @property
    def sigma(self):
        return self.coherence_time / math.sqrt(8.0 * math.log(2.0))

    def overlap(self, extra=0.0):
        return math.exp(-(self.delay + extra) ** 2 / (2.0 * self.sigma ** 2))

    def with_delay(self, delay):
        return replace(self, delay=float(delay))

    def delay_for_overlap(self, v):
        """Non-negative delay giving overlap ``v`` in (0, 1]."""
        if not 0.0 < v <= 1.0:
            raise ValueError("overlap must lie in (0, 1]")
        return self.sigma * math.sqrt(-2.0 * math.log(v))


def delay_mix(spatial, model, overlap=None, offset=0.0):
    """Split the tbin-0 wavepacket of ``spatial`` into overlapping/orthogonal parts.

    ``a_{p,0} -> v a_{p,0} + sqrt(1 - v^2) a_{p,1}``, completed to a rotation on
    the two lowest temporal bins, with ``v = model.overlap(offset)`` unless
    given. Requires a registry with ``tbins >= 2``.
    """
    v = model.overlap(offset) if overlap is None else float(overlap)
    if not 0.0 <= v <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    w = math.sqrt(max(0.0, 1.0 - v * v))
    block = np.array([[v, -w], [w, v]])
    U = np.zeros((4, 4))
    U[0:2, 0:2] = block
    U[2:4, 2:4] = block
    modes = [(spatial, "H", 0), (spatial, "H", 1), (spatial, "V", 0), (spatial, "V", 1)]
    return Element(f"delay_mix({spatial},v={v:.{DUMP_DIGITS}g})", modes, U)


def apply(state, element, backend=None):
    """Evolve ``state`` through ``element``.

    Unitary elements preserve photon number and norm. Projectors go through
    the renormalizing path: the result keeps the input norm and its
    ``weight`` is multiplied by the transmitted fraction.
    """
    registry = state.registry
    if element.per_tbin is False and any(m[2] is not None and m[2] >= registry.tbins for m in element.modes):
        raise RegistryError(f"{element.name} needs tbins >= 2, registry has {registry.tbins}")
    cols, U = element.resolve(registry)
    if state.max_photons() > registry.n_max:
        raise CutoffError("state exceeds the photon-number cutoff")
    if len(state) == 0:
        return state
    rows, amps = kernels.expand(state.occ, state.amp, cols, U, backend)
    rows, amps = kernels.merge_terms(rows, amps, PRUNE_TOL)
    if element.kind == "unitary":
        return FockState(registry, rows, amps, state.weight, canonical=True)
    before = state.norm2()
    after = float(np.sum(np.abs(amps) ** 2))
    kept = after / before if before > 0 else 0.0
    if after == 0.0:
        return FockState.zero(registry, 0.0)
    amps = amps * math.sqrt(before / after)
    return FockState(registry, rows, amps, state.weight * kept, canonical=True)


def apply_all(state, elements, backend=None):
    for e in elements:
        state = apply(state, e, backend)
    return state
