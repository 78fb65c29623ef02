"""Sparse bosonic Fock states over a registry of polarization modes.

A mode is a (spatial label, polarization, temporal bin) triple. A
:class:`ModeRegistry` gives every mode a dense index; a :class:`FockState` is a
sparse map from occupation vectors over those indices to complex amplitudes,
stored as two numpy arrays sorted in canonical (lexicographic) order.

States are immutable; every operation returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CutoffError, RegistryError
from .kernels import merge_terms

PRUNE_TOL = 1e-12
N_MAX_DEFAULT = 6

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class Polarization(Enum):
    H = "H"
    V = "V"


#: Jones vectors (H, V components) for the shorthand polarization tokens.
#: R and L follow the (H -/+ iV)/sqrt(2) convention.
JONES = {
    "H": (1.0 + 0j, 0j),
    "V": (0j, 1.0 + 0j),
    "+": (_SQRT_HALF + 0j, _SQRT_HALF + 0j),
    "-": (_SQRT_HALF + 0j, -_SQRT_HALF + 0j),
    "R": (_SQRT_HALF + 0j, -1j * _SQRT_HALF),
    "L": (_SQRT_HALF + 0j, 1j * _SQRT_HALF),
}


def linear_jones(angle):
    """Jones vector of linear polarization at ``angle`` degrees from H."""
    theta = math.radians(angle)
    return (complex(math.cos(theta)), complex(math.sin(theta)))


@dataclass(frozen=True, order=True)
class Mode:
    spatial: str
    pol: str  # "H" or "V"
    tbin: int = 0

    def __post_init__(self):
        pol = self.pol.value if isinstance(self.pol, Polarization) else self.pol
        if pol not in ("H", "V"):
            raise RegistryError(f"polarization must be H or V, got {self.pol!r}")
        object.__setattr__(self, "pol", pol)
        if self.tbin < 0:
            raise RegistryError("temporal bin must be non-negative")

    def __str__(self):
        return f"{self.spatial}.{self.pol}.{self.tbin}"

    @classmethod
    def parse(cls, text):
        try:
            spatial, pol, tbin = text.split(".")
            return cls(spatial, pol, int(tbin))
        except ValueError as exc:
            raise RegistryError(f"cannot parse mode {text!r}") from exc


class ModeRegistry:
    """Dense indexing of (spatial, pol, tbin) modes.

    Modes are ordered label-major, then H before V, then by temporal bin.
    This order is the canonical layout of every occupation vector.
    """

    def __init__(self, labels, tbins=1, n_max=N_MAX_DEFAULT):
        labels = tuple(labels)
        if not labels:
            raise RegistryError("at least one spatial label is required")
        if len(set(labels)) != len(labels):
            raise RegistryError(f"duplicate spatial label in {labels}")
        for label in labels:
            if not isinstance(label, str) or not label or any(c in label for c in " \t,.=*"):
                raise RegistryError(f"invalid spatial label {label!r}")
        if int(tbins) < 1:
            raise RegistryError("tbins must be >= 1")
        self.labels = labels
        self.tbins = int(tbins)
        self.n_max = int(n_max)
        self.modes = tuple(
            Mode(label, pol, t) for label in labels for pol in ("H", "V") for t in range(self.tbins)
        )
        self._index = {m: i for i, m in enumerate(self.modes)}

    def __len__(self):
        return len(self.modes)

    def __eq__(self, other):
        if not isinstance(other, ModeRegistry):
            return NotImplemented
        return (self.labels, self.tbins, self.n_max) == (other.labels, other.tbins, other.n_max)

    def __hash__(self):
        return hash((self.labels, self.tbins, self.n_max))

    def __repr__(self):
        return f"ModeRegistry({list(self.labels)}, tbins={self.tbins}, n_max={self.n_max})"

    def index(self, mode):
        if not isinstance(mode, Mode):
            mode = Mode(*mode)
        try:
            return self._index[mode]
        except KeyError:
            raise RegistryError(f"mode {mode} is not registered") from None

    def has_label(self, label):
        return label in self.labels

    def require_labels(self, *labels):
        missing = [lab for lab in labels if lab not in self.labels]
        if missing:
            raise RegistryError(f"spatial labels {missing} are not registered")

    def label_indices(self, label, pol=None):
        """Indices of every mode of ``label`` (optionally one polarization), all tbins."""
        self.require_labels(label)
        pols = ("H", "V") if pol is None else (pol,)
        return [self._index[Mode(label, p, t)] for p in pols for t in range(self.tbins)]

    def merged(self, other):
        if self.tbins != other.tbins:
            raise RegistryError("cannot merge registries with different tbins")
        overlap = set(self.labels) & set(other.labels)
        if overlap:
            raise RegistryError(f"registries share spatial labels {sorted(overlap)}")
        return ModeRegistry(self.labels + other.labels, self.tbins, max(self.n_max, other.n_max))

    def subregistry(self, labels):
        self.require_labels(*labels)
        return ModeRegistry(labels, self.tbins, self.n_max)

    def header(self):
        return f"labels={','.join(self.labels)} tbins={self.tbins} n_max={self.n_max}"


def registry_create(spatial_labels, tbins=1, n_max=N_MAX_DEFAULT):
    return ModeRegistry(spatial_labels, tbins, n_max)


class FockState:
    """Immutable sparse superposition of occupation vectors.

    ``weight`` is the accumulated probability of the branch this state
    represents (it shrinks when projectors are applied), so that
    ``weight * norm2()`` is the branch probability.
    """

    __slots__ = ("registry", "occ", "amp", "weight")

    def __init__(self, registry, occ, amp, weight=1.0, *, canonical=False):
        M = len(registry)
        occ = np.asarray(occ, dtype=np.uint8).reshape(-1, M)
        amp = np.asarray(amp, dtype=np.complex128).reshape(-1)
        if occ.shape[0] != amp.shape[0]:
            raise ValueError("occupation rows and amplitudes differ in length")
        if not canonical:
            occ, amp = merge_terms(occ, amp, PRUNE_TOL)
        if occ.shape[0] and int(occ.sum(axis=1, dtype=np.int64).max()) > registry.n_max:
            raise CutoffError(
                f"state holds more than n_max={registry.n_max} photons"
            )
        occ.setflags(write=False)
        amp.setflags(write=False)
        self.registry = registry
        self.occ = occ
        self.amp = amp
        self.weight = float(weight)

    @classmethod
    def from_terms(cls, registry, terms, weight=1.0):
        """Build a state from a ``{occupation tuple: amplitude}`` mapping."""
        if not terms:
            return cls.zero(registry, weight)
        occ = np.array([tuple(k) for k in terms], dtype=np.int64)
        if occ.ndim != 2 or occ.shape[1] != len(registry):
            raise RegistryError("occupation vectors do not match registry size")
        if (occ < 0).any():
            raise ValueError("negative photon count")
        if occ.sum(axis=1).max() > registry.n_max:
            raise CutoffError(f"state holds more than n_max={registry.n_max} photons")
        return cls(registry, occ.astype(np.uint8), list(terms.values()), weight)

    @classmethod
    def zero(cls, registry, weight=0.0):
        M = len(registry)
        return cls(registry, np.zeros((0, M), np.uint8), np.zeros(0, np.complex128), weight,
                   canonical=True)

    @classmethod
    def vacuum(cls, registry):
        M = len(registry)
        return cls(registry, np.zeros((1, M), np.uint8), np.ones(1, np.complex128), canonical=True)

    def __len__(self):
        return self.occ.shape[0]

    def __iter__(self):
        for row, a in zip(self.occ, self.amp):
            yield tuple(int(x) for x in row), complex(a)

    @property
    def terms(self):
        return dict(iter(self))

    def amplitude(self, occupation):
        target = np.asarray(occupation, dtype=np.uint8)
        hits = np.flatnonzero((self.occ == target).all(axis=1))
        return complex(self.amp[hits[0]]) if len(hits) else 0j

    def norm2(self):
        return float(np.sum(self.amp.real ** 2 + self.amp.imag ** 2))

    def norm(self):
        return math.sqrt(self.norm2())

    def probability(self):
        return self.weight * self.norm2()

    def is_zero(self):
        return len(self) == 0

    def photon_numbers(self):
        return self.occ.sum(axis=1, dtype=np.int64)

    def max_photons(self):
        return int(self.photon_numbers().max()) if len(self) else 0

    def scaled(self, c):
        return FockState(self.registry, self.occ, self.amp * complex(c), self.weight)

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return FockState(self.registry, self.occ, self.amp / n, self.weight, canonical=True)

    def with_weight(self, weight):
        return FockState(self.registry, self.occ, self.amp, weight, canonical=True)

    def __repr__(self):
        return f"<FockState {len(self)} terms over {len(self.registry)} modes, weight={self.weight:g}>"

    def describe(self, limit=8):
        """Human-readable ket listing, largest amplitudes first."""
        order = np.argsort(-np.abs(self.amp), kind="stable")[:limit]
        parts = []
        for t in order:
            occupied = [
                f"{self.registry.modes[i]}" + (f"^{n}" if n > 1 else "")
                for i, n in enumerate(self.occ[t]) if n
            ]
            parts.append(f"({self.amp[t]:.6g})|{' '.join(occupied) or 'vac'}>")
        return " + ".join(parts)

    # text serialization -------------------------------------------------

    def to_text(self):
        lines = [f"# fockstate {self.registry.header()} weight={self.weight!r}"]
        for row, a in zip(self.occ, self.amp):
            occ = ",".join(str(int(x)) for x in row)
            lines.append(f"{occ}\t{float(a.real)!r}\t{float(a.imag)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# fockstate "):
            raise ValueError("missing fockstate header")
        fields = dict(kv.split("=", 1) for kv in lines[0].split()[2:])
        registry = ModeRegistry(fields["labels"].split(","), int(fields["tbins"]),
                                int(fields["n_max"]))
        M = len(registry)
        occ = np.zeros((len(lines) - 1, M), dtype=np.uint8)
        amp = np.zeros(len(lines) - 1, dtype=np.complex128)
        for t, line in enumerate(lines[1:]):
            counts, re, im = line.split("\t")
            occ[t] = [int(x) for x in counts.split(",")]
            amp[t] = complex(float(re), float(im))
        return cls(registry, occ, amp, float(fields["weight"]), canonical=True)


def _same_registry(s1, s2):
    if s1.registry != s2.registry:
        raise RegistryError("states live on different mode registries")


def state_single(registry, mode):
    """One photon in ``mode`` with amplitude 1."""
    occ = np.zeros((1, len(registry)), dtype=np.uint8)
    occ[0, registry.index(mode)] = 1
    return FockState(registry, occ, np.ones(1, np.complex128), canonical=True)


def superpose(c1, s1, c2, s2):
    """Termwise ``c1*s1 + c2*s2`` (not renormalized)."""
    _same_registry(s1, s2)
    if s1.weight != s2.weight:
        raise ValueError("cannot superpose branches with different weights")
    occ = np.concatenate([s1.occ, s2.occ])
    amp = np.concatenate([complex(c1) * s1.amp, complex(c2) * s2.amp])
    return FockState(s1.registry, occ, amp, s1.weight)


def add_all(states_and_coeffs, registry):
    """Linear combination of many states on one registry."""
    rows, amps = [np.zeros((0, len(registry)), np.uint8)], [np.zeros(0, np.complex128)]
    for c, s in states_and_coeffs:
        if s.registry != registry:
            raise RegistryError("states live on different mode registries")
        rows.append(s.occ)
        amps.append(complex(c) * s.amp)
    return FockState(registry, np.concatenate(rows), np.concatenate(amps))


def inner_product(s1, s2):
    """<s1|s2>, conjugate-linear in the first argument."""
    _same_registry(s1, s2)
    if len(s1) == 0 or len(s2) == 0:
        return 0j
    M = len(s1.registry)
    if M == 0:
        return complex(np.conj(s1.amp[0]) * s2.amp[0])
    k1 = s1.occ.view(np.dtype((np.void, M))).ravel()
    k2 = s2.occ.view(np.dtype((np.void, M))).ravel()
    _, i1, i2 = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(s1.amp[i1]) * s2.amp[i2]))


def tensor(s1, s2):
    """Product state over the merged registry (labels of s1 first)."""
    registry = s1.registry.merged(s2.registry)
    n1, n2 = len(s1), len(s2)
    occ = np.concatenate(
        [np.repeat(s1.occ, n2, axis=0), np.tile(s2.occ, (n1, 1))], axis=1
    )
    if occ.shape[0] and int(occ.sum(axis=1, dtype=np.int64).max()) > registry.n_max:
        raise CutoffError(f"product state exceeds n_max={registry.n_max}")
    amp = np.outer(s1.amp, s2.amp).ravel()
    return FockState(registry, occ, amp, s1.weight * s2.weight)


def embed(state, registry):
    """Re-express ``state`` on a larger registry containing all of its labels.

    Modes absent from the original registry are empty.
    """
    src = state.registry
    if registry.tbins != src.tbins:
        raise RegistryError("cannot embed across different tbins")
    registry.require_labels(*src.labels)
    cols = np.array([registry.index(m) for m in src.modes], dtype=np.intp)
    occ = np.zeros((len(state), len(registry)), dtype=np.uint8)
    occ[:, cols] = state.occ
    return FockState(registry, occ, state.amp, state.weight)


def marginal(state, labels):
    """Photon-count distribution over the modes of ``labels``.

    Returns ``{sub-occupation tuple: probability}`` with the sub-occupation
    ordered as the registry orders those modes. Probabilities are the squared
    amplitudes (``weight`` is not applied).
    """
    reg = state.registry
    cols = sorted(i for lab in labels for i in reg.label_indices(lab))
    sub = state.occ[:, cols]
    probs = state.amp.real ** 2 + state.amp.imag ** 2
    out = {}
    for row, p in zip(sub, probs):
        key = tuple(int(x) for x in row)
        out[key] = out.get(key, 0.0) + float(p)
    return dict(sorted(out.items()))
