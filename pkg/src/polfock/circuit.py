"""The heralded CNOT network, its configuration and its text dump.

Canonical network (single source of truth, applied top to bottom):

==== ================================ =========================================
step element                          role
==== ================================ =========================================
0    delay_mix(a3), delay_mix(a4)     ancilla-pair arrival delay (only with a
                                      distinguishability model, tbins = 2);
                                      a3 also carries the model's arm_offset
1    pbs_hv(a1, a3 -> b1, b3)         encoder PBS1: H transmitted, V reflected
2    rotate_pol(a2, -45)              input half of PBS2 rotated by 45 degrees
3    rotate_pol(a4, -45)
4    pbs_hv(a2, a4 -> b2, b4)         PBS2 in its own H/V frame
5    rotate_pol(b2, +45)              output half of the 45-degree PBS2
6    rotate_pol(b4, +45)
7    rotate_pol(b3, -45)              herald analysis: |+> at b3 read as H
==== ================================ =========================================

Steps 2-6 equal ``pbs_45(a2, a4 -> b2, b4)``. The herald detectors at b3 and b4
then read H/V, and the passive outcome is (H, H). Control qubit: a1 -> b1;
target qubit: a2 -> b2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import sources
from .elements import DistinguishabilityModel, Element, apply_all, delay_mix, pbs_hv, rotate_pol
from .errors import ConfigError
from .fock import ModeRegistry
from .measurement import DetectorKind, HeraldRequirement, HeraldRule
from .sources import InputSpec

GATE_LABELS = ("a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4")
DUMP_LABELS = ("l1", "l2")
OFFSET_ARM = "a3"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CircuitConfig:
    input: InputSpec = field(default_factory=lambda: InputSpec.from_tokens("HH"))
    ideal_sources: bool = True
    epsilon: float | None = None
    distinguishability: DistinguishabilityModel | None = None
    herald: HeraldRule | None = field(default_factory=HeraldRule.passive)
    analysis: tuple = (0.0, 0.0)
    threshold_inference: bool = False

    def __post_init__(self):
        if isinstance(self.input, str):
            object.__setattr__(self, "input", InputSpec.parse(self.input))
        if self.ideal_sources == (self.epsilon is not None):
            raise ConfigError("exactly one of ideal_sources / epsilon must be given")
        if self.epsilon is not None:
            sources.check_epsilon(self.epsilon)
        if len(self.analysis) != 2:
            raise ConfigError("analysis needs one angle for b1 and one for b2")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class Circuit:
    registry: ModeRegistry
    elements: tuple
    herald: HeraldRule
    input_spec: InputSpec
    epsilon: float | None = None
    distinguishability: DistinguishabilityModel | None = None
    name: str = "canonical-cnot"

    @property
    def ideal_sources(self):
        return self.epsilon is None

    def prepare(self, spec=None, **spdc_options):
        """Initial state (ideal sources) or SPDC ensemble for ``spec``."""
        spec = spec or self.input_spec
        if self.ideal_sources:
            return sources.ideal_initial_state(self.registry, spec)
        return sources.spdc_ensemble(self.registry, spec, self.epsilon, **spdc_options)

    def evolve(self, state):
        return apply_all(state, self.elements)

    def run(self, spec=None, **spdc_options):
        """Evolved ensemble ``[(probability, state), ...]``."""
        prepared = self.prepare(spec, **spdc_options)
        if self.ideal_sources:
            return [(1.0, self.evolve(prepared))]
        return [(w, self.evolve(s)) for _, w, s in prepared]

    def with_delay(self, delay):
        if self.distinguishability is None:
            raise ConfigError("circuit has no distinguishability model")
        model = self.distinguishability.with_delay(delay)
        elements = tuple(
            _delay_element(e.modes[0][0], model) if e.name.startswith("delay_mix(") else e
            for e in self.elements
        )
        return replace(self, elements=elements, distinguishability=model)

    def with_herald(self, rule):
        return replace(self, herald=rule)

    # text dump ----------------------------------------------------------

    def dump(self):
        d = self.distinguishability
        lines = [
            f"format: {FORMAT_VERSION}",
            f"circuit: {self.name}",
            f"labels: {','.join(self.registry.labels)}",
            f"tbins: {self.registry.tbins}",
            f"n_max: {self.registry.n_max}",
            "input: " + " ".join(f"{a.real!r},{a.imag!r}" for a in self.input_spec.alpha),
            f"sources: {'ideal' if self.epsilon is None else f'epsilon={self.epsilon!r}'}",
            "distinguishability: " + (
                "none" if d is None else
                f"pump_duration={d.pump_duration!r} coherence_time={d.coherence_time!r} "
                f"delay={d.delay!r} arm_offset={d.arm_offset!r}"
            ),
            f"herald: {self.herald.describe()}",
            f"threshold_inference: {str(self.herald.threshold_inference).lower()}",
            f"elements: {len(self.elements)}",
        ]
        text = "\n".join(lines) + "\n"
        for e in self.elements:
            text += "\n" + e.dump()
        return text

    @classmethod
    def load(cls, text):
        header, *blocks = text.strip().split("\n\n")
        fields = dict(line.split(": ", 1) for line in header.splitlines())
        if int(fields["format"]) != FORMAT_VERSION:
            raise ConfigError(f"unsupported circuit format {fields['format']}")
        registry = ModeRegistry(fields["labels"].split(","), int(fields["tbins"]), int(fields["n_max"]))
        alpha = []
        for pair in fields["input"].split():
            re, im = pair.split(",")
            alpha.append(complex(float(re), float(im)))
        epsilon = None
        if fields["sources"] != "ideal":
            epsilon = float(fields["sources"].split("=", 1)[1])
        dist = None
        if fields["distinguishability"] != "none":
            kv = dict(item.split("=") for item in fields["distinguishability"].split())
            dist = DistinguishabilityModel(float(kv["pump_duration"]), float(kv["coherence_time"]),
                                           float(kv["delay"]), float(kv.get("arm_offset", 0.0)))
        herald = HeraldRule.parse(fields["herald"], fields["threshold_inference"] == "true")
        elements = tuple(Element.load(b) for b in blocks)
        if len(elements) != int(fields["elements"]):
            raise ConfigError("element count does not match header")
        return cls(registry, elements, herald, InputSpec(tuple(alpha)), epsilon, dist, fields["circuit"])


def _delay_element(label, model):
    return delay_mix(label, model, offset=model.arm_offset if label == OFFSET_ARM else 0.0)


def canonical_elements(distinguishability=None):
    elements = []
    if distinguishability is not None:
        elements += [_delay_element("a3", distinguishability), _delay_element("a4", distinguishability)]
    elements += [
        pbs_hv("a1", "a3", "b1", "b3"),
        rotate_pol("a2", -45),
        rotate_pol("a4", -45),
        pbs_hv("a2", "a4", "b2", "b4"),
        rotate_pol("b2", 45),
        rotate_pol("b4", 45),
        rotate_pol("b3", -45),
    ]
    return tuple(elements)


def build_canonical_circuit(config):
    """The pinned heralded-CNOT network for ``config``."""
    if config.herald is None:
        raise ConfigError("configuration has no herald rule")
    labels = GATE_LABELS + (DUMP_LABELS if config.epsilon is not None else ())
    tbins = 2 if config.distinguishability is not None else 1
    registry = ModeRegistry(labels, tbins)
    herald = replace(config.herald, threshold_inference=config.threshold_inference)
    return Circuit(
        registry,
        canonical_elements(config.distinguishability),
        herald,
        config.input,
        config.epsilon,
        config.distinguishability,
    )


def passive_rule(detector="number_resolving", threshold_inference=False):
    det = DetectorKind(detector)
    return HeraldRule(
        (HeraldRequirement("b3", 0.0, "H", det), HeraldRequirement("b4", 0.0, "H", det)),
        threshold_inference=threshold_inference,
    )
