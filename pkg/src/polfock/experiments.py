"""Scenario runners: truth table, entangler with HOM check, noise study, feed-forward.

Configs are INI files read with :mod:`configparser`::

    [source]
    input = +H            ; token pair or four complex amplitudes
    ideal = true          ; or: epsilon = 0.1
    ancilla_epsilon = 0.1 ; optional, ancilla-pass amplitude for the noise study

    [distinguishability]  ; optional section
    pump_duration = 200
    coherence_time = 700
    delay = 0
    arm_offset = 0

    [herald]
    rule = passive        ; or e.g. b3:0:H:number_resolving b4:0:H:number_resolving
    threshold_inference = false

    [analysis]
    b1 = 0
    b2 = 0

    [scan]
    delays = -3500:3500:21  ; start:stop:points, or a comma list
    epsilon_factor = 0.5

Reports are plain text starting with ``format: 1``; every scalar is written
with the tolerance it was computed to, and tables are embedded as CSV.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import measurement
from .circuit import CircuitConfig, build_canonical_circuit
from .elements import DistinguishabilityModel
from .errors import ConfigError
from .measurement import CNOT, QUBIT_BASIS, HeraldRule
from .sources import InputSpec, check_epsilon

FORMAT_VERSION = 1
CSV_DIGITS = 12
EXACT_TOL = 1e-9
NULL_TOL = 1e-12
BELL_PHI_PLUS = np.array([1, 0, 0, 1]) / math.sqrt(2.0)


def fmt(x):
    return f"{float(x):.{CSV_DIGITS}g}"


@dataclass(frozen=True)
class ScanSettings:
    """Parameters of the scans that are not part of the circuit itself."""

    delays: tuple = tuple(np.linspace(-3500.0, 3500.0, 21))
    epsilon_factor: float = 0.5
    ancilla_epsilon: float | None = None

    def __post_init__(self):
        if not self.delays:
            raise ConfigError("delay scan needs at least one point")
        if not 0.0 < self.epsilon_factor < 1.0:
            raise ConfigError("epsilon_factor must lie in (0, 1)")
        if self.ancilla_epsilon is not None:
            check_epsilon(self.ancilla_epsilon)


def parse_delays(text):
    """``start:stop:points`` or a comma separated list of delays (fs)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, n = text.split(":")
            return tuple(float(d) for d in np.linspace(float(start), float(stop), int(n)))
        return tuple(float(d) for d in text.split(",") if d.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse delays {text!r}") from exc


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _float(section, key, default=None):
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: not a number") from exc


def parse_config(text):
    """Parse INI text into ``(CircuitConfig, ScanSettings)``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"source", "distinguishability", "herald", "analysis", "scan"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    src = parser["source"] if parser.has_section("source") else {}
    spec = InputSpec.parse(src.get("input", "HH"))
    epsilon = None
    if "epsilon" in src:
        epsilon = _float(parser["source"], "epsilon")
    ideal = _bool(src.get("ideal", "false" if epsilon is not None else "true"))

    dist = None
    if parser.has_section("distinguishability"):
        d = parser["distinguishability"]
        try:
            dist = DistinguishabilityModel(
                _float(d, "pump_duration", 200.0),
                _float(d, "coherence_time", 700.0),
                _float(d, "delay", 0.0),
                _float(d, "arm_offset", 0.0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    threshold = False
    herald = HeraldRule.passive()
    if parser.has_section("herald"):
        h = parser["herald"]
        threshold = _bool(h.get("threshold_inference", "false"))
        rule = h.get("rule", "passive").strip()
        if rule == "none":
            herald = None
        elif rule != "passive":
            try:
                herald = HeraldRule.parse(rule, threshold)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"cannot parse herald rule {rule!r}") from exc

    analysis = (0.0, 0.0)
    if parser.has_section("analysis"):
        a = parser["analysis"]
        analysis = (_float(a, "b1", 0.0), _float(a, "b2", 0.0))

    settings = ScanSettings(ancilla_epsilon=_float(parser["source"], "ancilla_epsilon")
                            if parser.has_section("source") else None)
    if parser.has_section("scan"):
        s = parser["scan"]
        settings = ScanSettings(
            parse_delays(s["delays"]) if "delays" in s else settings.delays,
            _float(s, "epsilon_factor", 0.5),
            settings.ancilla_epsilon,
        )
    config = CircuitConfig(spec, ideal, epsilon, dist, herald, analysis, threshold)
    return config, settings


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_echo(config, settings=None):
    """Key-value lines describing ``config`` (stable order)."""
    lines = [
        ("input", config.input.label()),
        ("sources", "ideal" if config.ideal_sources else f"epsilon={fmt(config.epsilon)}"),
    ]
    d = config.distinguishability
    if d is not None:
        lines.append(("distinguishability",
                      f"pump_duration={fmt(d.pump_duration)} coherence_time={fmt(d.coherence_time)} "
                      f"delay={fmt(d.delay)} arm_offset={fmt(d.arm_offset)}"))
    lines.append(("herald", config.herald.describe() if config.herald else "none"))
    lines.append(("threshold_inference", str(config.threshold_inference).lower()))
    lines.append(("analysis", f"{fmt(config.analysis[0])},{fmt(config.analysis[1])}"))
    if settings is not None and settings.ancilla_epsilon is not None:
        lines.append(("ancilla_epsilon", fmt(settings.ancilla_epsilon)))
    return lines


# reports ---------------------------------------------------------------------


@dataclass
class Table:
    header: tuple
    rows: list

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
        return buf.getvalue()


@dataclass
class ExperimentReport:
    scenario: str
    config: list = field(default_factory=list)
    scalars: dict = field(default_factory=dict)  # name -> (value, tolerance)
    tables: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def scalar(self, name):
        return self.scalars[name][0]

    def add(self, name, value, tolerance):
        self.scalars[name] = (float(value), float(tolerance))

    def to_text(self):
        out = [f"format: {FORMAT_VERSION}", f"scenario: {self.scenario}", "", "[config]"]
        out += [f"{k} = {v}" for k, v in self.config]
        out += ["", "[scalars]"]
        out += [f"{k} = {fmt(v)}  (tol {tol:.0e})" for k, (v, tol) in self.scalars.items()]
        for name, table in self.tables.items():
            out += ["", f"[table {name}]", table.to_csv().rstrip("\n")]
        if self.notes:
            out += ["", "[notes]"] + list(self.notes)
        return "\n".join(out) + "\n"

    def to_csv(self, name=None):
        if not self.tables:
            raise ConfigError(f"scenario {self.scenario} has no table")
        return self.tables[name or next(iter(self.tables))].to_csv()


# scenarios -------------------------------------------------------------------


def _cnot_column(token):
    vec = np.zeros(4)
    vec[QUBIT_BASIS.index(token)] = 1.0
    return QUBIT_BASIS[int(np.argmax(np.abs(CNOT @ vec)))]


def run_truth_table(config, settings=None):
    """Herald-conditioned output probabilities for the four computational inputs."""
    circuit = build_canonical_circuit(config)
    table = measurement.coincidence_table(circuit, QUBIT_BASIS, config.analysis)
    cond = table.conditional
    report = ExperimentReport("truth-table", config_echo(config, settings))
    rows = [(inp,) + tuple(float(x) for x in cond[r]) for r, inp in enumerate(QUBIT_BASIS)]
    report.tables["coincidences"] = Table(("input",) + QUBIT_BASIS, rows)
    for r, inp in enumerate(QUBIT_BASIS):
        report.add(f"herald_probability_{inp}", table.joint[r].sum(), EXACT_TOL)
    if tuple(config.analysis) == (0.0, 0.0):
        for r, inp in enumerate(QUBIT_BASIS):
            report.add(f"logical_fidelity_{inp}", cond[r, QUBIT_BASIS.index(_cnot_column(inp))], EXACT_TOL)
    return report


def entangler_figures(circuit, spec=None):
    """(populations, population fidelity, coherence fidelity) for one circuit.

    The coherence fidelity is the correlated share P(++) + P(--) of the +/-
    basis analysis, equal to 1 for the ideal Bell output.
    """
    spec = spec or InputSpec.from_tokens("+H")
    hv = measurement.coincidence_table(circuit, (spec,), (0.0, 0.0)).conditional[0]
    pm = measurement.coincidence_table(circuit, (spec,), (45.0, 45.0)).conditional[0]
    return hv, float(hv[0] + hv[3]), float(pm[0] + pm[3])


def run_entangler(config, settings=None):
    """Bell-state generation from |+>|H>: populations, fidelities, HOM check."""
    if config.input.label() != "+H":
        raise ConfigError("the entangler scenario needs input +H")
    settings = settings or ScanSettings()
    circuit = build_canonical_circuit(config)
    hv, pop_fid, coh_fid = entangler_figures(circuit, config.input)
    report = ExperimentReport("entangle", config_echo(config, settings))
    report.tables["populations"] = Table(("basis",) + QUBIT_BASIS, [("HV",) + tuple(float(x) for x in hv)])
    report.add("population_fidelity", pop_fid, EXACT_TOL)
    report.add("coherence_fidelity", coh_fid, EXACT_TOL)
    if not config.threshold_inference:
        res = measurement.herald(circuit.run(), circuit.herald)
        report.add("success_probability", res.probability, EXACT_TOL)
        report.add("bell_fidelity", measurement.density_fidelity(res.density(), BELL_PHI_PLUS), EXACT_TOL)
    if config.distinguishability is not None:
        points = measurement.hom_scan(circuit, settings.delays, config.input)
        report.tables["hom"] = _hom_table(points)
        report.add("hom_visibility", measurement.scan_visibility(points), EXACT_TOL)
        here = measurement.hom_scan(circuit, [config.distinguishability.delay], config.input)[0]
        report.add("hom_coherence_fidelity", (1.0 + here.visibility) / 2, EXACT_TOL)
    return report


def _hom_table(points):
    return Table(
        ("delay_fs", "overlap", "desired", "spurious", "visibility"),
        [(p.delay, p.overlap, p.desired, p.spurious, p.visibility) for p in points],
    )


def _require_model(config):
    if config.distinguishability is None:
        return config.with_(distinguishability=DistinguishabilityModel())
    return config


def run_hom_scan(config, settings=None):
    """Herald-conditioned +/- correlations of the entangler versus ancilla delay."""
    settings = settings or ScanSettings()
    config = _require_model(config)
    circuit = build_canonical_circuit(config)
    spec = config.input if config.input.label() == "+H" else InputSpec.from_tokens("+H")
    points = measurement.hom_scan(circuit, settings.delays, spec)
    report = ExperimentReport("hom-scan", config_echo(config, settings))
    report.tables["hom"] = _hom_table(points)
    report.add("dip_visibility", measurement.scan_visibility(points), EXACT_TOL)
    report.add("max_correlation_visibility", max(p.visibility for p in points), EXACT_TOL)
    report.add("min_correlation_visibility", min(p.visibility for p in points), EXACT_TOL)
    return report


def heralded_probability(circuit, spec, **spdc_options):
    """Herald-conditioned four-fold probability of an SPDC circuit."""
    ensemble = [(w, circuit.evolve(s)) for _, w, s in circuit.prepare(spec, **spdc_options)]
    return measurement.herald(ensemble, circuit.herald).probability


def noise_to_signal(config, epsilon, ancilla_epsilon):
    """Ancilla-blocked background over the remaining heralded rate."""
    circuit = build_canonical_circuit(config.with_(epsilon=epsilon))
    total = heralded_probability(circuit, config.input, ancilla_epsilon=ancilla_epsilon)
    noise = heralded_probability(circuit, config.input, ancilla_epsilon=ancilla_epsilon, ancilla_blocked=True)
    signal = total - noise
    return (noise / signal if signal > 0 else math.inf), total, noise


def run_noise_study(config, settings=None):
    """Double-pair noise: ancilla-only null, input-only noise, and its scaling.

    Condition (iii) holds the ancilla-pass amplitude fixed (``ancilla_epsilon``,
    default the configured epsilon) and scales the input-pass amplitude by
    ``epsilon_factor``; the noise-to-signal ratio then drops as epsilon**2.
    The balanced ratio (both passes scaled together) is reported alongside.
    """
    if config.epsilon is None:
        raise ConfigError("the noise study needs an epsilon")
    settings = settings or ScanSettings()
    eps = config.epsilon
    eps_anc = settings.ancilla_epsilon if settings.ancilla_epsilon is not None else eps
    circuit = build_canonical_circuit(config)
    report = ExperimentReport("noise", config_echo(config, settings))

    p_null = heralded_probability(circuit, config.input, ancilla_epsilon=eps_anc, input_blocked=True)
    report.add("cond_i_ancilla_only_probability", p_null, NULL_TOL)
    rows = []
    for spec in (config.input, InputSpec.from_tokens("HH")):
        p = heralded_probability(circuit, spec, ancilla_epsilon=eps_anc, ancilla_blocked=True)
        rows.append((spec.label(), p))
    report.add("cond_ii_input_only_probability", rows[0][1], NULL_TOL)
    report.add("cond_ii_input_only_probability_HH", rows[1][1], NULL_TOL)

    low = eps * settings.epsilon_factor
    ns_hi, total_hi, noise_hi = noise_to_signal(config, eps, eps_anc)
    ns_lo, total_lo, noise_lo = noise_to_signal(config, low, eps_anc)
    bal_hi, _, _ = noise_to_signal(config, eps, eps)
    bal_lo, _, _ = noise_to_signal(config, low, low)
    report.add("cond_iii_noise_to_signal", ns_hi, EXACT_TOL)
    report.add("cond_iii_noise_to_signal_scaled", ns_lo, EXACT_TOL)
    report.add("cond_iii_ratio", ns_hi / ns_lo, EXACT_TOL)
    report.add("cond_iii_expected_ratio", settings.epsilon_factor ** -2, 0.0)
    report.add("balanced_noise_to_signal", bal_hi, EXACT_TOL)
    report.add("balanced_noise_to_signal_scaled", bal_lo, EXACT_TOL)
    report.tables["noise"] = Table(
        ("input_epsilon", "ancilla_epsilon", "heralded", "background", "noise_to_signal"),
        [(eps, eps_anc, total_hi, noise_hi, ns_hi), (low, eps_anc, total_lo, noise_lo, ns_lo)],
    )
    return report


def run_feed_forward(config, settings=None):
    """Pauli corrections per herald outcome and the total corrected success probability."""
    circuit = build_canonical_circuit(config)
    table = measurement.derive_feed_forward(circuit)
    report = ExperimentReport("feed-forward", config_echo(config, settings))
    rows = []
    for outcome, (c1, c2) in table.corrections.items():
        rows.append(("".join(outcome), c1, c2, table.probabilities[outcome]))
    report.tables["corrections"] = Table(("herald", "b1", "b2", "probability"), rows)
    report.add("total_success_probability", table.total_success_probability, 1e-10)
    return report


SCENARIOS = {
    "truth-table": run_truth_table,
    "entangle": run_entangler,
    "hom-scan": run_hom_scan,
    "noise": run_noise_study,
    "feed-forward": run_feed_forward,
}


def delay_for_population_fidelity(config, target, hi=None, tol=1e-6):
    """Smallest non-negative delay at which the entangler's population fidelity
    drops to ``target`` (bisection; population fidelity falls with delay)."""
    config = _require_model(config)
    model = config.distinguishability
    hi = hi if hi is not None else 5.0 * model.coherence_time
    circuit = build_canonical_circuit(config)

    def pop(delay):
        return entangler_figures(circuit.with_delay(delay))[1]

    lo = 0.0
    if not pop(hi) <= target <= pop(lo):
        raise ConfigError(f"population fidelity {target} is not reachable in [0, {hi}] fs")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pop(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
