"""Compare the compiled and numpy expansion kernels.

Run with ``python3 benchmarks/bench_kernels.py``. Each workload is applied
through both backends; outputs are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from polfock import kernels
from polfock.circuit import CircuitConfig, build_canonical_circuit
from polfock.elements import Element, apply, apply_all
from polfock.fock import FockState, ModeRegistry
from polfock.oracle import occupations


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def dense_workload(n_labels, photons, seed=0):
    """Every occupation of ``photons`` over ``2 * n_labels`` modes, one random unitary."""
    rng = np.random.default_rng(seed)
    labels = [f"m{k}" for k in range(n_labels)]
    reg = ModeRegistry(labels, n_max=photons)
    occ = np.array(occupations(len(reg), photons), dtype=np.uint8)
    amp = rng.normal(size=len(occ)) + 1j * rng.normal(size=len(occ))
    state = FockState(reg, occ, amp / np.linalg.norm(amp))
    modes = [(lab, pol) for lab in labels for pol in "HV"]
    element = Element("random", modes, random_unitary(len(modes), rng))
    return state, [element]


def circuit_workload():
    circuit = build_canonical_circuit(CircuitConfig(input="+H"))
    return circuit.prepare(), list(circuit.elements)


def spdc_workload():
    circuit = build_canonical_circuit(CircuitConfig(input="+H", ideal_sources=False, epsilon=0.1))
    # six-photon emission order: the largest state the noise study evolves
    state = max((s for _, _, s in circuit.prepare()), key=len)
    return state, list(circuit.elements)


WORKLOADS = {
    "canonical circuit, 4 photons": circuit_workload,
    "spdc order (2,1), 6 photons": spdc_workload,
    "dense 3 photons / 6 modes": lambda: dense_workload(3, 3),
    "dense 4 photons / 8 modes": lambda: dense_workload(4, 4),
    "dense 5 photons / 8 modes": lambda: dense_workload(4, 5),
}


def check_agreement(state, elements, backends):
    ref = apply_all(state, elements, backends[0])
    for b in backends[1:]:
        out = apply_all(state, elements, b)
        assert np.array_equal(ref.occ, out.occ), f"{b}: term sets differ"
        assert np.allclose(ref.amp, out.amp, atol=1e-12), f"{b}: amplitudes differ"
    return len(ref)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    print(f"{'workload':32s} {'terms':>7s} " + " ".join(f"{b + ' ms':>12s}" for b in backends) + "  speedup")
    for name, make in WORKLOADS.items():
        state, elements = make()
        n_out = check_agreement(state, elements, backends)
        times = {}
        for b in backends:
            t = timeit.repeat(lambda: apply_all(state, elements, b), number=1, repeat=args.repeat)
            times[b] = 1e3 * min(t)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:32s} {n_out:7d} " + " ".join(f"{times[b]:12.3f}" for b in backends) + f"  {speed:6.1f}x")


if __name__ == "__main__":
    main()
