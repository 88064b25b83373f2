"""Randomised comparison of the sector engine against the full-space oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dicke as d
from . import gates as g
from . import oracle
from .runner import simulate_ir
from .system import SpinStarSystem, tms

TOLERANCE = 1e-10


def random_sequence(rng: np.random.Generator, n: int, length: int | None = None) -> list:
    """Random mix of ideal gates, finite rectangular pulses and free evolution."""
    species = (g.CENTER, g.PERIPHERAL)
    length = int(rng.integers(4, 11)) if length is None else length
    out = []
    for _ in range(length):
        s = species[int(rng.integers(2))]
        kind = int(rng.integers(10))
        if kind == 0:
            out.append(g.Hadamard(s))
        elif kind == 1:
            out.append(g.NOT(s))
        elif kind == 2:
            out.append(g.Z(s, float(rng.uniform(-math.pi, math.pi))))
        elif kind == 3:
            out.append(g.Rot(s, float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(-math.pi, math.pi))))
        elif kind == 4:
            out.append(g.CNOT())
        elif kind == 5:
            out.append(g.ModCNOT("all" if n % 2 and rng.random() < 0.5 else "outer"))
        elif kind == 6:
            out.append(g.Delay(float(rng.uniform(0, 0.2))))
        elif kind == 7:
            which = [(g.CENTER,), (g.PERIPHERAL,), species][int(rng.integers(3))]
            out.append(g.Echo(which, float(rng.uniform(0, 0.2))))
        else:
            out.append(g.FinitePulse(s, float(rng.uniform(500, 20000)), float(rng.uniform(0, 1e-4)),
                                     float(rng.uniform(-math.pi, math.pi))))
    return out


@dataclass
class CheckReport:
    n: int
    trials: int
    max_deviation: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= TOLERANCE


def trial(rng: np.random.Generator, system: SpinStarSystem) -> float:
    """Largest |peak difference| between engines for one random trial."""
    gates = random_sequence(rng, system.n_peripheral)
    params = d.EvolutionParams(float(rng.uniform(-1e-8, 1e-8)), float(rng.uniform(-50, 50)),
                               float(rng.uniform(-50, 50)))
    relaxation = d.RelaxationModel.from_system(system) if rng.random() < 0.5 else None
    if rng.random() < 0.5:
        engine0, full0 = d.thermal_state(system), oracle.thermal(system)
    else:
        ell = int(rng.choice(system.lopsidedness_values()))
        engine0, full0 = d.pseudopure_state(system, ell), oracle.pseudopure(system, ell)
    a = d.measure_center_peaks(simulate_ir(engine0, gates, params, system, relaxation))
    b = oracle.project_to_peaks(oracle.oracle_run(system, gates, params, full0, relaxation))
    return max(abs(x - y) for (_, x), (_, y) in zip(a, b))


def run_check(n: int, trials: int, seed: int, base: SpinStarSystem | None = None) -> CheckReport:
    if n > oracle.MAX_N or n < 1:
        raise oracle.OracleSizeError(f"oracle check needs 1 <= n <= {oracle.MAX_N}, got {n}")
    if trials < 0:
        raise ValueError("trials must be >= 0")
    system = (base or tms()).with_updates(n_peripheral=n)
    worst = 0.0
    for i in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, n, i]))
        worst = max(worst, trial(rng, system))
    return CheckReport(n, trials, worst)
