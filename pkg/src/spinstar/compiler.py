"""Gate sequences and their compilation to timed pulse programs.

Compilation rules
-----------------
* Hadamard: pi/2 about -y followed by a Z(pi) frame shift.
* CNOT (centre -> peripherals): peripheral pi/2_-y, a 1/(2J) coupling window,
  frame shifts Z_p(pi/2) and Z_c(N pi/2), peripheral pi/2_+y.
* ModCNOT: the same shape on the centre with a kappa/(2J) window and a
  Z_c(pi/2) frame shift.
* Coupling windows are spin echoes with simultaneous pi_x pulses on both
  species centred at 1/4 and 3/4 of the window.
* Z gates never appear as primitives: every pulse phase is reduced by the
  current frame of its species and the residual frame is kept as
  ``final_frame`` (applied as a receiver rotation at acquisition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import gates as g
from .system import SpinStarSystem

PULSE_MODELS = ("ideal", "hard", "bb1")
SEQUENCE_KINDS = ("original", "seq_a", "seq_b")


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class Pulse:
    species: str
    angle: float
    phase: float
    duration: float
    shape: str = "hard"
    group: int | None = None
    readout: bool = False

    @property
    def nutation_hz(self) -> float:
        """RF amplitude; for BB1 the composite spans theta + 4 pi of nutation."""
        total = self.angle + (4 * math.pi if self.shape == "bb1" else 0.0)
        return total / (2 * math.pi * self.duration)


@dataclass(frozen=True)
class Delay:
    duration: float


@dataclass(frozen=True)
class PulseProgram:
    primitives: tuple
    final_frame: dict = field(default_factory=lambda: {g.CENTER: 0.0, g.PERIPHERAL: 0.0})
    receiver_phase: float = 0.0

    @property
    def total_duration(self) -> float:
        total, seen = 0.0, set()
        for p in self.primitives:
            if isinstance(p, Pulse) and p.group is not None:
                if p.group in seen:
                    continue
                seen.add(p.group)
            total += p.duration
        return total

    def pulse_groups(self):
        """Yield Delay primitives and lists of simultaneous pulses, in order."""
        i, prims = 0, self.primitives
        while i < len(prims):
            p = prims[i]
            if isinstance(p, Delay):
                yield p
                i += 1
                continue
            batch = [p]
            while (p.group is not None and i + len(batch) < len(prims)
                   and isinstance(prims[i + len(batch)], Pulse)
                   and prims[i + len(batch)].group == p.group):
                batch.append(prims[i + len(batch)])
            yield batch
            i += len(batch)

    def pulse_times(self, species: str | None = None) -> list[tuple[float, Pulse]]:
        """Centre time of every pulse, optionally filtered by species."""
        out, t = [], 0.0
        for item in self.pulse_groups():
            if isinstance(item, Delay):
                t += item.duration
                continue
            dur = item[0].duration
            out.extend((t + dur / 2, p) for p in item if species in (None, p.species))
            t += dur
        return out

    def to_text(self) -> str:
        """One primitive per line: kind, species, angle, phase, duration, shape, group."""
        lines = [f"# total_duration {_fmt(self.total_duration)}",
                 f"# frame center {_fmt(self.final_frame[g.CENTER])}",
                 f"# frame peripheral {_fmt(self.final_frame[g.PERIPHERAL])}",
                 f"# receiver_phase {_fmt(self.receiver_phase)}"]
        for p in self.primitives:
            if isinstance(p, Delay):
                lines.append(f"delay - - - {_fmt(p.duration)}")
            else:
                grp = "-" if p.group is None else str(p.group)
                tag = " readout" if p.readout else ""
                lines.append(f"pulse {p.species} {_fmt(p.angle)} {_fmt(p.phase)} "
                             f"{_fmt(p.duration)} {p.shape} {grp}{tag}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PulseProgram":
        prims, frame, rx = [], {g.CENTER: 0.0, g.PERIPHERAL: 0.0}, 0.0
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if parts[1] == "frame":
                    frame[parts[2]] = float(parts[3])
                elif parts[1] == "receiver_phase":
                    rx = float(parts[2])
                continue
            if parts[0] == "delay":
                prims.append(Delay(float(parts[4])))
            else:
                prims.append(Pulse(parts[1], float(parts[2]), float(parts[3]), float(parts[4]),
                                   parts[5], None if parts[6] == "-" else int(parts[6]),
                                   len(parts) > 7 and parts[7] == "readout"))
        return cls(tuple(prims), frame, rx)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- sequence construction ---------------------------------------------------

def build_sequence(kind: str, priming: bool, delay_t: float, system: SpinStarSystem,
                   readout: bool = True) -> tuple:
    """Gate-level field-sensing sequence.

    ``original``: H_c, CNOT, delay, CNOT, H_c.
    ``seq_a``: the delay is bracketed by ModCNOT disentangling gates (odd N).
    ``seq_b``: the delay carries two centre pi pulses at t/4 and 3t/4.
    Priming prepends one CNOT (polarisation transfer onto the centre lines).
    """
    if kind not in SEQUENCE_KINDS:
        raise ValueError(f"unknown sequence kind {kind!r}")
    if delay_t < 0:
        raise ValueError("delay must be >= 0")
    if kind == "seq_a" and system.n_peripheral % 2 == 0:
        raise CompileError(
            f"seq_a needs an odd number of peripheral spins; N={system.n_peripheral} is even")
    prefix = [g.CNOT()] if priming else []
    if kind == "original":
        middle = [g.Delay(delay_t)]
    elif kind == "seq_a":
        middle = [g.ModCNOT("all"), g.Delay(delay_t), g.ModCNOT("all")]
    else:
        middle = [g.PiPair(g.CENTER, delay_t)]
    seq = prefix + [g.Hadamard(g.CENTER), g.CNOT()] + middle + [g.CNOT(), g.Hadamard(g.CENTER)]
    if readout:
        seq.append(g.Readout())
    return tuple(seq)


def spectrum_sequence(priming: bool) -> tuple:
    """Plain readout of the thermal (or primed) state."""
    return ((g.CNOT(),) if priming else ()) + (g.Readout(),)


# -- compilation -------------------------------------------------------------

class _Builder:
    def __init__(self, system: SpinStarSystem, pulse_model: str):
        if pulse_model not in PULSE_MODELS:
            raise ValueError(f"unknown pulse model {pulse_model!r}")
        self.system = system
        self.model = pulse_model
        self.frame = {g.CENTER: 0.0, g.PERIPHERAL: 0.0}
        self.prims: list = []
        self.next_group = 0

    def _duration(self, species: str, angle: float) -> float:
        if self.model == "ideal":
            return 0.0
        pi2 = self.system.pulse_pi2_center if species == g.CENTER else self.system.pulse_pi2_peripheral
        total = angle + (4 * math.pi if self.model == "bb1" else 0.0)
        return pi2 * total / (math.pi / 2)

    def pulses(self, specs, readout: bool = False) -> float:
        """Append simultaneous pulses [(species, angle, phase)]; returns their duration.

        Unequal calibrations are stretched to the longest member by lowering
        the RF amplitude of the shorter ones.
        """
        shape = "bb1" if self.model == "bb1" else "hard"
        dur = max(self._duration(s, a) for s, a, _ in specs)
        group = None
        if len(specs) > 1:
            group = self.next_group
            self.next_group += 1
        for s, a, ph in specs:
            self.prims.append(Pulse(s, a, _wrap(ph - self.frame[s]), dur, shape, group, readout))
        return dur

    def delay(self, t: float) -> None:
        if t > 0:
            self.prims.append(Delay(t))

    def echo(self, species: tuple, window: float) -> None:
        specs = [(s, math.pi, 0.0) for s in species]
        p = max(self._duration(s, math.pi) for s in species)
        first = max(window / 4 - p / 2, 0.0)
        mid = max(window / 2 - p, 0.0)
        self.delay(first)
        self.pulses(specs)
        self.delay(mid)
        self.pulses(specs)
        self.delay(first)

    def shift(self, species: str, angle: float) -> None:
        self.frame[species] = self.frame[species] + angle


def _wrap(phase: float) -> float:
    return math.remainder(phase, 2 * math.pi)


def compile_ir(ir, system: SpinStarSystem, pulse_model: str = "hard") -> PulseProgram:
    """Compile a gate sequence to a pulse program."""
    b = _Builder(system, pulse_model)
    n, j = system.n_peripheral, system.j_coupling
    both = (g.CENTER, g.PERIPHERAL)
    for gate in ir:
        if isinstance(gate, g.Hadamard):
            b.pulses([(gate.species, math.pi / 2, -math.pi / 2)])
            b.shift(gate.species, math.pi)
        elif isinstance(gate, g.NOT):
            b.pulses([(gate.species, math.pi, 0.0)])
        elif isinstance(gate, g.Rot):
            b.pulses([(gate.species, gate.angle, gate.phase)])
        elif isinstance(gate, g.Z):
            b.shift(gate.species, gate.angle)
        elif isinstance(gate, g.Readout):
            b.pulses([(g.CENTER, math.pi / 2, gate.phase)], readout=True)
        elif isinstance(gate, g.CNOT):
            b.pulses([(g.PERIPHERAL, math.pi / 2, -math.pi / 2)])
            b.echo(both, 1.0 / (2 * j))
            b.shift(g.PERIPHERAL, math.pi / 2)
            b.shift(g.CENTER, n * math.pi / 2)
            b.pulses([(g.PERIPHERAL, math.pi / 2, math.pi / 2)])
        elif isinstance(gate, g.ModCNOT):
            if gate.lines == "all" and n % 2 == 0:
                raise CompileError(
                    f"ModCNOT over all lines does not work for an even number of peripheral "
                    f"spins (N={n})")
            b.pulses([(g.CENTER, math.pi / 2, -math.pi / 2)])
            b.echo(both, gate.kappa(n) / (2 * j))
            b.shift(g.CENTER, math.pi / 2)
            b.pulses([(g.CENTER, math.pi / 2, math.pi / 2)])
        elif isinstance(gate, g.Delay):
            b.delay(gate.duration)
        elif isinstance(gate, g.Echo):
            b.echo(gate.species, gate.duration)
        else:
            raise CompileError(f"cannot compile {gate!r}")
    frame = {s: _wrap(v) for s, v in b.frame.items()}
    return PulseProgram(tuple(b.prims), frame)


def phase_cycle_variants(program: PulseProgram) -> list[PulseProgram]:
    """Four-step cycle: every pulse phase, including the readout, stepped by k pi/2.

    Stepping all phases conjugates the whole experiment by Z(k pi/2), so the
    centre coherence rotates by exp(-i k pi/2); each variant's
    ``receiver_phase`` (k pi/2) undoes this when the acquisitions are summed
    with weight exp(i receiver_phase).  Receiver DC offsets and the image of a
    quadrature imbalance carry weights summing to zero and cancel.
    """
    if not any(isinstance(p, Pulse) and p.readout for p in program.primitives):
        raise ValueError("program has no readout pulse")
    out = []
    for k in range(4):
        step = k * math.pi / 2
        prims = tuple(replace(p, phase=_wrap(p.phase + step)) if isinstance(p, Pulse) else p
                      for p in program.primitives)
        out.append(PulseProgram(prims, dict(program.final_frame), _wrap(program.receiver_phase + step)))
    return out
