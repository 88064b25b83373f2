"""Drive the Dicke engine through gate sequences and compiled pulse programs."""

from __future__ import annotations

import cmath
import math
from dataclasses import replace

from . import dicke as d
from . import gates as g
from .compiler import Delay, Pulse, PulseProgram
from .system import SpinStarSystem


def _wait(state, t, params, system, relaxation):
    state = d.free_evolve(state, replace(params, duration=t), system)
    if relaxation is not None:
        state = d.relax(state, t, relaxation, system)
    return state


def simulate_ir(state: d.BlockState, ir, params: d.EvolutionParams, system: SpinStarSystem,
                relaxation: d.RelaxationModel | None = None) -> d.BlockState:
    """Run a gate sequence with instantaneous ideal gates."""
    for gate in ir:
        if isinstance(gate, g.Delay):
            state = _wait(state, gate.duration, params, system, relaxation)
        elif isinstance(gate, g.Echo):
            t = gate.duration
            state = _wait(state, t / 4, params, system, relaxation)
            for s in gate.species:
                state = d.apply_ideal_gate(state, g.Rot(s, math.pi, 0.0))
            state = _wait(state, t / 2, params, system, relaxation)
            for s in gate.species:
                state = d.apply_ideal_gate(state, g.Rot(s, math.pi, 0.0))
            state = _wait(state, t / 4, params, system, relaxation)
        elif isinstance(gate, g.FinitePulse):
            state = d.finite_pulse(state, gate.species, gate.nutation_hz, gate.duration,
                                   gate.phase, 0.0, params, system)
        else:
            state = d.apply_ideal_gate(state, gate)
    return state


def _run_pulses(state, batch, params, system, amplitude_error):
    dur = batch[0].duration
    if dur == 0:
        for p in batch:
            state = d.apply_ideal_gate(state, g.Rot(p.species, p.angle, p.phase))
        return state
    if batch[0].shape == "hard":
        rf = {p.species: (p.nutation_hz * (1 + amplitude_error), p.phase, 0.0) for p in batch}
        return d.simultaneous_pulse(state, rf, dur, params, system)
    if len({p.angle for p in batch}) != 1:
        raise ValueError("simultaneous BB1 pulses must share a flip angle")
    segs = {p.species: d.bb1_segments(p.angle, p.phase) for p in batch}
    nu1 = {p.species: p.nutation_hz for p in batch}
    for k in range(4):
        angle = segs[batch[0].species][k][0]
        seg_dur = angle / (2 * math.pi * nu1[batch[0].species])
        rf = {s: (nu1[s] * (1 + amplitude_error), segs[s][k][1], 0.0) for s in segs}
        state = d.simultaneous_pulse(state, rf, seg_dur, params, system)
    return state


def simulate_program(state: d.BlockState, program: PulseProgram, params: d.EvolutionParams,
                     system: SpinStarSystem, relaxation: d.RelaxationModel | None = None,
                     amplitude_error: float = 0.0, relax_during_pulses: bool = False) -> d.BlockState:
    """Run a compiled program, then apply the residual frame shifts."""
    for item in program.pulse_groups():
        if isinstance(item, Delay):
            state = _wait(state, item.duration, params, system, relaxation)
            continue
        state = _run_pulses(state, item, params, system, amplitude_error)
        if relax_during_pulses and relaxation is not None:
            state = d.relax(state, item[0].duration, relaxation, system)
    for species, angle in program.final_frame.items():
        if angle:
            state = d.apply_ideal_gate(state, g.Z(species, angle))
    return state


def acquire(state: d.BlockState, receiver_phase: float = 0.0) -> list[tuple[int, complex]]:
    """Centre-line amplitudes seen by a receiver at ``receiver_phase``."""
    rot = cmath.exp(1j * receiver_phase)
    return [(ell, amp * rot) for ell, amp in d.measure_center_peaks(state)]
