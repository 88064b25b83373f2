"""Reference full tensor-product simulator for small spin stars (N <= 4).

Independent of the sector engine: operators are built from Pauli matrices
with Kronecker products, propagators come from ``scipy.linalg.expm``, and no
permutation symmetry is used.  Same physical conventions as the engine
(H = -(nu_c Iz + nu_p sum Iz_k + J Iz sum Iz_k) + RF, U = exp(-2 pi i H t)).
Product basis ordering: centre first, each spin |0> (m = +1/2) then |1>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm

from . import gates as g
from .compiler import Delay, PulseProgram
from .dicke import EvolutionParams, RelaxationModel
from .system import SpinStarSystem

MAX_N = 4

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]])
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)
_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class FullState:
    n: int
    rho: np.ndarray


class _Ops:
    def __init__(self, n: int):
        if n > MAX_N:
            raise OracleSizeError(f"oracle supports N <= {MAX_N}, got {n}")
        if n < 1:
            raise OracleSizeError("N must be >= 1")
        self.n = n
        self.nspins = n + 1
        self.dim = 2 ** (n + 1)

    def single(self, op, k):
        mats = [_I2] * self.nspins
        mats[k] = op
        return reduce(np.kron, mats)

    def center(self, op):
        return self.single(op, 0)

    def periph_sum(self, op):
        return sum(self.single(op, k) for k in range(1, self.nspins))

    def periph_product(self, op):
        return reduce(np.kron, [_I2] + [op] * self.n)

    def m_values(self):
        """(m_c, total peripheral M) for every product basis state."""
        bits = (np.arange(self.dim)[:, None] >> np.arange(self.nspins)[::-1]) & 1
        m = 0.5 - bits
        return m[:, 0], m[:, 1:].sum(axis=1)


def _species_ops(ops: _Ops, species: str):
    if species == g.CENTER:
        return ops.center(_SX) / 2, ops.center(_SY) / 2, ops.center(_SZ) / 2
    return ops.periph_sum(_SX) / 2, ops.periph_sum(_SY) / 2, ops.periph_sum(_SZ) / 2


def _unitary(ops: _Ops, gate, system: SpinStarSystem) -> np.ndarray:
    if isinstance(gate, g.Hadamard):
        if gate.species == g.CENTER:
            return ops.center(_HAD)
        return np.kron(_I2, reduce(np.kron, [_HAD] * ops.n))
    if isinstance(gate, g.NOT):
        return ops.center(_SX) if gate.species == g.CENTER else np.kron(_I2, reduce(np.kron, [_SX] * ops.n))
    if isinstance(gate, g.Z):
        _, _, z = _species_ops(ops, gate.species)
        return expm(-1j * gate.angle * z)
    if isinstance(gate, g.Rot):
        x, y, _ = _species_ops(ops, gate.species)
        return expm(-1j * gate.angle * (math.cos(gate.phase) * x + math.sin(gate.phase) * y))
    if isinstance(gate, g.Readout):
        x, y, _ = _species_ops(ops, g.CENTER)
        return expm(-1j * math.pi / 2 * (math.cos(gate.phase) * x + math.sin(gate.phase) * y))
    if isinstance(gate, g.CNOT):
        p0 = ops.center(np.diag([1, 0]).astype(complex))
        p1 = ops.center(np.diag([0, 1]).astype(complex))
        return p0 + p1 @ ops.periph_product(_SX)
    if isinstance(gate, g.ModCNOT):
        cx, cy, cz = _species_ops(ops, g.CENTER)
        _, _, pz = _species_ops(ops, g.PERIPHERAL)
        kappa = 1.0 if gate.lines == "all" else 1.0 / ops.n
        return (expm(-1j * math.pi / 2 * cy) @ expm(-1j * math.pi / 2 * cz)
                @ expm(1j * math.pi * kappa * cz @ pz) @ expm(1j * math.pi / 2 * cy))
    raise ValueError(f"unknown gate {gate!r}")


def _free_hamiltonian(ops: _Ops, params: EvolutionParams, system: SpinStarSystem) -> np.ndarray:
    nu_c = params.delta_center + system.gamma_center * 1e6 * params.b0_offset
    nu_p = params.delta_peripheral + system.gamma_peripheral * 1e6 * params.b0_offset
    _, _, cz = _species_ops(ops, g.CENTER)
    _, _, pz = _species_ops(ops, g.PERIPHERAL)
    return -(nu_c * cz + nu_p * pz + system.j_coupling * cz @ pz)


def _evolve(rho, h, t):
    u = expm(-2j * math.pi * h * t)
    return u @ rho @ u.conj().T


def thermal(system: SpinStarSystem) -> FullState:
    ops = _Ops(system.n_peripheral)
    _, _, cz = _species_ops(ops, g.CENTER)
    _, _, pz = _species_ops(ops, g.PERIPHERAL)
    return FullState(ops.n, system.gamma_center * cz + system.gamma_peripheral * pz)


def pseudopure(system: SpinStarSystem, ell: int) -> FullState:
    ops = _Ops(system.n_peripheral)
    mc, mp = ops.m_values()
    sel = (mc == 0.5) & (np.isclose(2 * mp, ell))
    diag = sel / sel.sum()
    return FullState(ops.n, np.diag(diag).astype(complex))


def relax_full(state: FullState, duration: float, model: RelaxationModel,
               system: SpinStarSystem | None = None) -> FullState:
    """Elementwise coherence damping by (dm_c, dM); operator-level T1 recovery."""
    ops = _Ops(state.n)
    mc, mp = ops.m_values()
    dmc = np.abs(mc[:, None] - mc[None, :])
    dmp = np.abs(mp[:, None] - mp[None, :])
    order = np.where(dmp > 0, dmp ** model.order_exponent, 0.0)
    rho = state.rho * np.exp(-duration * (dmc * model.rate_center + order * model.rate_peripheral))
    if model.t1_center is None and model.t1_peripheral is None:
        return FullState(state.n, rho)
    target = thermal(system).rho
    zq = (dmc == 0) & (dmp == 0)
    dev = np.where(zq, rho - target, 0)
    half = ops.dim // 2
    up, down = dev[:half, :half], dev[half:, half:]
    fs = math.exp(-duration / model.t1_peripheral) if model.t1_peripheral else 1.0
    fa = math.exp(-duration / model.t1_center) if model.t1_center else 1.0
    s, a = (up + down) / 2 * fs, (up - down) / 2 * fa
    new = np.where(zq, target, rho)
    new[:half, :half] += s + a
    new[half:, half:] += s - a
    return FullState(state.n, new)


def _bb1_table(theta: float, phase: float):
    p1 = math.acos(-theta / (4 * math.pi))
    return ((theta, phase), (math.pi, phase + p1), (2 * math.pi, phase + 3 * p1), (math.pi, phase + p1))


def _apply(state, u):
    return FullState(state.n, u @ state.rho @ u.conj().T)


def _pulse(ops, rho, rf, duration, params, system):
    h = _free_hamiltonian(ops, params, system)
    for species, (nu1, phase) in rf.items():
        x, y, _ = _species_ops(ops, species)
        h = h + nu1 * (math.cos(phase) * x + math.sin(phase) * y)
    return _evolve(rho, h, duration)


def oracle_run(system: SpinStarSystem, program, params: EvolutionParams,
               state: FullState | None = None, relaxation: RelaxationModel | None = None,
               amplitude_error: float = 0.0) -> FullState:
    """Evolve the full state through a gate list or a compiled ``PulseProgram``.

    Gate lists use instantaneous ideal gates; ``Delay`` and ``Echo`` evolve
    freely.  Starts from the thermal state unless ``state`` is given.
    """
    ops = _Ops(system.n_peripheral)
    state = thermal(system) if state is None else state
    h0 = _free_hamiltonian(ops, params, system)

    def wait(st, t):
        st = FullState(st.n, _evolve(st.rho, h0, t))
        return relax_full(st, t, relaxation, system) if relaxation is not None else st

    if isinstance(program, PulseProgram):
        for item in program.pulse_groups():
            if isinstance(item, Delay):
                state = wait(state, item.duration)
                continue
            dur = item[0].duration
            if dur == 0:
                for p in item:
                    state = _apply(state, _unitary(ops, g.Rot(p.species, p.angle, p.phase), system))
            elif item[0].shape == "hard":
                rf = {p.species: (p.nutation_hz * (1 + amplitude_error), p.phase) for p in item}
                state = FullState(state.n, _pulse(ops, state.rho, rf, dur, params, system))
            else:
                for k in range(4):
                    segs = {p.species: _bb1_table(p.angle, p.phase)[k] for p in item}
                    seg_angle = segs[item[0].species][0]
                    seg_dur = seg_angle / (2 * math.pi * item[0].nutation_hz)
                    rf = {p.species: (p.nutation_hz * (1 + amplitude_error), segs[p.species][1])
                          for p in item}
                    state = FullState(state.n, _pulse(ops, state.rho, rf, seg_dur, params, system))
        for species, angle in program.final_frame.items():
            if angle:
                state = _apply(state, _unitary(ops, g.Z(species, angle), system))
        return state

    for gate in program:
        if isinstance(gate, g.Delay):
            state = wait(state, gate.duration)
        elif isinstance(gate, g.Echo):
            flips = [g.Rot(s, math.pi, 0.0) for s in gate.species]
            state = wait(state, gate.duration / 4)
            for f in flips:
                state = _apply(state, _unitary(ops, f, system))
            state = wait(state, gate.duration / 2)
            for f in flips:
                state = _apply(state, _unitary(ops, f, system))
            state = wait(state, gate.duration / 4)
        elif isinstance(gate, g.FinitePulse):
            rf = {gate.species: (gate.nutation_hz, gate.phase)}
            state = FullState(state.n, _pulse(ops, state.rho, rf, gate.duration, params, system))
        else:
            state = _apply(state, _unitary(ops, gate, system))
    return state


def project_to_peaks(state: FullState) -> list[tuple[int, complex]]:
    """Sum <+, x| rho |-, x> over peripheral configurations x grouped by ell."""
    n = state.n
    half = 2 ** n
    sums = {ell: 0j for ell in range(-n, n + 1, 2)}
    for x in range(half):
        ups = n - bin(x).count("1")
        ell = 2 * ups - n
        sums[ell] += state.rho[x, half + x]
    return sorted(sums.items())
