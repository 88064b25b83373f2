"""Symmetry-reduced density-matrix engine for spin-star molecules.

Global pulses and uniform couplings commute with permutations of the
peripheral spins, so the 2^(N+1)-dimensional density matrix splits into
collective-spin sectors.  Sector J contributes one block of dimension
2(2J+1) in the basis |m_c> (x) |J, m>, weighted by its multiplicity.  Block
row/column ordering is centre-major: index = c * (2J+1) + (J - m) with
c = 0 for m_c = +1/2 (|0>) and c = 1 for m_c = -1/2 (|1>).

Conventions
-----------
The rotating-frame Hamiltonian in Hz is

    H = -(nu_c Iz + nu_p Jz + J_cp Iz Jz) + RF terms,

with nu = delta + gamma * B0, and propagators are exp(-2 pi i H t).  Under
free evolution the element (a, b) therefore advances by
2 pi t (E_a - E_b) with E = nu_c m_c + nu_p m + J_cp m_c m.  A rotation
R_phi(theta) = exp(-i theta (cos phi Ix + sin phi Iy)); Z(theta) is
exp(-i theta Iz).  States are deviation matrices (identity part dropped).

All operations are pure: they return a new ``BlockState``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import gates as g
from .system import (MHZ, DickeSector, SpinStarSystem, check_lopsidedness,
                     dicke_decomposition, lopsidedness_multiplicity)

# 12**alpha / 0.37 s = 1 / 0.28 s
DEFAULT_ORDER_EXPONENT = math.log(0.37 / 0.28) / math.log(12)


@dataclass(frozen=True)
class Block:
    two_j: int
    multiplicity: int
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * (self.two_j + 1)


@dataclass(frozen=True)
class BlockState:
    n: int
    blocks: tuple

    def trace(self) -> complex:
        return sum(b.multiplicity * np.trace(b.rho) for b in self.blocks)

    def block(self, two_j: int) -> Block:
        for b in self.blocks:
            if b.two_j == two_j:
                return b
        raise KeyError(two_j)

    def map_blocks(self, fn) -> "BlockState":
        return BlockState(self.n, tuple(
            Block(b.two_j, b.multiplicity, _frozen(fn(b))) for b in self.blocks))

    def distance(self, other: "BlockState") -> float:
        """Largest elementwise difference between matching blocks."""
        return max(float(np.max(np.abs(a.rho - b.rho))) for a, b in zip(self.blocks, other.blocks))


@dataclass(frozen=True)
class EvolutionParams:
    """Field offset (T) from nominal and channel offsets (Hz)."""

    b0_offset: float = 0.0
    delta_peripheral: float = 0.0
    delta_center: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")

    def offsets(self, system: SpinStarSystem) -> tuple[float, float]:
        """Rotating-frame offsets (nu_center, nu_peripheral) in Hz."""
        nu_c = self.delta_center + system.gamma_center * MHZ * self.b0_offset
        nu_p = self.delta_peripheral + system.gamma_peripheral * MHZ * self.b0_offset
        return nu_c, nu_p


@dataclass(frozen=True)
class RelaxationModel:
    """Coherence-order dependent dephasing plus optional T1 recovery.

    A coherence of orders (dmc, dmj) decays at
    ``|dmc| * rate_center + |dmj| ** order_exponent * rate_peripheral``.
    """

    rate_center: float = 0.0
    rate_peripheral: float = 0.0
    order_exponent: float = DEFAULT_ORDER_EXPONENT
    t1_center: float | None = None
    t1_peripheral: float | None = None

    def __post_init__(self):
        if self.rate_center < 0 or self.rate_peripheral < 0:
            raise ValueError("relaxation rates must be >= 0")
        if not 0.0 <= self.order_exponent <= 1.0:
            raise ValueError("order_exponent must lie in [0, 1]")
        for t1 in (self.t1_center, self.t1_peripheral):
            if t1 is not None and t1 <= 0:
                raise ValueError("T1 must be positive")

    @classmethod
    def from_system(cls, system: SpinStarSystem, with_t1: bool = False) -> "RelaxationModel":
        alpha = DEFAULT_ORDER_EXPONENT
        n = system.n_peripheral
        if n > 1 and system.t2star_noon < system.t2star_peripheral:
            alpha = min(1.0, math.log(system.t2star_peripheral / system.t2star_noon) / math.log(n))
        return cls(
            rate_center=1.0 / system.t2_center,
            rate_peripheral=1.0 / system.t2star_peripheral,
            order_exponent=alpha,
            t1_center=system.t1_center if with_t1 else None,
            t1_peripheral=system.t1_peripheral if with_t1 else None,
        )

    def coherence_rate(self, dmc, dmj):
        dmj = np.abs(np.asarray(dmj, dtype=float))
        order = np.where(dmj > 0, dmj ** self.order_exponent, 0.0)
        return np.abs(dmc) * self.rate_center + order * self.rate_peripheral


# -- per-sector operators --------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _spin_ops(two_j: int):
    """(m, jx, jy, jz) for spin J = two_j / 2, basis m = J, J-1, ..., -J."""
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    jp = np.zeros((two_j + 1, two_j + 1))
    for k in range(1, two_j + 1):
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    jz = np.diag(m)
    for a in (m, jx, jy, jz):
        a.setflags(write=False)
    return m, jx, jy, jz


_IZ = np.diag([0.5, -0.5])
_IX = np.array([[0, 0.5], [0.5, 0]])
_IY = np.array([[0, -0.5j], [0.5j, 0]])
_P0 = np.diag([1.0, 0.0])
_P1 = np.diag([0.0, 1.0])


@lru_cache(maxsize=None)
def _block_ops(two_j: int):
    """Centre and collective operators embedded in one sector block."""
    m, jx, jy, jz = _spin_ops(two_j)
    eye = np.eye(two_j + 1)
    ops = {
        "cx": np.kron(_IX, eye), "cy": np.kron(_IY, eye), "cz": np.kron(_IZ, eye),
        "px": np.kron(np.eye(2), jx), "py": np.kron(np.eye(2), jy), "pz": np.kron(np.eye(2), jz),
    }
    ops["czpz"] = np.kron(_IZ, jz)
    mc = np.repeat([0.5, -0.5], two_j + 1)
    mj = np.tile(m, 2)
    return ops, mc, mj


def _evolve_herm(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-2 pi i h t) for Hermitian h (Hz) by diagonalisation."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-2j * np.pi * w * t)) @ v.conj().T


def _conj(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


# -- state preparation -----------------------------------------------------

def _thermal_diag(two_j: int, gamma_c: float, gamma_p: float) -> np.ndarray:
    _, mc, mj = _block_ops(two_j)
    return gamma_c * mc + gamma_p * mj


def thermal_state(system: SpinStarSystem) -> BlockState:
    """High-temperature deviation state, proportional to gamma_c Iz + gamma_p Jz.

    Populations are in units of MHz/T so peak intensities read directly as
    gyromagnetic ratios times multiplicities.
    """
    n = system.n_peripheral
    blocks = tuple(
        Block(s.two_j, s.multiplicity,
              _frozen(np.diag(_thermal_diag(s.two_j, system.gamma_center, system.gamma_peripheral))))
        for s in dicke_decomposition(n))
    return BlockState(n, blocks)


def pseudopure_state(system: SpinStarSystem, ell: int) -> BlockState:
    """Unit-trace state |0>_c with the peripherals uniformly over lopsidedness ``ell``."""
    n = system.n_peripheral
    check_lopsidedness(n, ell)
    total = lopsidedness_multiplicity(n, ell)
    two_m = ell
    blocks = []
    for s in dicke_decomposition(n):
        rho = np.zeros((2 * s.dim, 2 * s.dim), dtype=complex)
        if s.two_j >= abs(two_m):
            k = (s.two_j - two_m) // 2
            rho[k, k] = 1.0 / total
        blocks.append(Block(s.two_j, s.multiplicity, _frozen(rho)))
    return BlockState(n, tuple(blocks))


def zero_state(n: int) -> BlockState:
    return BlockState(n, tuple(
        Block(s.two_j, s.multiplicity, _frozen(np.zeros((2 * s.dim, 2 * s.dim))))
        for s in dicke_decomposition(n)))


# -- ideal gates -----------------------------------------------------------

def _rotation(two_j: int, species: str, angle: float, phase: float) -> np.ndarray:
    ops, _, _ = _block_ops(two_j)
    k = "c" if species == g.CENTER else "p"
    gen = math.cos(phase) * ops[k + "x"] + math.sin(phase) * ops[k + "y"]
    return _evolve_herm(gen, angle / (2 * math.pi))


def _zrot(two_j: int, species: str, angle: float) -> np.ndarray:
    _, mc, mj = _block_ops(two_j)
    m = mc if species == g.CENTER else mj
    return np.diag(np.exp(-1j * angle * m))


def _collective_not(n: int, two_j: int) -> np.ndarray:
    """X on every peripheral spin, restricted to sector J."""
    sign = -1.0 if ((n - two_j) // 2) % 2 else 1.0
    return sign * np.fliplr(np.eye(two_j + 1))


def gate_unitary(gate, n: int, two_j: int) -> np.ndarray:
    """Block unitary of an instantaneous ideal gate in sector ``two_j``."""
    if isinstance(gate, g.Hadamard):
        # pi/2 about -y, then Z(pi): H up to a global phase
        return _zrot(two_j, gate.species, math.pi) @ _rotation(two_j, gate.species, math.pi / 2, -math.pi / 2)
    if isinstance(gate, g.NOT):
        return _rotation(two_j, gate.species, math.pi, 0.0)
    if isinstance(gate, g.Z):
        return _zrot(two_j, gate.species, gate.angle)
    if isinstance(gate, g.Rot):
        return _rotation(two_j, gate.species, gate.angle, gate.phase)
    if isinstance(gate, g.Readout):
        return _rotation(two_j, g.CENTER, math.pi / 2, gate.phase)
    if isinstance(gate, g.CNOT):
        eye = np.eye(two_j + 1)
        return np.kron(_P0, eye) + np.kron(_P1, _collective_not(n, two_j))
    if isinstance(gate, g.ModCNOT):
        _, mc, mj = _block_ops(two_j)
        coupling = np.diag(np.exp(1j * math.pi * gate.kappa(n) * mc * mj))
        return (_rotation(two_j, g.CENTER, math.pi / 2, math.pi / 2)
                @ _zrot(two_j, g.CENTER, math.pi / 2)
                @ coupling
                @ _rotation(two_j, g.CENTER, math.pi / 2, -math.pi / 2))
    raise ValueError(f"unknown gate {gate!r}")


def apply_ideal_gate(state: BlockState, gate) -> BlockState:
    """Conjugate every block by the ideal gate unitary."""
    if not isinstance(gate, g.UNITARY_GATES):
        raise ValueError(f"unknown gate {gate!r}")
    return state.map_blocks(lambda b: _conj(gate_unitary(gate, state.n, b.two_j), b.rho))


# -- evolution -------------------------------------------------------------

def element_phase_rates(two_j: int, params: EvolutionParams, system: SpinStarSystem) -> np.ndarray:
    """Angular rate (rad/s) at which each block element's phase advances."""
    nu_c, nu_p = params.offsets(system)
    _, mc, mj = _block_ops(two_j)
    e = nu_c * mc + nu_p * mj + system.j_coupling * mc * mj
    return 2 * math.pi * (e[:, None] - e[None, :])


def free_evolve(state: BlockState, params: EvolutionParams, system: SpinStarSystem) -> BlockState:
    """Exact diagonal evolution for ``params.duration`` seconds."""
    t = params.duration
    if t == 0:
        return state
    return state.map_blocks(
        lambda b: b.rho * np.exp(1j * t * element_phase_rates(b.two_j, params, system)))


def _pulse_hamiltonian(two_j: int, rf: dict, params: EvolutionParams, system: SpinStarSystem) -> np.ndarray:
    ops, _, _ = _block_ops(two_j)
    nu_c, nu_p = params.offsets(system)
    extra = {s: rf[s][2] if s in rf else 0.0 for s in g.SPECIES}
    h = -((nu_c + extra[g.CENTER]) * ops["cz"] + (nu_p + extra[g.PERIPHERAL]) * ops["pz"]
          + system.j_coupling * ops["czpz"])
    for species, (nu1, phase, _) in rf.items():
        k = "c" if species == g.CENTER else "p"
        h = h + nu1 * (math.cos(phase) * ops[k + "x"] + math.sin(phase) * ops[k + "y"])
    return h


def simultaneous_pulse(state: BlockState, rf: dict, duration: float,
                       params: EvolutionParams, system: SpinStarSystem) -> BlockState:
    """Finite pulse with RF on one or both species.

    ``rf`` maps species to ``(nutation_hz, rf_phase_rad, carrier_offset_hz)``.
    Offsets, J coupling and RF act together over ``duration``.
    """
    if duration == 0:
        return state
    return state.map_blocks(lambda b: _conj(
        _evolve_herm(_pulse_hamiltonian(b.two_j, rf, params, system), duration), b.rho))


def finite_pulse(state: BlockState, species: str, nutation_hz: float, duration_s: float,
                 rf_phase_rad: float, carrier_offset_hz: float, params: EvolutionParams,
                 system: SpinStarSystem) -> BlockState:
    """Rectangular pulse of flip angle 2 pi nutation_hz duration_s on one species."""
    if not nutation_hz > 0:
        raise ValueError("nutation_hz must be positive")
    return simultaneous_pulse(state, {species: (nutation_hz, rf_phase_rad, carrier_offset_hz)},
                              duration_s, params, system)


def bb1_phase(target_angle: float) -> float:
    """BB1 correction phase arccos(-theta / 4 pi)."""
    return math.acos(-target_angle / (4 * math.pi))


def bb1_segments(target_angle: float, rf_phase: float) -> list[tuple[float, float]]:
    """(angle, phase) segments: theta_phi, pi_(phi+p1), 2pi_(phi+3p1), pi_(phi+p1)."""
    p1 = bb1_phase(target_angle)
    return [(target_angle, rf_phase), (math.pi, rf_phase + p1),
            (2 * math.pi, rf_phase + 3 * p1), (math.pi, rf_phase + p1)]


def bb1_pulse(state: BlockState, species: str, target_angle: float, rf_phase: float,
              nutation_hz: float, params: EvolutionParams, system: SpinStarSystem,
              amplitude_error: float = 0.0, carrier_offset_hz: float = 0.0) -> BlockState:
    """BB1 composite pulse; ``amplitude_error`` is the fractional RF miscalibration."""
    if not 0 < target_angle <= 2 * math.pi:
        raise ValueError("target_angle must lie in (0, 2 pi]")
    nu1 = nutation_hz * (1 + amplitude_error)
    for angle, phase in bb1_segments(target_angle, rf_phase):
        state = finite_pulse(state, species, nu1, angle / (2 * math.pi * nutation_hz),
                             phase, carrier_offset_hz, params, system)
    return state


def relax(state: BlockState, duration: float, model: RelaxationModel,
          system: SpinStarSystem | None = None) -> BlockState:
    """Coherence-order damping, plus T1 recovery of the zero-quantum part.

    T1 recovery pairs the m_c = +1/2 and -1/2 halves of the zero-quantum part:
    their mean relaxes with the peripheral T1, their half-difference with the
    centre T1, each toward the thermal state.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return state
    use_t1 = model.t1_center is not None or model.t1_peripheral is not None
    if use_t1 and system is None:
        raise ValueError("T1 recovery needs the system to define the thermal target")

    def step(b: Block) -> np.ndarray:
        _, mc, mj = _block_ops(b.two_j)
        dmc = mc[:, None] - mc[None, :]
        dmj = mj[:, None] - mj[None, :]
        rho = b.rho * np.exp(-duration * model.coherence_rate(dmc, dmj))
        if not use_t1:
            return rho
        d = b.two_j + 1
        target = _thermal_diag(b.two_j, system.gamma_center, system.gamma_peripheral)
        up, down = np.diag(rho)[:d] - target[:d], np.diag(rho)[d:] - target[d:]
        fs = math.exp(-duration / model.t1_peripheral) if model.t1_peripheral else 1.0
        fa = math.exp(-duration / model.t1_center) if model.t1_center else 1.0
        s, a = (up + down) / 2 * fs, (up - down) / 2 * fa
        rho = rho.copy()
        idx = np.arange(2 * d)
        rho[idx, idx] = target + np.concatenate([s + a, s - a])
        return rho

    return state.map_blocks(step)


# -- readout ---------------------------------------------------------------

def measure_center_peaks(state: BlockState) -> list[tuple[int, complex]]:
    """Multiplicity-weighted <+1/2, m| rho |-1/2, m> for each ell = 2m, ascending."""
    n = state.n
    out = []
    for ell in range(-n, n + 1, 2):
        amp = 0j
        for b in state.blocks:
            if b.two_j >= abs(ell):
                k = (b.two_j - ell) // 2
                amp += b.multiplicity * b.rho[k, b.two_j + 1 + k]
        out.append((ell, complex(amp)))
    return out
