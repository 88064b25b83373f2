"""Gate vocabulary shared by the engines and the pulse compiler.

Species are ``"center"`` and ``"peripheral"``; peripheral gates act on all
peripheral spins at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

CENTER = "center"
PERIPHERAL = "peripheral"
SPECIES = (CENTER, PERIPHERAL)


def _check_species(species: str) -> None:
    if species not in SPECIES:
        raise ValueError(f"unknown species {species!r}")


@dataclass(frozen=True)
class Hadamard:
    species: str = CENTER

    def __post_init__(self):
        _check_species(self.species)


@dataclass(frozen=True)
class NOT:
    species: str = CENTER

    def __post_init__(self):
        _check_species(self.species)


@dataclass(frozen=True)
class Z:
    """Rotation exp(-i angle Iz) on one species."""

    species: str
    angle: float

    def __post_init__(self):
        _check_species(self.species)


@dataclass(frozen=True)
class Rot:
    """Rotation by ``angle`` about the transverse axis at ``phase``."""

    species: str
    angle: float
    phase: float = 0.0

    def __post_init__(self):
        _check_species(self.species)


@dataclass(frozen=True)
class CNOT:
    """Collective NOT on the peripherals, controlled by the centre in |1>."""

    control: str = CENTER
    target: str = PERIPHERAL

    def __post_init__(self):
        if (self.control, self.target) != (CENTER, PERIPHERAL):
            raise ValueError("only centre-controlled CNOT onto the peripherals is a plain CNOT; "
                             "use ModCNOT for a centre target")


@dataclass(frozen=True)
class ModCNOT:
    """Centre-target NOT conditioned on the peripheral branch.

    ``lines="all"`` uses a conventional 1/(2J) coupling window and
    disentangles every multiplet line when N is odd.  ``lines="outer"`` uses
    a 1/(2NJ) window matched to the outermost-line separation and only
    disentangles the NOON (|ell| = N) line.
    """

    lines: str = "all"

    def __post_init__(self):
        if self.lines not in ("all", "outer"):
            raise ValueError(f"lines must be 'all' or 'outer', got {self.lines!r}")

    def kappa(self, n: int) -> float:
        """Coupling window in units of 1/(2J)."""
        return 1.0 if self.lines == "all" else 1.0 / n


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("delay must be >= 0")


@dataclass(frozen=True)
class Echo:
    """Free evolution with refocusing pi_x pulses at 1/4 and 3/4 of the window."""

    species: tuple
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("echo window must be >= 0")
        if not self.species:
            raise ValueError("echo needs at least one species")
        for s in self.species:
            _check_species(s)
        object.__setattr__(self, "species", tuple(self.species))


def PiPair(species: str, duration: float) -> Echo:
    """Two pi pulses on one species separated by half of ``duration``."""
    return Echo((species,), duration)


@dataclass(frozen=True)
class Readout:
    """Centre pi/2 excitation before acquisition; -y by default."""

    phase: float = -math.pi / 2


@dataclass(frozen=True)
class FinitePulse:
    """Rectangular pulse of given RF amplitude and length, usable in gate lists."""

    species: str
    nutation_hz: float
    duration: float
    phase: float = 0.0

    def __post_init__(self):
        _check_species(self.species)
        if not self.nutation_hz > 0 or self.duration < 0:
            raise ValueError("finite pulse needs nutation_hz > 0 and duration >= 0")


Gate = Union[FinitePulse, Hadamard, NOT, Z, Rot, CNOT, ModCNOT, Delay, Echo, Readout]
UNITARY_GATES = (Hadamard, NOT, Z, Rot, CNOT, ModCNOT, Readout)
