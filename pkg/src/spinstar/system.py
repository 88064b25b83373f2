"""Spin-star molecule description and multiplet combinatorics.

A spin-star has one central spin coupled with equal strength J to N
chemically equivalent peripheral spins.  The peripheral register is
labelled by its lopsidedness ``ell = U - D`` (up minus down spins), which
indexes the N + 1 lines of the central-spin multiplet.

Gyromagnetic ratios are kept in MHz/T; convert with ``MHZ`` at the point of
use.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

MHZ = 1.0e6

GAMMA_H = 42.577
GAMMA_SI = -8.465


class DomainError(ValueError):
    """Raised when a lopsidedness or spin count is outside its valid range."""


@dataclass(frozen=True)
class SpinStarSystem:
    """Physical parameters of a spin-star sensor molecule.

    Times are in seconds, gyromagnetic ratios in MHz/T, the coupling in Hz.
    """

    n_peripheral: int
    gamma_center: float
    gamma_peripheral: float = GAMMA_H
    j_coupling: float = 6.63
    t1_center: float = 25.4
    t2_center: float = 1.2
    t1_peripheral: float = 8.9
    t2_peripheral: float = 1.6
    t2star_peripheral: float = 0.37
    t2star_noon: float = 0.28
    pulse_pi2_center: float = 17e-6
    pulse_pi2_peripheral: float = 27e-6
    name: str = "custom"

    def __post_init__(self) -> None:
        if int(self.n_peripheral) != self.n_peripheral or self.n_peripheral < 1:
            raise DomainError(f"n_peripheral must be a positive integer, got {self.n_peripheral!r}")
        if not self.j_coupling > 0:
            raise DomainError(f"j_coupling must be positive, got {self.j_coupling!r}")
        if self.gamma_center == 0:
            raise DomainError("gamma_center must be nonzero")
        for f in ("t1_center", "t2_center", "t1_peripheral", "t2_peripheral",
                  "t2star_peripheral", "t2star_noon", "pulse_pi2_center", "pulse_pi2_peripheral"):
            if not getattr(self, f) > 0:
                raise DomainError(f"{f} must be positive, got {getattr(self, f)!r}")

    @property
    def gamma_ratio(self) -> float:
        """Peripheral-to-center gyromagnetic ratio (about -5.03 for TMS)."""
        return self.gamma_peripheral / self.gamma_center

    @property
    def n_peaks(self) -> int:
        return self.n_peripheral + 1

    def lopsidedness_values(self) -> list[int]:
        """All valid ell, ascending: -N, -N+2, ..., N."""
        n = self.n_peripheral
        return list(range(-n, n + 1, 2))

    def with_updates(self, **changes: Any) -> "SpinStarSystem":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def tms() -> SpinStarSystem:
    """Tetramethylsilane: 29Si centre, twelve 1H."""
    return SpinStarSystem(n_peripheral=12, gamma_center=GAMMA_SI, name="tms")


def tmp(gamma_center: float, j_coupling: float, **overrides: Any) -> SpinStarSystem:
    """Trimethylphosphite: 31P centre, nine 1H.

    The centre gyromagnetic ratio and the P-H coupling have no published
    defaults here and must be supplied.
    """
    return SpinStarSystem(n_peripheral=9, gamma_center=gamma_center,
                          j_coupling=j_coupling, name="tmp", **overrides)


PRESETS = {"tms": tms}


def system_from_dict(data: dict[str, Any]) -> SpinStarSystem:
    """Build a system from a JSON-like mapping, with optional ``preset`` key."""
    data = dict(data)
    preset = data.pop("preset", None)
    known = {f.name for f in fields(SpinStarSystem)}
    unknown = set(data) - known
    if unknown:
        raise KeyError(f"unknown system keys: {sorted(unknown)}")
    if preset is None:
        return SpinStarSystem(**data)
    if preset == "tms":
        return replace(tms(), **data)
    if preset == "tmp":
        missing = {"gamma_center", "j_coupling"} - set(data)
        if missing:
            raise KeyError(f"preset 'tmp' requires {sorted(missing)}")
        return tmp(**data)
    raise KeyError(f"unknown preset {preset!r}")


def load_system(path: str | Path) -> SpinStarSystem:
    return system_from_dict(json.loads(Path(path).read_text()))


# -- combinatorics ---------------------------------------------------------

def check_lopsidedness(n: int, ell: int) -> None:
    if int(ell) != ell:
        raise DomainError(f"lopsidedness must be an integer, got {ell!r}")
    if abs(ell) > n:
        raise DomainError(f"|ell|={abs(ell)} exceeds n={n}")
    if (n - ell) % 2:
        raise DomainError(f"ell={ell} has the wrong parity for n={n}")


def lopsidedness_multiplicity(n: int, ell: int) -> int:
    """Number of peripheral configurations with lopsidedness ``ell``."""
    check_lopsidedness(n, ell)
    return math.comb(n, (n + ell) // 2)


@dataclass(frozen=True)
class DickeSector:
    """Irreducible collective-spin block.

    ``two_j`` stores 2J so half-integer spins stay exact integers.
    """

    two_j: int
    multiplicity: int

    @property
    def j_total(self) -> Fraction:
        return Fraction(self.two_j, 2)

    @property
    def dim(self) -> int:
        return self.two_j + 1


def dicke_decomposition(n: int) -> list[DickeSector]:
    """Collective-spin sectors of ``n`` spin-1/2, largest J first.

    Multiplicity of J is C(n, n/2 - J) - C(n, n/2 - J - 1).
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sectors = []
    for two_j in range(n, -1, -2):
        k = (n - two_j) // 2
        d = math.comb(n, k) - (math.comb(n, k - 1) if k >= 1 else 0)
        sectors.append(DickeSector(two_j, d))
    return sectors


def peak_frequency(ell: int, delta_center: float, j_coupling: float) -> float:
    """Centre-spin transition frequency (Hz) for peripheral lopsidedness ``ell``."""
    return delta_center + ell * j_coupling / 2.0
