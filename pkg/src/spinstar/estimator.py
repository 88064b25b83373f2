"""Magnetic-field estimation from per-line phases.

Line ``ell`` accumulates phase at 2 pi (c_ell B0 + offset terms) during the
sensing delay, where c_ell = ell gamma_p + gamma_c for the original sequence
and ell gamma_p once the centre spin is disentangled.  Each line therefore
gives a comb of field candidates spaced 1 / (t |c_ell|); the inner lines
have coarse combs and pick the branch for the outer, more precise ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .system import MHZ, SpinStarSystem, check_lopsidedness

MODES = ("original", "disentangled")
_TIE_TOL = 1e-9


def mode_for_sequence(kind: str) -> str:
    return "original" if kind == "original" else "disentangled"


def phase_rate_coefficient(ell: int, system: SpinStarSystem, mode: str) -> float:
    """Phase rate per unit field, in Hz/T."""
    check_lopsidedness(system.n_peripheral, ell)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    coef = ell * system.gamma_peripheral
    if mode == "original":
        coef += system.gamma_center
    return coef * MHZ


def amplification(ell: int, system: SpinStarSystem) -> float:
    """Line amplitude gain from polarisation priming, 1 + gamma_R ell."""
    check_lopsidedness(system.n_peripheral, ell)
    return 1.0 + system.gamma_ratio * ell


def seq_a_pinned_center(ell: int) -> float:
    """m_c held by line ``ell`` between the two all-line ModCNOTs (odd N)."""
    if ell % 2 == 0:
        raise ValueError("seq_a lines have odd lopsidedness")
    return 0.5 * (-1) ** ((ell - 1) // 2)


@dataclass(frozen=True)
class PhaseModel:
    """What the estimator assumes about the sensing period.

    ``sequence`` selects the deterministic J-coupling phase: zero for the
    original sequence and the echo variant, 2 pi t J ell m_c for seq_a where
    the centre sits in a fixed state m_c during the delay.
    """

    mode: str
    delay: float
    delta_peripheral: float = 0.0
    delta_center: float = 0.0
    sequence: str = "original"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.delay > 0:
            raise ValueError("delay must be > 0")

    @classmethod
    def for_sequence(cls, kind: str, delay: float, delta_peripheral: float = 0.0,
                     delta_center: float = 0.0) -> "PhaseModel":
        return cls(mode_for_sequence(kind), delay, delta_peripheral, delta_center, kind)

    def j_correction(self, ell: int, system: SpinStarSystem) -> float:
        if self.sequence != "seq_a":
            return 0.0
        return 2 * math.pi * self.delay * system.j_coupling * ell * seq_a_pinned_center(ell)

    def offset_phase(self, ell: int) -> float:
        off = ell * self.delta_peripheral
        if self.mode == "original":
            off += self.delta_center
        return 2 * math.pi * self.delay * off


def _reduced_phase(phase: float, ell: int, model: PhaseModel, system: SpinStarSystem) -> float:
    return phase - model.offset_phase(ell) - model.j_correction(ell, system)


def candidate(phase: float, ell: int, k: int, model: PhaseModel, system: SpinStarSystem) -> float:
    c = phase_rate_coefficient(ell, system, model.mode)
    return (_reduced_phase(phase, ell, model, system) + 2 * math.pi * k) / (2 * math.pi * model.delay * c)


def peak_candidates(measurement, model: PhaseModel, system: SpinStarSystem,
                    prior_range: tuple[float, float], max_candidates: int = 100_000) -> list[tuple[int, float]]:
    """(k, B0) branches of one line that fall inside ``prior_range``.

    A line with zero coefficient carries no field information and returns
    an empty list.
    """
    ell = measurement.ell
    c = phase_rate_coefficient(ell, system, model.mode)
    if c == 0:
        return []
    lo, hi = sorted(prior_range)
    base = _reduced_phase(measurement.phase, ell, model, system)
    scale = 2 * math.pi * model.delay * c
    ks = sorted(((lo * scale - base) / (2 * math.pi), (hi * scale - base) / (2 * math.pi)))
    k0, k1 = math.ceil(ks[0] - _TIE_TOL), math.floor(ks[1] + _TIE_TOL)
    if k1 - k0 + 1 > max_candidates:
        raise ValueError(f"prior range admits {k1 - k0 + 1} branches for ell={ell}")
    return [(k, (base + 2 * math.pi * k) / scale) for k in range(k0, k1 + 1)]


@dataclass
class PeakRecord:
    ell: int
    phase: float
    coefficient: float
    sigma: float
    weight: float
    k: int
    b0: float
    candidates: list = field(default_factory=list)


@dataclass
class FieldEstimate:
    b0: float
    sigma: float
    peaks: list
    flags: list

    def to_dict(self) -> dict:
        return {
            "b0_tesla": self.b0,
            "sigma_tesla": self.sigma,
            "peaks": [{"ell": p.ell, "phase_rad": p.phase, "k": p.k, "weight": p.weight,
                       "b0_tesla": p.b0} for p in self.peaks],
            "flags": list(self.flags),
        }

    @property
    def degraded(self) -> bool:
        return "degraded" in self.flags


def _nearest_branch(target: float, phase: float, ell: int, model: PhaseModel,
                    system: SpinStarSystem) -> tuple[int, bool]:
    c = phase_rate_coefficient(ell, system, model.mode)
    x = (target * 2 * math.pi * model.delay * c - _reduced_phase(phase, ell, model, system)) / (2 * math.pi)
    lo = math.floor(x)
    frac = x - lo
    if abs(frac - 0.5) < _TIE_TOL:
        return (lo if abs(lo) <= abs(lo + 1) else lo + 1), True
    return (lo if frac < 0.5 else lo + 1), False


def usable(measurement, model: PhaseModel, system: SpinStarSystem) -> bool:
    sigma = getattr(measurement, "phase_sigma", None)
    return (phase_rate_coefficient(measurement.ell, system, model.mode) != 0
            and getattr(measurement, "calibrated", True)
            and abs(measurement.amplitude) > 0
            and sigma is not None and math.isfinite(sigma) and sigma > 0)


def fuse(peaks, model: PhaseModel, system: SpinStarSystem,
         prior_range: tuple[float, float]) -> FieldEstimate:
    """Coarse-to-fine branch selection followed by an inverse-variance mean.

    Lines are visited by increasing |coefficient|.  The first picks the branch
    nearest the centre of ``prior_range``; every later line takes the branch
    nearest the running weighted mean.  Each line's field sigma is
    phase_sigma / (2 pi t |c|), i.e. weights (SNR |c|)^2 up to a constant.
    """
    lo, hi = sorted(prior_range)
    good = [p for p in peaks if usable(p, model, system)]
    if not good:
        raise ValueError("no usable peaks")
    good.sort(key=lambda p: (abs(phase_rate_coefficient(p.ell, system, model.mode)), p.ell))
    flags: list[str] = []
    records: list[PeakRecord] = []
    wsum = wbsum = 0.0
    for i, p in enumerate(good):
        c = phase_rate_coefficient(p.ell, system, model.mode)
        sig_b = p.phase_sigma / (2 * math.pi * model.delay * abs(c))
        w = 1.0 / sig_b ** 2
        if i == 0:
            cands = peak_candidates(p, model, system, (lo, hi))
            centre = (lo + hi) / 2
            if not cands:
                flags.append("no_candidate_in_prior")
                k, tie = _nearest_branch(centre, p.phase, p.ell, model, system)
            else:
                if len(cands) > 1:
                    flags.append("ambiguous_prior")
                k, tie = _nearest_branch(centre, p.phase, p.ell, model, system)
        else:
            cands = []
            k, tie = _nearest_branch(wbsum / wsum, p.phase, p.ell, model, system)
        if tie:
            flags.append(f"tie_ell_{p.ell}")
        b = candidate(p.phase, p.ell, k, model, system)
        wsum += w
        wbsum += w * b
        records.append(PeakRecord(p.ell, p.phase, c, sig_b, w, k, b, cands))
    b0 = wbsum / wsum
    sigma = 1.0 / math.sqrt(wsum)
    if any(abs(r.b0 - b0) > 3 * r.sigma for r in records):
        flags.append("degraded")
    records.sort(key=lambda r: r.ell)
    return FieldEstimate(b0, sigma, records, flags)


def per_peak_estimates(peaks, model: PhaseModel, system: SpinStarSystem,
                       reference_b0: float = 0.0) -> list[tuple[int, float]]:
    """Each line's own field estimate, on the branch nearest ``reference_b0``."""
    out = []
    for p in peaks:
        if phase_rate_coefficient(p.ell, system, model.mode) == 0:
            continue
        k, _ = _nearest_branch(reference_b0, p.phase, p.ell, model, system)
        out.append((p.ell, candidate(p.phase, p.ell, k, model, system)))
    return out


def unambiguous_range(ell: int, model: PhaseModel, system: SpinStarSystem) -> float:
    """Width of field interval over which line ``ell`` alone is unambiguous."""
    c = phase_rate_coefficient(ell, system, model.mode)
    return math.inf if c == 0 else 1.0 / (model.delay * abs(c))


def sensitivity_report(system: SpinStarSystem, mode: str) -> list[dict]:
    """Per-line phase sensitivity relative to lone centre and peripheral spins."""
    rows = []
    for ell in system.lopsidedness_values():
        c = phase_rate_coefficient(ell, system, mode) / MHZ
        rows.append({
            "ell": ell,
            "coefficient_mhz_per_t": c,
            "vs_center": abs(c) / abs(system.gamma_center),
            "vs_peripheral": abs(c) / abs(system.gamma_peripheral),
        })
    return rows


def scaling_comparison(n: int) -> dict:
    """Standard-quantum-limit (sqrt N) versus cat-state (N) gain for N probes."""
    return {"n": n, "standard_quantum_limit": math.sqrt(n), "heisenberg": float(n)}
