"""End-to-end runs: state preparation, sequence, readout, spectral processing, estimation.

A run is fully described by a :class:`RunConfig`.  All randomness is drawn
from streams derived from ``(seed, point index, role, cycle step)`` so that
results do not depend on the order or thread in which runs execute.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import compiler as cp
from . import dicke as d
from . import estimator as est
from . import spectro as sp
from .runner import acquire, simulate_program
from .system import MHZ, PRESETS, SpinStarSystem, system_from_dict, tmp

READOUTS = ("spectral", "direct")
EXPERIMENTS = ("field", "thermal")
SWEEP_AXES = ("delta_center", "delta_peripheral", "b0")
MAX_AUTO_POINTS = 1 << 20
_SEQUENCE_ALIASES = {"a": "seq_a", "b": "seq_b"}

# stream roles
_REFERENCE, _TARGET = 0, 1


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``system`` holds overrides on top of ``preset`` (or a complete system
    when ``preset`` is None; the ``tmp`` preset needs ``gamma_center`` and
    ``j_coupling``).  Offsets are in Hz, ``b0`` in tesla.  ``estimator_delta_h``
    and ``estimator_delta_si`` are the offsets the estimator assumes; None
    means the true values.  Noise levels are in the units of the simulated
    deviation density matrix; ``noise_sigma`` is the per-sample, per-quadrature
    level at the default 4 ms dwell and scales as 1/sqrt(dwell) otherwise.
    """

    preset: str | None = "tms"
    system: dict = field(default_factory=dict)
    experiment: str = "field"
    sequence: str = "seq_b"
    priming: bool = True
    pulses: str = "ideal"
    amplitude_error: float = 0.0
    relaxation: bool = False
    delay: float = 0.1
    b0: float = 0.0
    delta_h: float = 0.0
    delta_si: float = 0.0
    estimator_delta_h: float | None = None
    estimator_delta_si: float | None = None
    readout: str = "spectral"
    dwell: float | None = None
    points: int | None = None
    zero_fill: int | None = None
    noise_sigma: float = 0.0
    phase_noise: float = 0.0
    dc_offset: tuple = (0.0, 0.0)
    quad_gain_imbalance: float = 0.0
    quad_phase_error: float = 0.0
    drift: tuple = (0.0, 0.0)
    phase_cycle: bool = False
    prior_range: tuple | None = None
    seed: int = 0
    out: str = "out"
    workers: int = 1
    fail_on_degraded: bool = False
    sweep_axis: str = "delta_center"
    sweep_values: tuple = ()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        data = dict(data)
        for key in ("dc_offset", "drift", "prior_range", "sweep_values"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        return cls.from_dict(data)

    def updated(self, **changes) -> "RunConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def sequence_kind(self) -> str:
        return _SEQUENCE_ALIASES.get(self.sequence, self.sequence)

    def build_system(self) -> SpinStarSystem:
        try:
            if self.preset is None:
                return system_from_dict(self.system)
            if self.preset == "tmp":
                extra = dict(self.system)
                if "gamma_center" not in extra or "j_coupling" not in extra:
                    raise ConfigError("system: preset 'tmp' needs gamma_center and j_coupling")
                return tmp(extra.pop("gamma_center"), extra.pop("j_coupling"), **extra)
            if self.preset not in PRESETS:
                raise ConfigError(f"preset: unknown preset {self.preset!r}")
            base = PRESETS[self.preset]()
            return base.with_updates(**self.system) if self.system else base
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"system: {exc}") from exc

    def validate(self) -> None:
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(f"{name}: {msg}")

        system = self.build_system()
        need(self.experiment in EXPERIMENTS, "experiment", f"must be one of {EXPERIMENTS}")
        need(self.sequence_kind in cp.SEQUENCE_KINDS, "sequence",
             "must be original, a, b, seq_a or seq_b")
        need(self.pulses in cp.PULSE_MODELS, "pulses", f"must be one of {cp.PULSE_MODELS}")
        need(self.readout in READOUTS, "readout", f"must be one of {READOUTS}")
        need(isinstance(self.priming, bool), "priming", "must be a boolean")
        need(self.delay >= 0 and math.isfinite(self.delay), "delay", "must be >= 0")
        if self.sequence_kind == "seq_a" and system.n_peripheral % 2 == 0:
            raise ConfigError(f"sequence: seq_a needs odd N, got N={system.n_peripheral}")
        for name in ("b0", "delta_h", "delta_si", "amplitude_error", "quad_gain_imbalance",
                     "quad_phase_error"):
            need(math.isfinite(getattr(self, name)), name, "must be finite")
        need(self.noise_sigma >= 0, "noise_sigma", "must be >= 0")
        need(self.phase_noise >= 0, "phase_noise", "must be >= 0")
        need(self.dwell is None or self.dwell > 0, "dwell", "must be > 0")
        need(self.points is None or self.points >= 2, "points", "must be >= 2")
        if self.zero_fill is not None:
            z = self.zero_fill
            need(z >= (self.points or sp.DEFAULT_POINTS) and z & (z - 1) == 0, "zero_fill",
                 "must be a power of two >= points")
        need(len(self.dc_offset) == 2 and len(self.drift) == 2, "dc_offset",
             "dc_offset and drift are [re, im] pairs")
        if self.prior_range is not None:
            need(len(self.prior_range) == 2 and self.prior_range[0] < self.prior_range[1],
                 "prior_range", "must be [lo, hi] with lo < hi")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64, "seed", "must be a u64")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        need(self.sweep_axis in SWEEP_AXES, "sweep_axis", f"must be one of {SWEEP_AXES}")

    def corruption(self) -> sp.Corruption:
        return sp.Corruption(self.noise_sigma, complex(*self.dc_offset), self.quad_gain_imbalance,
                             self.quad_phase_error, complex(*self.drift))


def stream_seed(seed: int, *path: int) -> int:
    """Independent 64-bit seed for the stream at ``path`` below ``seed``."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, np.uint64)[0])


def acquisition_params(cfg: RunConfig, system: SpinStarSystem) -> tuple[float, int, int]:
    """(dwell, points, zero_fill); unset values follow the multiplet extent.

    Defaults are 4 ms, 2048 and 16384.  When the multiplet reaches beyond
    80% of the default Nyquist band, the dwell shrinks to put Nyquist at
    1.25x the extent and the point count grows to keep the acquisition length.
    """
    extent = abs(cfg.delta_si) + system.n_peripheral * system.j_coupling / 2
    dwell = cfg.dwell
    if dwell is None:
        dwell = sp.DEFAULT_DWELL
        if extent > 0.8 / (2 * dwell):
            dwell = 1.0 / (2.5 * extent)
    points = cfg.points
    if points is None:
        target = sp.DEFAULT_POINTS * sp.DEFAULT_DWELL / dwell
        points = 1 << max(int(math.ceil(math.log2(target - 1e-9))), 1)
        if points > MAX_AUTO_POINTS:
            raise ConfigError(f"delta_si: multiplet extent {extent:.6g} Hz needs {points} samples; "
                              f"set dwell and points explicitly")
    zero_fill = cfg.zero_fill
    if zero_fill is None:
        zero_fill = max(sp.DEFAULT_ZERO_FILL, 1 << int(math.ceil(math.log2(8 * points))))
    return dwell, points, zero_fill


@dataclass
class Acquired:
    """One acquisition: amplitudes, and the spectrum when read out spectrally."""

    amplitudes: list
    peaks: list
    spectrum: sp.Spectrum | None = None


class Experiment:
    """Executes the chain for one configuration."""

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        self.cfg = cfg
        self.system = cfg.build_system()
        self.params = d.EvolutionParams(cfg.b0, cfg.delta_h, cfg.delta_si)
        self.line_model = d.RelaxationModel.from_system(self.system)
        self.relaxation = self.line_model if cfg.relaxation else None

    # -- simulation --

    def program(self, delay: float | None = None) -> cp.PulseProgram:
        cfg = self.cfg
        if cfg.experiment == "thermal":
            ir = cp.spectrum_sequence(cfg.priming)
        else:
            ir = cp.build_sequence(cfg.sequence_kind, cfg.priming,
                                   cfg.delay if delay is None else delay, self.system)
        return cp.compile_ir(ir, self.system, cfg.pulses)

    def amplitudes(self, program: cp.PulseProgram) -> list[tuple[int, complex]]:
        state = simulate_program(d.thermal_state(self.system), program, self.params, self.system,
                                 self.relaxation, self.cfg.amplitude_error)
        return acquire(state)

    @property
    def center_offset(self) -> float:
        """Actual centre precession frequency during acquisition (Hz)."""
        return self.cfg.delta_si + self.system.gamma_center * MHZ * self.cfg.b0

    # -- readout --

    def acquire(self, delay: float | None, index: int, role: int) -> Acquired:
        cfg = self.cfg
        base = self.program(delay)
        variants = cp.phase_cycle_variants(base) if cfg.phase_cycle else [base]
        amps_per = [self.amplitudes(p) for p in variants]
        if cfg.readout == "direct":
            amps = [(ell, sum(a[i][1] * complex(math.cos(p.receiver_phase), math.sin(p.receiver_phase))
                              for a, p in zip(amps_per, variants)))
                    for i, (ell, _) in enumerate(amps_per[0])]
            peaks = self._direct_peaks(amps, index, role)
            return Acquired(amps, peaks)
        dwell, points, zero_fill = acquisition_params(cfg, self.system)
        # fixed noise density: per-sample sigma grows with the sampling bandwidth
        sigma = cfg.noise_sigma * math.sqrt(sp.DEFAULT_DWELL / dwell)
        corruption = dataclasses.replace(cfg.corruption(), noise_sigma=sigma)
        fids = [sp.synthesize_fid(a, self.system, self.line_model, dwell, points, corruption,
                                  stream_seed(cfg.seed, index, role, k), self.center_offset)
                for k, a in enumerate(amps_per)]
        fid = sp.combine_phase_cycle(fids, [p.receiver_phase for p in variants])
        spectrum = sp.process(fid, zero_fill)
        noise = sigma * math.sqrt(len(variants)) if sigma else None
        peaks = sp.extract_peaks(spectrum, self.system, self.center_offset, self.line_model,
                                 noise_sigma=noise)
        return Acquired(amps_per[0], peaks, spectrum)

    def _direct_peaks(self, amps, index: int, role: int) -> list[sp.PeakMeasurement]:
        peaks = sp.direct_measurements(amps, self.system, self.center_offset)
        sigma = self.cfg.phase_noise
        if not sigma:
            return peaks
        rng = np.random.default_rng(stream_seed(self.cfg.seed, index, role))
        kicks = rng.normal(0.0, sigma, len(peaks))
        # phase noise is injected on the target only; the reference is taken as exact
        if role == _REFERENCE:
            kicks[:] = 0.0
        return [dataclasses.replace(p, amplitude=p.amplitude * complex(math.cos(k), math.sin(k)),
                                    phase_sigma=sigma)
                for p, k in zip(peaks, kicks)]

    # -- estimation --

    def phase_model(self) -> est.PhaseModel:
        cfg = self.cfg
        dh = cfg.delta_h if cfg.estimator_delta_h is None else cfg.estimator_delta_h
        ds = cfg.delta_si if cfg.estimator_delta_si is None else cfg.estimator_delta_si
        return est.PhaseModel.for_sequence(cfg.sequence_kind, cfg.delay, dh, ds)

    def prior_range(self, model: est.PhaseModel) -> tuple[float, float]:
        if self.cfg.prior_range is not None:
            return tuple(self.cfg.prior_range)
        widths = [est.unambiguous_range(ell, model, self.system)
                  for ell in self.system.lopsidedness_values()]
        half = max(w for w in widths if math.isfinite(w)) / 2
        return (-half, half)


@dataclass
class SpectrumResult:
    spectrum: sp.Spectrum | None
    peaks: list


@dataclass
class EstimateResult:
    estimate: est.FieldEstimate
    peaks: list
    per_peak: list
    reference: list
    target_spectrum: sp.Spectrum | None = None


def run_spectrum(cfg: RunConfig, index: int = 0) -> SpectrumResult:
    """Single acquisition; field runs are phased against a zero-delay reference."""
    ex = Experiment(cfg)
    target = ex.acquire(None, index, _TARGET)
    if cfg.experiment == "thermal":
        return SpectrumResult(target.spectrum, target.peaks)
    ref = ex.acquire(0.0, index, _REFERENCE)
    _, (peaks,) = sp.calibrate_and_apply_phase(ref.peaks, [target.peaks])
    return SpectrumResult(target.spectrum, peaks)


def run_estimate(cfg: RunConfig, index: int = 0) -> EstimateResult:
    """Field run plus zero-delay reference, calibration, extraction and fusion."""
    if cfg.experiment != "field":
        raise ConfigError("experiment: estimation needs a field experiment")
    if not cfg.delay > 0:
        raise ConfigError("delay: estimation needs delay > 0")
    ex = Experiment(cfg)
    ref = ex.acquire(0.0, index, _REFERENCE)
    target = ex.acquire(None, index, _TARGET)
    ref_peaks, (peaks,) = sp.calibrate_and_apply_phase(ref.peaks, [target.peaks])
    model = ex.phase_model()
    fused = est.fuse(peaks, model, ex.system, ex.prior_range(model))
    per_peak = est.per_peak_estimates(peaks, model, ex.system, fused.b0)
    return EstimateResult(fused, peaks, per_peak, ref_peaks, target.spectrum)


@dataclass
class SweepPoint:
    index: int
    value: float
    result: EstimateResult | None
    error: str | None = None


def _sweep_config(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    key = {"delta_center": "delta_si", "delta_peripheral": "delta_h", "b0": "b0"}[axis]
    return cfg.updated(**{key: float(value)})


def _run_point(cfg: RunConfig, axis: str, index: int, value: float) -> SweepPoint:
    try:
        return SweepPoint(index, value, run_estimate(_sweep_config(cfg, axis, value), index))
    except (ValueError, np.linalg.LinAlgError) as exc:
        return SweepPoint(index, value, None, f"{type(exc).__name__}: {exc}")


def run_sweep(cfg: RunConfig, axis: str, values, workers: int | None = None) -> list[SweepPoint]:
    """Evaluate ``values`` along ``axis`` in a thread pool; results keep input order.

    Point ``i`` draws its randomness from ``(seed, i)`` only, so the output is
    independent of the worker count.  Failures are recorded per point.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep_axis: must be one of {SWEEP_AXES}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ConfigError("sweep_values: need at least 2 values")
    workers = cfg.workers if workers is None else workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_point, cfg, axis, i, v) for i, v in enumerate(values)]
        return [f.result() for f in futures]
