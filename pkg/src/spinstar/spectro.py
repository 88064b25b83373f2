"""Detection forward model and spectral processing for the centre-spin multiplet.

Spectra are scaled as ``dwell * FFT`` so that summing a spectrum over all
bins times the bin width returns the first windowed FID sample, and
``sum |S|^2 df == dwell * sum |x_windowed|^2`` (Parseval).

Each line is measured by integrating the complex spectrum over a +-J/4
window about its expected frequency.  Neighbouring lines leak into every
window, so by default the integrals are deconvolved with the exact linear
response of the processing chain to unit-amplitude lines.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dicke import RelaxationModel
from .system import SpinStarSystem, peak_frequency

DEFAULT_DWELL = 4e-3
DEFAULT_POINTS = 2048
DEFAULT_ZERO_FILL = 16384


class SpectroConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Corruption:
    """Receiver imperfections.  ``noise_sigma`` is per quadrature."""

    noise_sigma: float = 0.0
    dc_offset: complex = 0j
    quad_gain_imbalance: float = 0.0
    quad_phase_error: float = 0.0
    drift: complex = 0j

    def to_dict(self) -> dict:
        return {"noise_sigma": self.noise_sigma,
                "dc_offset": [self.dc_offset.real, self.dc_offset.imag],
                "quad_gain_imbalance": self.quad_gain_imbalance,
                "quad_phase_error": self.quad_phase_error,
                "drift": [self.drift.real, self.drift.imag]}


@dataclass(frozen=True)
class Fid:
    samples: np.ndarray
    dwell: float
    start_time: float = 0.0
    seed: int | None = None
    corruption: Corruption = field(default_factory=Corruption)

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValueError("a FID needs at least 2 samples")
        if not self.dwell > 0:
            raise ValueError("dwell must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dwell * np.arange(len(self.samples))


@dataclass(frozen=True)
class Spectrum:
    freq: np.ndarray
    data: np.ndarray
    dwell: float
    n_acquired: int
    zero_fill: int
    apodization: str = "hamming"
    phase_correction: float = 0.0

    @property
    def df(self) -> float:
        return float(self.freq[1] - self.freq[0])


@dataclass(frozen=True)
class PeakMeasurement:
    ell: int
    amplitude: complex
    frequency: float
    phase_sigma: float = math.nan
    calibrated: bool = True

    @property
    def phase(self) -> float:
        return cmath.phase(self.amplitude)


def line_decay_rate(model: RelaxationModel | None) -> float:
    """Decay rate (1/s) of a centre single-quantum coherence."""
    if model is None:
        return 0.0
    return float(model.coherence_rate(1, 0))


def line_frequencies(system: SpinStarSystem, delta_center: float) -> dict[int, float]:
    return {ell: peak_frequency(ell, delta_center, system.j_coupling)
            for ell in system.lopsidedness_values()}


def _apply_receiver(x: np.ndarray, c: Corruption, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    if c.noise_sigma:
        x = x + c.noise_sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    if c.quad_gain_imbalance or c.quad_phase_error:
        re, im = x.real, x.imag
        x = ((1 + c.quad_gain_imbalance / 2) * re
             + 1j * (1 - c.quad_gain_imbalance / 2) * (im * math.cos(c.quad_phase_error)
                                                        + re * math.sin(c.quad_phase_error)))
    if c.dc_offset:
        x = x + c.dc_offset
    if c.drift:
        x = x + c.drift * np.arange(n) / n
    return x


def synthesize_fid(peaks, system: SpinStarSystem, model: RelaxationModel | None,
                   dwell: float = DEFAULT_DWELL, n_samples: int = DEFAULT_POINTS,
                   corruption: Corruption | None = None, seed: int | None = 0,
                   delta_center: float = 0.0) -> Fid:
    """Sum of decaying complex exponentials at the multiplet positions, plus receiver effects.

    ``peaks`` is a sequence of (ell, complex amplitude).
    """
    corruption = corruption or Corruption()
    nyquist = 1.0 / (2 * dwell)
    freqs = line_frequencies(system, delta_center)
    span = max(abs(f) for f in freqs.values())
    if span >= nyquist:
        raise SpectroConfigError(
            f"dwell {dwell} s gives Nyquist {nyquist:.6g} Hz below multiplet extent {span:.6g} Hz")
    t = dwell * np.arange(n_samples)
    decay = np.exp(-line_decay_rate(model) * t)
    x = np.zeros(n_samples, dtype=complex)
    for ell, amp in peaks:
        if amp:
            x += amp * np.exp(2j * np.pi * freqs[ell] * t)
    x *= decay
    rng = np.random.default_rng(seed)
    x = _apply_receiver(x, corruption, rng)
    x.setflags(write=False)
    return Fid(x, dwell, 0.0, seed, corruption)


def combine_phase_cycle(fids, receiver_phases) -> Fid:
    """Sum acquisitions, each de-rotated by exp(i receiver_phase)."""
    total = sum(f.samples * cmath.exp(1j * ph) for f, ph in zip(fids, receiver_phases))
    return Fid(np.asarray(total), fids[0].dwell, fids[0].start_time, fids[0].seed, fids[0].corruption)


def _check_zero_fill(n: int, zero_fill_len: int) -> None:
    if zero_fill_len < n or zero_fill_len & (zero_fill_len - 1):
        raise SpectroConfigError(f"zero-fill length {zero_fill_len} must be a power of two >= {n}")


def process(fid: Fid, zero_fill_len: int = DEFAULT_ZERO_FILL) -> Spectrum:
    """Hamming apodisation, zero fill, FFT; axis in Hz centred on zero."""
    n = len(fid.samples)
    _check_zero_fill(n, zero_fill_len)
    xw = fid.samples * np.hamming(n)
    data = fid.dwell * np.fft.fftshift(np.fft.fft(xw, zero_fill_len))
    freq = np.fft.fftshift(np.fft.fftfreq(zero_fill_len, fid.dwell))
    return Spectrum(freq, data, fid.dwell, n, zero_fill_len)


def _windows(spectrum: Spectrum, system: SpinStarSystem, delta_center: float) -> dict[int, np.ndarray]:
    half = system.j_coupling / 4
    df = spectrum.df
    if system.j_coupling / 2 < 3 * df:
        raise SpectroConfigError(f"line spacing {system.j_coupling / 2} Hz is under 3 bins of {df} Hz")
    out = {}
    for ell, f in line_frequencies(system, delta_center).items():
        if f - half < spectrum.freq[0] or f + half > spectrum.freq[-1] + df:
            raise SpectroConfigError(f"window for ell={ell} at {f} Hz leaves the spectral range")
        out[ell] = np.flatnonzero((spectrum.freq >= f - half) & (spectrum.freq < f + half))
    return out


def window_functionals(spectrum: Spectrum, system: SpinStarSystem, delta_center: float) -> np.ndarray:
    """Rows R_ell with R_ell . fid_samples == window integral of line ell."""
    wins = _windows(spectrum, system, delta_center)
    n, df = spectrum.n_acquired, spectrum.df
    k = np.arange(n)
    h = np.hamming(n)
    big = spectrum.zero_fill
    theta = 2 * np.pi * k / big
    ratio = np.exp(-1j * theta)
    rows = []
    for ell in system.lopsidedness_values():
        idx = wins[ell]
        # bins are consecutive integers b0..b0+m-1 in units of df: geometric sum
        b0, m = int(round(spectrum.freq[idx[0]] / df)), len(idx)
        with np.errstate(invalid="ignore", divide="ignore"):
            kern = np.exp(-1j * theta * b0) * (1 - ratio ** m) / (1 - ratio)
        kern[0] = m
        rows.append(spectrum.dwell * df * h * kern)
    return np.array(rows)


def _unit_lines(spectrum: Spectrum, system: SpinStarSystem, delta_center: float,
                decay_rate: float) -> np.ndarray:
    t = spectrum.dwell * np.arange(spectrum.n_acquired)
    f = np.array(list(line_frequencies(system, delta_center).values()))
    return np.exp(2j * np.pi * np.outer(t, f) - decay_rate * t[:, None])


def estimate_noise_sigma(spectrum: Spectrum, system: SpinStarSystem, delta_center: float,
                         amplitudes=None, decay_rate: float = 0.0) -> float:
    """Per-quadrature time-domain noise from bins outside the multiplet.

    When fitted line ``amplitudes`` are given their modelled spectrum is
    subtracted first, so line tails do not inflate the estimate.
    """
    freqs = line_frequencies(system, delta_center).values()
    lo, hi = min(freqs) - system.j_coupling, max(freqs) + system.j_coupling
    mask = (spectrum.freq < lo) | (spectrum.freq > hi)
    if mask.sum() < 16:
        return 0.0
    n = spectrum.n_acquired
    h = np.hamming(n)
    data = spectrum.data
    if amplitudes is not None:
        model = _unit_lines(spectrum, system, delta_center, decay_rate) @ np.asarray(amplitudes)
        data = data - spectrum.dwell * np.fft.fftshift(np.fft.fft(h * model, spectrum.zero_fill))
    # each bin has variance dwell^2 * 2 sigma^2 * sum(h^2)
    power = float(np.mean(np.abs(data[mask]) ** 2))
    return math.sqrt(power / (2 * float(np.sum(h ** 2)))) / spectrum.dwell


def extract_peaks(spectrum: Spectrum, system: SpinStarSystem, delta_center: float,
                  model: RelaxationModel | None = None, deconvolve: bool = True,
                  noise_sigma: float | None = None) -> list[PeakMeasurement]:
    """Complex amplitude of every multiplet line, ascending in ell.

    With ``deconvolve`` the window integrals are solved against the chain's
    response to unit lines, returning the FID-level amplitudes; otherwise the
    raw window integrals are reported.  ``phase_sigma`` propagates the
    per-quadrature noise (estimated from the spectrum if not given).
    """
    rows = window_functionals(spectrum, system, delta_center)
    wins = _windows(spectrum, system, delta_center)
    ells = system.lopsidedness_values()
    y = np.array([spectrum.data[wins[ell]].sum() * spectrum.df for ell in ells])
    if deconvolve:
        resp = rows @ _unit_lines(spectrum, system, delta_center, line_decay_rate(model))
        inv = np.linalg.inv(resp)
        amps = inv @ y
        lin = inv @ rows
    else:
        amps, lin = y, rows
    if noise_sigma is None:
        noise_sigma = estimate_noise_sigma(spectrum, system, delta_center, amps,
                                           line_decay_rate(model) if deconvolve else 0.0)
    sigma = noise_sigma
    amp_sd = math.sqrt(2) * sigma * np.linalg.norm(lin, axis=1)
    floor = 1e-12 * max(float(np.max(np.abs(amps))), 1e-300)
    amp_sd = np.maximum(amp_sd, floor)
    freqs = line_frequencies(system, delta_center)
    out = []
    for ell, a, sd in zip(ells, amps, amp_sd):
        mag = abs(a)
        ps = sd / math.sqrt(2) / mag if mag > 0 else math.inf
        out.append(PeakMeasurement(ell, complex(a), freqs[ell], ps))
    return out


def direct_measurements(amplitudes, system: SpinStarSystem, delta_center: float = 0.0,
                        amplitude_noise: float | None = None) -> list[PeakMeasurement]:
    """Peak measurements straight from simulated amplitudes (infinite SNR).

    ``amplitude_noise`` sets the nominal complex-amplitude noise used for phase
    sigmas; by default 1e-9 of the largest line.
    """
    amplitudes = list(amplitudes)
    top = max(abs(a) for _, a in amplitudes) or 1.0
    noise = 1e-9 * top if amplitude_noise is None else amplitude_noise
    freqs = line_frequencies(system, delta_center)
    return [PeakMeasurement(ell, complex(a), freqs[ell],
                            noise / math.sqrt(2) / abs(a) if abs(a) > 0 else math.inf)
            for ell, a in amplitudes]


def calibrate_and_apply_phase(reference, targets, threshold: float = 1e-6):
    """Remove the per-line phase of a zero-delay reference from every target.

    Lines whose reference magnitude falls below ``threshold`` times the
    strongest reference line are flagged ``calibrated=False``.  Returns
    (phased reference, list of corrected targets).
    """
    top = max(abs(p.amplitude) for p in reference) or 1.0
    rot = {}
    for p in reference:
        ok = abs(p.amplitude) >= threshold * top and abs(p.amplitude) > 0
        rot[p.ell] = (cmath.exp(-1j * p.phase) if ok else 1.0, ok, p.phase_sigma)

    def fix(peaks):
        out = []
        for p in peaks:
            r, ok, rs = rot[p.ell]
            sig = math.hypot(p.phase_sigma, rs) if ok else p.phase_sigma
            out.append(replace(p, amplitude=p.amplitude * r, calibrated=ok and p.calibrated,
                               phase_sigma=sig))
        return out

    phased_ref = [replace(p, amplitude=p.amplitude * rot[p.ell][0], calibrated=rot[p.ell][1])
                  for p in reference]
    return phased_ref, [fix(t) for t in targets]


def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_spectrum_csv(path: str | Path, spectrum: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "re", "im"])
        for f, s in zip(spectrum.freq, spectrum.data):
            w.writerow([_g(f), _g(s.real), _g(s.imag)])


def write_peaks_csv(path: str | Path, peaks) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "amp_re", "amp_im", "phase_rad", "freq_hz"])
        for p in peaks:
            w.writerow([p.ell, _g(p.amplitude.real), _g(p.amplitude.imag), _g(p.phase), _g(p.frequency)])


def read_csv_columns(path: str | Path) -> dict[str, list[float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {name: [float(r[i]) for r in body] for i, name in enumerate(head)}
