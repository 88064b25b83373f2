import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinstar import estimator as est
from spinstar.experiment import RunConfig, run_estimate
from spinstar.spectro import PeakMeasurement
from spinstar.system import MHZ

ELLS = list(range(-12, 13, 2))


def meas(ell, phase, sigma=0.01):
    return PeakMeasurement(ell, complex(math.cos(phase), math.sin(phase)), 0.0, sigma)


def ideal_peaks(system, model, b0, sigma=0.01, noise=None):
    out = []
    for i, ell in enumerate(ELLS):
        c = est.phase_rate_coefficient(ell, system, model.mode)
        phase = 2 * math.pi * model.delay * c * b0 + model.offset_phase(ell) + model.j_correction(ell, system)
        if noise is not None:
            phase += noise[i]
        out.append(meas(ell, phase, sigma))
    return out


def test_coefficients(system):
    c = est.phase_rate_coefficient(-12, system, "original")
    assert c / MHZ == pytest.approx(-519.389, abs=5e-4)
    assert est.phase_rate_coefficient(12, system, "original") / MHZ == pytest.approx(502.459, abs=5e-4)
    assert abs(c) / abs(system.gamma_center * MHZ) == pytest.approx(61.36, abs=5e-3)
    assert abs(c) / (system.gamma_peripheral * MHZ) == pytest.approx(12.20, abs=5e-3)
    assert est.phase_rate_coefficient(0, system, "disentangled") == 0
    with pytest.raises(ValueError):
        est.phase_rate_coefficient(3, system, "original")


def test_amplification(system):
    assert est.amplification(0, system) == 1
    assert est.amplification(-12, system) == pytest.approx(61.36, abs=0.01)
    assert est.amplification(12, system) == pytest.approx(-59.36, abs=0.01)


def test_sensitivity_report(system):
    rows = {r["ell"]: r for r in est.sensitivity_report(system, "original")}
    assert rows[-12]["vs_center"] == pytest.approx(61.36, abs=5e-3)
    assert rows[-12]["vs_peripheral"] == pytest.approx(12.20, abs=5e-3)
    dis = {r["ell"]: r for r in est.sensitivity_report(system, "disentangled")}
    assert dis[12]["vs_peripheral"] == 12.0
    assert dis[0]["vs_peripheral"] == 0.0
    sc = est.scaling_comparison(12)
    assert sc["heisenberg"] == 12 and sc["standard_quantum_limit"] == pytest.approx(math.sqrt(12))


def test_phase_model_validation():
    with pytest.raises(ValueError):
        est.PhaseModel("original", 0.0)
    with pytest.raises(ValueError):
        est.PhaseModel("bogus", 1.0)
    assert est.PhaseModel.for_sequence("seq_b", 1.0).mode == "disentangled"


def test_zero_phase_candidate(system):
    model = est.PhaseModel("original", 1.0)
    for ell in ELLS:
        cands = est.peak_candidates(meas(ell, 0.0), model, system, (-1e-10, 1e-10))
        assert cands == [(0, 0.0)]


def test_zero_coefficient_line_has_no_candidates(system):
    model = est.PhaseModel("disentangled", 1.0)
    assert est.peak_candidates(meas(0, 0.3), model, system, (-1e-6, 1e-6)) == []
    assert not est.usable(meas(0, 0.3), model, system)


def test_branch_spacing(system):
    model = est.PhaseModel("original", 1.0)
    c = est.phase_rate_coefficient(-12, system, "original")
    phase = math.remainder(2 * math.pi * c * 1e-9, 2 * math.pi)
    cands = est.peak_candidates(meas(-12, phase), model, system, (-5e-9, 5e-9))
    spacing = np.abs(np.diff([b for _, b in cands]))
    assert spacing == pytest.approx(1.9253e-9, rel=1e-4)
    assert any(abs(b - 1e-9) < 1e-20 for _, b in cands)


def test_narrow_prior_gives_single_candidate(system):
    model = est.PhaseModel("original", 1.0)
    c = est.phase_rate_coefficient(-12, system, "original")
    b0 = 4.2e-9
    phase = math.remainder(2 * math.pi * c * b0, 2 * math.pi)
    cands = est.peak_candidates(meas(-12, phase), model, system, (3.8e-9, 4.6e-9))
    assert len(cands) == 1 and cands[0][1] == pytest.approx(b0, rel=1e-12)
    res = est.fuse([meas(-12, phase)], model, system, (3.8e-9, 4.6e-9))
    assert res.b0 == pytest.approx(b0, rel=1e-12) and res.flags == []


def test_fused_closed_loop():
    res = run_estimate(RunConfig(sequence="seq_b", delay=1.0, b0=5e-10))
    assert res.estimate.b0 == pytest.approx(5e-10, rel=1e-4)
    assert not res.estimate.degraded
    assert res.estimate.sigma > 0


@pytest.mark.parametrize("mode", est.MODES)
def test_aliasing_two_and_a_half_turns(system, mode):
    model = est.PhaseModel(mode, 1.0)
    c = est.phase_rate_coefficient(-12, system, mode)
    b0 = 2.5 / abs(c)
    peaks = ideal_peaks(system, model, b0)
    outer = est.peak_candidates(peaks[0], model, system, (-1e-8, 1e-8))
    assert len(outer) > 1
    res = est.fuse(peaks, model, system, (-1e-8, 1e-8))
    assert res.b0 == pytest.approx(b0, rel=1e-9)
    k12 = next(r for r in res.peaks if r.ell == -12).k
    assert k12 != 0


def _recovers_across(system, model, width):
    prior = (-width / 2, width / 2)
    for b0 in np.linspace(-0.49 * width, 0.49 * width, 41):
        res = est.fuse(ideal_peaks(system, model, b0), model, system, prior)
        assert res.b0 == pytest.approx(b0, abs=1e-20)


def test_aliasing_window_original_is_n_times_outer(system):
    model = est.PhaseModel("original", 1.0)
    outer = est.unambiguous_range(-12, model, system)
    _recovers_across(system, model, 12 * outer)


def test_aliasing_window_disentangled(system):
    # without the ell=0 line the coarsest rung is ell=+-2, six times the outer range
    model = est.PhaseModel("disentangled", 1.0)
    outer = est.unambiguous_range(12, model, system)
    assert est.unambiguous_range(2, model, system) / outer == pytest.approx(6.0)
    _recovers_across(system, model, 6 * outer)


def test_tie_prefers_smaller_k(system):
    model = est.PhaseModel("disentangled", 1.0)
    p = PeakMeasurement(2, complex(-1.0, 0.0), 0.0, 0.01)
    res = est.fuse([p], model, system, (-1e-8, 1e-8))
    assert "tie_ell_2" in res.flags
    assert res.peaks[0].k == 0
    c = est.phase_rate_coefficient(2, system, "disentangled")
    assert res.b0 == pytest.approx(0.5 / c)


def test_inconsistent_peaks_flag_degraded(system):
    model = est.PhaseModel("disentangled", 1.0)
    peaks = ideal_peaks(system, model, 1e-10)
    peaks[-1] = meas(12, peaks[-1].phase + 1.0)
    res = est.fuse(peaks, model, system, (-1e-8, 1e-8))
    assert res.degraded


def test_no_usable_peaks(system):
    model = est.PhaseModel("disentangled", 1.0)
    with pytest.raises(ValueError):
        est.fuse([meas(0, 0.1)], model, system, (-1e-8, 1e-8))
    bad = [PeakMeasurement(4, 1 + 0j, 0.0, math.nan), PeakMeasurement(6, 1 + 0j, 0.0, 0.1, calibrated=False)]
    with pytest.raises(ValueError):
        est.fuse(bad, model, system, (-1e-8, 1e-8))


@pytest.mark.parametrize("mode", est.MODES)
def test_monotone_precision(system, mode):
    model = est.PhaseModel(mode, 0.5)
    peaks = ideal_peaks(system, model, 3e-10, sigma=0.05)
    sigmas = []
    for m in range(0 if mode == "original" else 2, 13, 2):
        subset = [p for p in peaks if abs(p.ell) <= m]
        sigmas.append(est.fuse(subset, model, system, (-1e-8, 1e-8)).sigma)
    assert all(b < a for a, b in zip(sigmas, sigmas[1:]))


def test_consistency_over_1000_noisy_runs(system):
    model = est.PhaseModel("disentangled", 1.0)
    b0, sig = 2e-10, 0.05
    rng = np.random.default_rng(123)
    results = [est.fuse(ideal_peaks(system, model, b0, sig, rng.normal(0, sig, 13)), model, system,
                        (-5e-9, 5e-9)) for _ in range(1000)]
    vals = np.array([r.b0 for r in results])
    reported = results[0].sigma
    assert abs(vals.mean() - b0) <= 3 * reported / math.sqrt(1000)
    assert vals.std(ddof=1) == pytest.approx(reported, rel=0.2)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2e-9, 2e-9), st.floats(0.05, 2.0))
def test_noiseless_inversion_property(b0, delay):
    from spinstar.system import tms
    system = tms()
    model = est.PhaseModel("original", delay, delta_peripheral=1.5, delta_center=-2.0)
    wide = est.unambiguous_range(0, model, system)
    res = est.fuse(ideal_peaks(system, model, b0), model, system, (-wide / 2, wide / 2))
    assert res.b0 == pytest.approx(b0, abs=1e-21)


def test_delta_si_invariance_in_disentangled_mode():
    base = RunConfig(sequence="seq_b", delay=0.5, b0=3e-10, readout="direct")
    ref = run_estimate(base).estimate.b0
    for dsi in (-1000.0, 17.0, 1000.0):
        got = run_estimate(base.updated(delta_si=dsi)).estimate.b0
        assert got == pytest.approx(ref, rel=1e-12)


def test_original_mode_ignored_offset_pattern():
    t, b0, dsi = 1.0, 2e-10, 3.5
    res = run_estimate(RunConfig(sequence="original", delay=t, b0=b0, delta_si=dsi,
                                 estimator_delta_si=0.0, readout="direct"))
    from spinstar.system import tms
    system = tms()
    spread = []
    for ell, b in res.per_peak:
        c = est.phase_rate_coefficient(ell, system, "original")
        # (b - b0) t c must equal the ignored offset turns, up to whole turns
        turns = (b - b0) * t * c - dsi * t
        assert abs(turns - round(turns)) < 1e-9
        spread.append(b)
    assert max(spread) - min(spread) > 1e-10


@pytest.mark.parametrize("n", [5, 11])
def test_seq_a_closed_loop_with_pinned_centre(n):
    cfg = RunConfig(system={"n_peripheral": n}, sequence="seq_a", delay=0.5, b0=4e-10,
                    delta_si=20.0, readout="direct")
    res = run_estimate(cfg)
    assert res.estimate.b0 == pytest.approx(4e-10, rel=1e-9) and res.estimate.flags == []


def test_seq_a_j_correction_values(system):
    model = est.PhaseModel.for_sequence("seq_a", 1.0)
    odd = system.with_updates(n_peripheral=11)
    assert est.seq_a_pinned_center(1) == 0.5 and est.seq_a_pinned_center(3) == -0.5
    assert model.j_correction(3, odd) == pytest.approx(2 * math.pi * odd.j_coupling * 3 * -0.5)
    assert est.PhaseModel.for_sequence("seq_b", 1.0).j_correction(12, system) == 0
