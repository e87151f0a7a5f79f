import json

import numpy as np
import pytest

from qkdlc.errors import DomainError, GeometryError, InsufficientDataError
from qkdlc.linecontrol import (
    EventKind,
    FiberEvent,
    Reflectogram,
    detect_new_events,
    fit_baseline,
    inject_events,
    load_reflectogram,
    save_reflectogram,
    synthesize_reflectogram,
)

SIGMA = 0.02


def test_clean_trace_is_a_straight_line():
    trace = synthesize_reflectogram(10.0, spacing_km=0.1)
    assert len(trace) == 101
    assert trace.samples[0] - trace.samples[-1] == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(np.diff(trace.samples), -0.02, atol=1e-12)


def test_noise_has_requested_sigma():
    clean = synthesize_reflectogram(100.0)
    noisy = synthesize_reflectogram(100.0, noise_sigma_db=SIGMA, seed=4)
    assert np.std(noisy.samples - clean.samples) == pytest.approx(SIGMA, rel=0.1)


def test_events_shape_the_trace():
    step = FiberEvent(4.0, "step", 0.5)
    spike = FiberEvent(7.0, "spike", 1.0)
    clean = synthesize_reflectogram(10.0)
    trace = synthesize_reflectogram(10.0, events=[step, spike])
    diff = trace.samples - clean.samples
    assert np.all(diff[:40] == 0.0)
    assert diff[40] == pytest.approx(-0.5)
    assert diff[70] == pytest.approx(-0.5 + 1.0)
    assert diff[71] == pytest.approx(-0.5)


def test_events_superpose_linearly():
    a, b = FiberEvent(20.0, "step", 0.3), FiberEvent(55.0, "spike", 0.7)
    base = synthesize_reflectogram(80.0, noise_sigma_db=SIGMA, seed=1)
    direct = synthesize_reflectogram(80.0, events=[a, b], noise_sigma_db=SIGMA, seed=1)
    staged = inject_events(inject_events(base, [a]), [b])
    assert np.allclose(direct.samples, staged.samples, atol=1e-12)


def test_event_validation():
    with pytest.raises(DomainError):
        FiberEvent(1.0, "step", 0.0)
    with pytest.raises(ValueError):
        FiberEvent(1.0, "bend", 0.1)
    with pytest.raises(DomainError):
        synthesize_reflectogram(10.0, events=[FiberEvent(11.0, "step", 0.1)])
    with pytest.raises(DomainError):
        Reflectogram(0.0, [1.0])


def test_slope_exact_on_clean_trace():
    fit = fit_baseline(synthesize_reflectogram(50.0))
    assert fit.slope_db_per_km == pytest.approx(-0.2, abs=1e-9)
    assert fit.intercept_db == pytest.approx(0.0, abs=1e-9)


def test_slope_ignores_known_events():
    events = [FiberEvent(30.0, "step", 1.0), FiberEvent(60.0, "spike", 3.0)]
    trace = synthesize_reflectogram(100.0, events=events, noise_sigma_db=SIGMA, seed=5)
    fit = fit_baseline(trace, exclusion=[30.0, 60.0])
    assert fit.slope_db_per_km == pytest.approx(-0.2, abs=0.002)
    assert fit.residual_sigma_db == pytest.approx(SIGMA, rel=0.15)


def test_fit_needs_samples():
    with pytest.raises(InsufficientDataError):
        fit_baseline(synthesize_reflectogram(0.5), exclusion=[0.2])


def test_detects_step_at_42_km():
    baseline = synthesize_reflectogram(100.0, noise_sigma_db=SIGMA, seed=1)
    current = synthesize_reflectogram(100.0, events=[FiberEvent(42.0, "step", 0.5)], noise_sigma_db=SIGMA, seed=2)
    det = detect_new_events(current, baseline, 0.1)
    assert det.alarm
    assert len(det.events) == 1
    ev = det.events[0]
    assert ev.kind is EventKind.LOSS_STEP
    assert abs(ev.position_km - 42.0) <= 0.1 + 1e-9
    assert ev.magnitude_db == pytest.approx(0.5, abs=0.05)


def test_step_below_threshold_stays_quiet():
    baseline = synthesize_reflectogram(100.0, noise_sigma_db=SIGMA, seed=1)
    current = synthesize_reflectogram(100.0, events=[FiberEvent(42.0, "step", 0.05)], noise_sigma_db=SIGMA, seed=2)
    assert not detect_new_events(current, baseline, 0.1).alarm


def test_unchanged_line_stays_quiet():
    for seed in range(20):
        baseline = synthesize_reflectogram(100.0, noise_sigma_db=SIGMA, seed=100 + seed)
        current = synthesize_reflectogram(100.0, noise_sigma_db=SIGMA, seed=200 + seed)
        assert not detect_new_events(current, baseline, 0.05).alarm


def test_old_events_are_not_reported_again():
    old = [FiberEvent(20.0, "spike", 2.0), FiberEvent(60.0, "step", 0.4)]
    baseline = synthesize_reflectogram(100.0, events=old, noise_sigma_db=SIGMA, seed=1)
    current = synthesize_reflectogram(100.0, events=old + [FiberEvent(75.0, "spike", 0.5)],
                                      noise_sigma_db=SIGMA, seed=2)
    det = detect_new_events(current, baseline, 0.05)
    assert [(e.kind, round(e.position_km, 6)) for e in det.events] == [(EventKind.REFLECTIVE_SPIKE, 75.0)]


def test_geometry_mismatch():
    a = synthesize_reflectogram(10.0)
    b = synthesize_reflectogram(10.0, spacing_km=0.05)
    with pytest.raises(GeometryError):
        detect_new_events(a, b, 0.1)
    with pytest.raises(DomainError):
        detect_new_events(a, a, 0.0)


def test_file_round_trip(tmp_path):
    trace = synthesize_reflectogram(12.3, noise_sigma_db=SIGMA, seed=8,
                                    events=[FiberEvent(3.0, "step", 0.2)])
    path = tmp_path / "trace.csv"
    side = save_reflectogram(trace, path)
    assert side == tmp_path / "trace.json"
    assert json.loads(side.read_text())["spacing_km"] == 0.1
    assert path.read_text().splitlines()[0] == "position_km,power_db"
    back = load_reflectogram(path)
    assert np.array_equal(back.samples, trace.samples)
    assert back.sample_spacing_km == trace.sample_spacing_km
    assert back.noise_sigma_db == trace.noise_sigma_db


def test_load_rejects_inconsistent_sidecar(tmp_path):
    path = tmp_path / "t.csv"
    save_reflectogram(synthesize_reflectogram(5.0), path)
    meta = json.loads((tmp_path / "t.json").read_text())
    meta["length_km"] = 6.0
    (tmp_path / "t.json").write_text(json.dumps(meta))
    with pytest.raises(DomainError):
        load_reflectogram(path)
    path.write_text("x,y\n0,0\n")
    with pytest.raises(DomainError):
        load_reflectogram(path)
