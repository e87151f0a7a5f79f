"""
Spotting a new splice on the line
=================================

A documented reflectogram of the fibre is compared against a fresh trace.
Old connectors and splices are in both; only the new loss step should alarm.
"""
from qkdlc.linecontrol import FiberEvent, detect_new_events, fit_baseline, synthesize_reflectogram

known = [FiberEvent(20.0, "spike", 1.0), FiberEvent(60.0, "step", 0.3)]
baseline = synthesize_reflectogram(100.0, events=known, noise_sigma_db=0.02, seed=1)

fit = fit_baseline(baseline, exclusion=[e.position_km for e in known])
print(f"documented line: slope {fit.slope_db_per_km:.4f} dB/km, residual {fit.residual_sigma_db:.4f} dB")

tapped = known + [FiberEvent(42.0, "step", 0.15)]
current = synthesize_reflectogram(100.0, events=tapped, noise_sigma_db=0.02, seed=2)

det = detect_new_events(current, baseline, threshold_db=0.05)
print(f"alarm: {det.alarm}")
for ev in det.events:
    print(f"  {ev.kind.value} at {ev.position_km:.1f} km, {ev.magnitude_db:.3f} dB")

quiet = synthesize_reflectogram(100.0, events=known, noise_sigma_db=0.02, seed=3)
print(f"unchanged line alarms: {detect_new_events(quiet, baseline, 0.05).alarm}")
