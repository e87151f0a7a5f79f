"""
Pulse-level simulation against the closed forms
===============================================

A million Poisson pulses per scenario, thinned between Eve, Bob and the
fibre, compared with the analytic click and leak probabilities.
"""
import time

from qkdlc import ChannelParams, ProtocolSpec
from qkdlc.montecarlo import Attack, SimConfig, validate_against_analytic

scenarios = [
    ("bb84-lc", 8.0, 0.01, Attack.LEAK_TAP),
    ("cow-lc", 37.0, 0.01, Attack.LEAK_TAP),
    ("cow", 0.45, 0.0, Attack.ALL_LOSSES_BS),
    ("bb84-decoy-upper", 1.0, 0.0, Attack.PNS),
]

for proto, x, r_E, attack in scenarios:
    cfg = SimConfig(ProtocolSpec(proto, x), ChannelParams(distance_km=100.0, leak_fraction=r_E),
                    attack, n_pulses=1_000_000, seed=1)
    t0 = time.perf_counter()
    report = validate_against_analytic(cfg, workers=4)
    print(f"{proto} / {attack.value}  ({time.perf_counter() - t0:.2f} s)")
    for c in report.checks:
        print(f"  {c.quantity:20s} analytic {c.analytic:.6f}  simulated {c.empirical:.6f}  z = {c.z:+.2f}")
