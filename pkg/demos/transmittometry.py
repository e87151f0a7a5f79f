"""
Catching a tap with bright test pulses
======================================

The received photon count on a test pulse falls short by the tapped
fraction. Shot noise decides how small a leak can be seen.
"""
import numpy as np

from qkdlc import ChannelParams
from qkdlc.linecontrol import TestPulsePlan, estimate_leakage, min_detectable_leakage, required_test_intensity

D = 100.0
print(f"test pulse needed to resolve a 1% tap at {D:.0f} km: {required_test_intensity(0.01, D):.0f} photons")
for n_A in (1e4, 1e6, 1e8):
    print(f"  n_A = {n_A:.0e}: resolvable leak ~ {min_detectable_leakage(n_A, D):.1e}")

channel = ChannelParams(distance_km=D, leak_fraction=0.01)
plan = TestPulsePlan.random(1e6, n_tests=100, seed=5)
est = estimate_leakage(plan, channel, seed=5)
print(f"true r_E = 0.01, estimate {est.r_hat:.4f} +- {est.std_err:.4f} from {est.n_used} test pulses")

# repeat over seeds: the spread should match the reported error
r_hats = [estimate_leakage(plan, channel, seed=s).r_hat for s in range(200)]
print(f"over 200 runs: mean {np.mean(r_hats):.5f}, spread {np.std(r_hats):.5f}")

dim = estimate_leakage(TestPulsePlan.random(1e2, 100), channel)
print(f"100-photon test pulses at {D:.0f} km usable: {dim.usable}")
