"""
BB84 with a watched line
========================

How much key survives at 100 km when the only way in for Eve is a small
local tap, compared with the decoy-state bound under a photon-number
splitting attack.
"""
from qkdlc import evaluate, optimal_intensity, rate_ratio
from qkdlc.channel import transmittance_from

D = 100.0
T = transmittance_from(D)
print(f"D = {D:.0f} km  ->  T = {T:g}")

# the decoy bound peaks at one photon per pulse, whatever the distance
decoy = optimal_intensity("bb84-decoy-upper", T)
print(f"decoy-state bound: x* = {decoy.intensity:.6f}, rate = {decoy.rate:.4e}")

# with the line under control the optimum moves to much brighter pulses
for r_E in (0.1, 0.01):
    lc = optimal_intensity("bb84-lc", T, r_E)
    pt = evaluate("bb84-lc", T, r_E, lc.intensity)
    print(f"r_E = {r_E:<5} x* = {lc.intensity:7.3f}  rate = {lc.rate:.4e}  "
          f"p(click) = {pt.conclusive_prob:.4f}  Eve's bit share = {pt.eve_info:.4f}")

# ratio with both intensities optimised, then with both pinned to 1 photon
best = rate_ratio(D, 0.01, pair="bb84")
pinned = rate_ratio(D, 0.01, pair="bb84", fixed_intensity=1.0)
print(f"gain at r_E = 0.01: {best.ratio:.1f}x optimised, {pinned.ratio:.2f}x at x = 1")
