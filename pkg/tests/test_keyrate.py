import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mpmath import mp
from qkdlc.errors import DomainError
from qkdlc.keyrate import (
    DecoyObservables,
    Protocol,
    ProtocolSpec,
    bb84_decoy_upper,
    bb84_lc_conclusive,
    bb84_lc_rate,
    binary_entropy,
    cow_conclusive,
    cow_lc_conclusive,
    cow_lc_rate,
    cow_rate,
    decoy_key_length,
    dps_lc_rate,
    dps_rate,
    evaluate,
    eve_overlap,
    holevo_two_pure,
    privacy_factor,
    rate_arrays,
)

# Frozen from the 60-digit reference transcription in oracles.py.
FROZEN = [
    ("bb84-decoy-upper", 1.0, 0.0, 1.0, 0.18393972058572116, 0.31606027941427884, 0.41802329313067358),
    ("bb84-decoy-upper", 0.01, 0.0, 1.0, 0.0018393972058572116, 0.0049750831254159733, 0.63027809596580013),
    ("bb84-lc", 0.01, 0.01, 8.0, 0.035145284815254096, 0.038072432530117857, 0.076883653613364219),
    ("cow", 0.01, 0.0, 0.45, 0.0014388952418930037, 0.0044898901704294285, 0.67952551459507465),
    ("cow-lc", 0.01, 0.01, 37.0, 0.1161451079495662, 0.30670521842610164, 0.62131355786647462),
    ("cow-lc", 0.01, 0.0, 37.0, 0.30926566936264535, 0.30926566936264535, 0.0),
    ("dps", 0.01, 0.0, 0.2, 0.00030672140834534838, 0.0019980013326669334, 0.84648588400292183),
    ("dps-lc", 0.01, 0.01, 10.0, 0.033389363945219417, 0.094257291976451506, 0.64576359828413964),
    ("dps-lc", 0.01, 0.0, 37.0, 0.30926566936264535, 0.30926566936264535, 0.0),
]


@pytest.mark.parametrize("name, T, r, x, rate, conclusive, eve", FROZEN)
def test_frozen_points(name, T, r, x, rate, conclusive, eve):
    pt = evaluate(name, T, r, x)
    assert pt.rate == pytest.approx(rate, rel=1e-13)
    assert pt.conclusive_prob == pytest.approx(conclusive, rel=1e-13)
    assert pt.eve_info == pytest.approx(eve, rel=1e-13, abs=1e-300)


def test_named_functions_agree_with_evaluate():
    T, r, x = 0.03, 0.05, 3.0
    assert bb84_lc_rate(T, r, x) == evaluate("bb84-lc", T, r, x)
    assert cow_rate(T, x) == evaluate("cow", T, 0.7, x)  # r_E ignored by baselines
    assert cow_lc_rate(T, r, x) == evaluate("cow-lc", T, r, x)
    assert dps_rate(T, x) == evaluate("dps", T, 0.0, x)
    assert dps_lc_rate(T, r, x) == evaluate("dps-lc", T, r, x)
    assert bb84_decoy_upper(T, x) == evaluate("bb84-decoy-upper", T, 0.0, x)
    assert bb84_lc_conclusive(T, r, x) == evaluate("bb84-lc", T, r, x).conclusive_prob
    assert cow_conclusive(T, x) == evaluate("cow", T, 0.0, x).conclusive_prob
    assert cow_lc_conclusive(T, r, x) == evaluate("cow-lc", T, r, x).conclusive_prob


def test_entropy_primitives():
    assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, rel=1e-15)
    assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0
    assert holevo_two_pure(0.6065) == pytest.approx(float(oracles.holevo(0.6065)), rel=1e-14)
    assert holevo_two_pure(math.exp(-0.5)) == pytest.approx(0.71534916671072173, rel=1e-14)
    assert holevo_two_pure(1.0) == 0.0
    assert holevo_two_pure(0.0) == 1.0


# below 1e-150 the result o**2 / (2 ln 2) is subnormal and precision runs out
@given(o=st.one_of(st.just(0.0), st.floats(1e-150, 1.0)))
def test_privacy_factor_matches_reference(o):
    with mp.workdps(400):  # 1 - h2 ~ o**2 needs digits well past o**2
        ref = 1 - oracles.holevo(o)
    got = float(privacy_factor(o))
    assert float(oracles.rel_err(got, ref)) <= 1e-13


def test_privacy_factor_tiny_overlap_keeps_digits():
    # the naive 1 - h2 form returns exactly 0 here
    o = 1e-9
    assert float(privacy_factor(o)) == pytest.approx(o * o / (2 * math.log(2)), rel=1e-12)


def test_decoy_key_length():
    obs = DecoyObservables(gain_signal=0.1, qber=0.03, gain_single=0.08, error_single=0.02)
    assert decoy_key_length(obs, 1e6) == pytest.approx(24622.785406748367, rel=1e-13)
    noisy = DecoyObservables(gain_signal=0.1, qber=0.2, gain_single=0.01, error_single=0.3)
    assert decoy_key_length(noisy, 1e6) == 0.0
    with pytest.raises(DomainError):
        DecoyObservables(gain_signal=0.01, qber=0.01, gain_single=0.02, error_single=0.01)


def test_eve_overlap_matches_vectorised_holevo_term():
    for name in ("cow", "cow-lc", "dps", "dps-lc"):
        o = eve_overlap(name, 0.05, 0.02, 2.5)
        assert evaluate(name, 0.05, 0.02, 2.5).eve_info == pytest.approx(holevo_two_pure(o), rel=1e-12)
    with pytest.raises(DomainError):
        eve_overlap("bb84-lc", 0.1, 0.1, 1.0)


def test_zero_intensity_gives_zero_everything():
    for p in Protocol:
        pt = evaluate(p, 0.1, 0.1, 0.0)
        assert pt.rate == 0.0 and pt.conclusive_prob == 0.0


def test_full_leak_kills_line_controlled_rate():
    for p in (Protocol.BB84_LC, Protocol.COW_LC, Protocol.DPS_LC):
        assert evaluate(p, 0.5, 1.0, 3.0).rate == 0.0


def test_lc_at_zero_leak_and_unit_transmittance_equals_baseline():
    for lc, base in (("cow-lc", "cow"), ("dps-lc", "dps")):
        for x in (0.1, 1.0, 10.0):
            assert evaluate(lc, 1.0, 0.0, x).rate == pytest.approx(evaluate(base, 1.0, 0.0, x).rate, rel=1e-15)


@pytest.mark.parametrize("bad", [(0.0, 0.1, 1.0), (1.1, 0.1, 1.0), (0.5, -0.1, 1.0), (0.5, 0.1, -1.0),
                                 (0.5, 0.1, math.inf), (math.nan, 0.1, 1.0)])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        evaluate("cow-lc", *bad)


def test_protocol_parsing():
    assert Protocol.parse("COW_LC") is Protocol.COW_LC
    assert ProtocolSpec("dps", 0.2).protocol is Protocol.DPS
    with pytest.raises(DomainError):
        Protocol.parse("e91")
    with pytest.raises(DomainError):
        ProtocolSpec("cow", -1.0)


def test_rate_arrays_broadcast():
    T = np.array([[0.1], [0.01]])
    x = np.logspace(-2, 2, 5)
    rate, conclusive, eve = rate_arrays("dps-lc", T, 0.05, x)
    assert rate.shape == conclusive.shape == eve.shape == (2, 5)
    for i in range(2):
        for j in range(5):
            assert rate[i, j] == evaluate("dps-lc", T[i, 0], 0.05, x[j]).rate


protocols = st.sampled_from(list(Protocol))
transmittances = st.floats(1e-4, 1.0)
leaks = st.floats(0.0, 1.0)
intensities = st.floats(0.0, 50.0)


@settings(max_examples=300)
@given(p=protocols, T=transmittances, r=leaks, x=intensities)
def test_outputs_are_probabilities(p, T, r, x):
    pt = evaluate(p, T, r, x)
    assert 0.0 <= pt.conclusive_prob <= 1.0
    assert 0.0 <= pt.eve_info <= 1.0
    assert 0.0 <= pt.rate <= pt.conclusive_prob


@settings(max_examples=200)
@given(p=protocols, T1=transmittances, T2=transmittances, r=leaks, x=intensities)
def test_rate_non_increasing_in_loss(p, T1, T2, r, x):
    lo, hi = sorted((T1, T2))
    assert evaluate(p, lo, r, x).rate <= evaluate(p, hi, r, x).rate * (1 + 1e-12) + 1e-300


@settings(max_examples=200)
@given(p=st.sampled_from([Protocol.BB84_LC, Protocol.COW_LC, Protocol.DPS_LC]),
       T=transmittances, r1=leaks, r2=leaks, x=intensities)
def test_rate_non_increasing_in_leak(p, T, r1, r2, x):
    lo, hi = sorted((r1, r2))
    assert evaluate(p, T, hi, x).rate <= evaluate(p, T, lo, x).rate * (1 + 1e-12) + 1e-300
