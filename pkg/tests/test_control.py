import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from hddservo.control import (
    MICRO_ACTUATOR_GAINS,
    VCM_GAINS,
    PidController,
    PidGains,
    Saturation,
    pid_step,
    saturate,
)
from hddservo.errors import NonFiniteError


def pid_tf(g: PidGains):
    """P + I/s + D N s / (s + N) over the common denominator s (s + N)."""
    num = np.polyadd(np.polyadd(g.P * np.array([1.0, g.N, 0.0]), g.I * np.array([1.0, g.N])),
                     g.D * g.N * np.array([1.0, 0.0, 0.0]))
    return num, np.array([1.0, g.N, 0.0])


def run(c, errors):
    return np.array([c.step(float(e)) for e in errors])


def test_table1_gains():
    assert (VCM_GAINS.P, VCM_GAINS.I, VCM_GAINS.D, VCM_GAINS.N) == (0.0328608, 0.8955647, 9.86285e-05, 3316.4)
    assert (MICRO_ACTUATOR_GAINS.P, MICRO_ACTUATOR_GAINS.I, MICRO_ACTUATOR_GAINS.D, MICRO_ACTUATOR_GAINS.N) == (
        0.0650849, 4.7032010, 1.99346e-04, 1402745.0)


def test_pure_proportional():
    c = PidController(PidGains(P=1.0, N=50.0), Ts=0.01)
    assert pid_step(c, 0.5) == 0.5


@pytest.mark.parametrize("method, offset", [("bilinear", 0.5), ("backward-euler", 0.0), ("forward-euler", 1.0)])
def test_integral_of_constant(method, offset):
    c = PidController(PidGains(P=0.0, I=2.0), Ts=0.1, method=method)
    out = run(c, np.ones(20))
    k = np.arange(1, 21)
    # rectangle/trapezoid rules lag the exact ramp by a fixed fraction of a step
    np.testing.assert_allclose(out, 2.0 * 0.1 * (k - offset), rtol=1e-12)


@pytest.mark.parametrize("gains", [VCM_GAINS, PidGains(P=0.3, I=4.0, D=0.02, N=80.0)])
def test_bilinear_matches_scipy_oracle(gains):
    Ts = 2e-4
    b, a = signal.bilinear(*pid_tf(gains), fs=1.0 / Ts)
    e = np.random.default_rng(3).normal(size=300)
    expected = signal.lfilter(b, a, e)
    got = run(PidController(gains, Ts), e)
    np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)


def test_backward_euler_matches_substitution():
    g = MICRO_ACTUATOR_GAINS
    Ts = 2e-4
    # s -> (1 - q)/Ts with q = z^-1, applied to the PID transfer function
    num, den = pid_tf(g)

    def subst(p):
        out = np.zeros(3)
        for i, coef in enumerate(p[::-1]):  # ascending powers of s
            term = coef * np.polynomial.polynomial.polypow([1.0, -1.0], i) / Ts ** i
            out[: len(term)] += term
        return out

    bq, aq = subst(num), subst(den)
    e = np.random.default_rng(4).normal(size=200)
    expected = signal.lfilter(bq, aq, e)
    got = run(PidController(g, Ts, "backward-euler"), e)
    np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-9)


def test_reset_and_determinism():
    c = PidController(VCM_GAINS, 2e-4)
    e = [0.3, -0.1, 0.7]
    first = run(c, e)
    c.reset()
    assert np.array_equal(run(c, e), first)
    c.reset()
    c.reset()
    assert pid_step(c, 0.0) == 0.0


def test_non_finite_error_rejected():
    c = PidController(VCM_GAINS, 2e-4)
    with pytest.raises(NonFiniteError):
        c.step(float("nan"))


def test_gain_validation():
    with pytest.raises(ValueError):
        PidGains(P=1.0, N=0.0)
    with pytest.raises(ValueError):
        PidGains(P=float("inf"))
    with pytest.raises(ValueError):
        PidController(VCM_GAINS, 0.0)


def test_saturation_examples():
    s = Saturation(-1.0, 1.0)
    assert saturate(s, 2.0) == 1.0
    assert saturate(s, -3.0) == -1.0
    assert saturate(s, 0.25) == 0.25
    with pytest.raises(ValueError):
        Saturation(1.0, -1.0)


@given(st.floats(-1e6, 1e6), st.floats(-10, 0), st.floats(0, 10))
def test_saturation_idempotent(u, lo, hi):
    s = Saturation(lo, hi)
    assert saturate(s, saturate(s, u)) == saturate(s, u)
    assert lo <= saturate(s, u) <= hi


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["bilinear", "backward-euler", "forward-euler"]))
def test_N_irrelevant_without_derivative(seed, method):
    e = np.random.default_rng(seed).normal(size=100)
    a = run(PidController(PidGains(P=0.4, I=3.0, D=0.0, N=1.0), 1e-3, method), e)
    b = run(PidController(PidGains(P=0.4, I=3.0, D=0.0, N=1e6), 1e-3, method), e)
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 60))
def test_causality(seed, k):
    rng = np.random.default_rng(seed)
    e1 = rng.normal(size=80)
    e2 = e1.copy()
    e2[k:] = rng.normal(size=80 - k)
    a = run(PidController(VCM_GAINS, 2e-4), e1)
    b = run(PidController(VCM_GAINS, 2e-4), e2)
    assert np.array_equal(a[:k], b[:k])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-100, 100).filter(lambda x: abs(x) > 1e-3))
def test_linear_pre_saturation(seed, alpha):
    e = np.random.default_rng(seed).normal(size=100)
    base = run(PidController(MICRO_ACTUATOR_GAINS, 2e-4), e)
    scaled = run(PidController(MICRO_ACTUATOR_GAINS, 2e-4), alpha * e)
    np.testing.assert_allclose(scaled, alpha * base, rtol=1e-9, atol=1e-12 * abs(alpha))
