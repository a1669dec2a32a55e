import math

import numpy as np
import pytest
import scipy.integrate

from bff.errors import DomainError, NumericalError
from bff.quadrature import integrate, log_integrate


class TestIntegrate:
    def test_polynomial_exact(self):
        val, err = integrate(lambda x: 3 * x**2, 0.0, 2.0)
        assert val == pytest.approx(8.0, abs=1e-12)

    def test_against_scipy_on_smooth_functions(self):
        cases = [
            (lambda x: np.exp(-(x**2)), -4.0, 4.0),
            (lambda x: np.sin(7 * x) ** 2 / (1 + x**2), 0.0, 10.0),
            (lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0),
        ]
        for f, a, b in cases:
            want, _ = scipy.integrate.quad(lambda t: float(f(np.array([t]))[0]), a, b,
                                           limit=300)
            val, err = integrate(f, a, b)
            assert val == pytest.approx(want, rel=1e-8, abs=1e-10)

    def test_narrow_spike_within_resolution(self):
        # mass-1 gaussian just wide enough for the initial cells to see
        s = 0.01
        f = lambda x: np.exp(-0.5 * ((x - 0.37) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        val, err = integrate(f, 0.0, 1.0)
        assert val == pytest.approx(1.0, rel=1e-8)

    def test_breakpoints_resolve_sub_resolution_spike(self):
        # without the hint this spike is invisible to the initial nodes
        s = 1e-7
        f = lambda x: np.exp(-0.5 * ((x - 0.37) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        val, _ = integrate(f, 0.0, 1.0, breakpoints=(0.37 - 8 * s, 0.37 + 8 * s))
        assert val == pytest.approx(1.0, rel=1e-6)

    def test_error_estimate_is_honest(self):
        f = lambda x: np.cos(3 * x) * np.exp(x / 3.0)
        want, _ = scipy.integrate.quad(lambda t: math.cos(3 * t) * math.exp(t / 3.0),
                                       -1.0, 5.0)
        val, err = integrate(f, -1.0, 5.0)
        assert abs(val - want) <= max(err * 10, 1e-12)

    def test_rejects_bad_interval(self):
        with pytest.raises(DomainError):
            integrate(lambda x: x, 1.0, 1.0)
        with pytest.raises(DomainError):
            integrate(lambda x: x, 0.0, math.inf)

    def test_budget_exhaustion_raises(self):
        f = lambda x: np.sin(1.0 / np.maximum(x, 1e-300))  # pathological near 0
        with pytest.raises(NumericalError):
            integrate(f, 0.0, 1.0, tol_abs=1e-300, tol_rel=1e-16, max_intervals=8)


class TestLogIntegrate:
    def test_matches_plain_integral_moderate(self):
        log_f = lambda x: -0.5 * (x - 1.0) ** 2
        want = math.sqrt(2 * math.pi)  # integral of exp over wide interval
        got = log_integrate(log_f, -12.0, 14.0)
        assert got == pytest.approx(math.log(want), abs=1e-9)

    def test_extreme_offset_is_stable(self):
        # integrand peaks at exp(1e5): plain exponentiation would overflow
        log_f = lambda x: 1e5 - 0.5 * ((x - 0.3) / 0.01) ** 2
        got = log_integrate(log_f, 0.0, 1.0)
        want = 1e5 + math.log(0.01 * math.sqrt(2 * math.pi))
        assert got == pytest.approx(want, abs=1e-8)

    def test_deep_underflow_is_stable(self):
        log_f = lambda x: -1e5 - 0.5 * ((x + 2.0) / 0.5) ** 2
        got = log_integrate(log_f, -4.0, 0.0)
        # interval is +-4 sd, so the truncated mass matters at 1e-5 scale
        want = -1e5 + math.log(
            0.5 * math.sqrt(2 * math.pi) * math.erf(4.0 / math.sqrt(2.0))
        )
        assert got == pytest.approx(want, abs=1e-8)

    def test_spike_missed_by_scan_is_recovered(self):
        # peak width 1e-6 cannot be seen by the coarse scan; the golden
        # refinement around the scan maximum must still locate it
        s = 1e-6
        log_f = lambda x: -0.5 * ((x - 0.456789) / s) ** 2
        got = log_integrate(log_f, 0.0, 1.0, scan_points=33)
        want = math.log(s * math.sqrt(2 * math.pi))
        assert got == pytest.approx(want, abs=1e-6)

    def test_all_minus_inf_gives_minus_inf(self):
        log_f = lambda x: np.full_like(np.asarray(x, dtype=float), -np.inf)
        assert log_integrate(log_f, 0.0, 1.0) == -math.inf

    def test_nan_in_scan_raises(self):
        log_f = lambda x: np.where(np.asarray(x) > 0.5, np.nan, 0.0)
        with pytest.raises(NumericalError):
            log_integrate(log_f, 0.0, 1.0)

    def test_matches_scipy_logsumexp_style_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(15):
            mu = rng.uniform(-3.0, 3.0)
            s = rng.uniform(0.05, 1.5)
            shift = rng.uniform(-600.0, 600.0)
            log_f = lambda x: shift - 0.5 * ((x - mu) / s) ** 2
            got = log_integrate(log_f, mu - 30 * s, mu + 30 * s)
            want = shift + math.log(s * math.sqrt(2 * math.pi))
            assert got == pytest.approx(want, abs=1e-8)
