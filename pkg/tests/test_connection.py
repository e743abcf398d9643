import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from psslab.connection import (
    ConnectionDataError,
    ConnectionParams,
    ConnectionSample,
    DomainError,
    EllipticityError,
    _fd4,
    closed_form_abc,
    closed_form_samples,
    codazzi_gauss_residuals,
    integrate_connection,
    phi2_rhs,
    printed_closed_form_c,
    validity_domain,
)

MU0 = ConnectionParams(mu=0.0, beta=0.5, gamma=2.0)
MU1 = ConnectionParams(mu=1.0, beta=0.0, gamma=2.0)


class TestValidityDomain:
    def test_generic_interval(self):
        lo, hi = validity_domain(MU0)
        assert lo == pytest.approx(0.5 * math.log(4 - 2 * math.sqrt(3)))
        assert hi == pytest.approx(0.5 * math.log(4 + 2 * math.sqrt(3)))
        assert (round(lo, 4), round(hi, 4)) == (-0.3119, 1.0051)

    def test_empty(self):
        assert validity_domain(ConnectionParams(beta=1.0, gamma=1.5)) is None
        assert validity_domain(ConnectionParams(beta=0.0, gamma=-1.0)) is None

    def test_half_line(self):
        assert validity_domain(ConnectionParams(beta=0.0, gamma=1.0)) == (0.0, math.inf)


class TestClosedForm:
    def test_reference_point(self):
        s = closed_form_abc(0.0, MU0)
        assert_allclose((s.a, s.b, s.c), (math.sqrt(3) / 2, 0.5, -math.sqrt(3) / 2), rtol=1e-14)
        assert s.a * s.c == pytest.approx(-0.75)
        assert s.gauss_residual == pytest.approx(0.0, abs=1e-15)

    def test_beta_zero(self):
        s = closed_form_abc(0.0, ConnectionParams(beta=0.0, gamma=2.0))
        assert_allclose((s.a, s.b, s.c), (1.0, 0.0, -1.0), atol=1e-15)

    def test_negative_branch(self):
        p = ConnectionParams(beta=0.5, gamma=2.0, branch_phi1=-1, branch_ode=-1)
        s = closed_form_abc(0.2, p)
        t = closed_form_abc(0.2, MU0)
        assert_allclose((s.a, s.b, s.c), (-t.a, t.b, -t.c))

    def test_boundary_raises(self):
        lo, hi = validity_domain(MU0)
        with pytest.raises(DomainError):
            closed_form_abc(hi + 1e-9, MU0)
        with pytest.raises(DomainError):
            closed_form_abc(lo - 1e-3, MU0)

    def test_needs_mu_zero(self):
        with pytest.raises(ValueError):
            closed_form_abc(0.0, MU1)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=0.01, max_value=0.99))
    def test_gauss_across_domain(self, frac):
        lo, hi = validity_domain(MU0)
        s = closed_form_abc(lo + frac * (hi - lo), MU0)
        assert abs(s.gauss_residual) <= 1e-12

    def test_x_coordinate(self):
        p = ConnectionParams(m1=-2, beta=0.5, gamma=2.0)
        assert closed_form_abc(0.4, p).x == pytest.approx(-0.2)


class TestPrintedNumerator:
    def test_coincides_at_origin(self):
        # e^{2z} = e^{4z} at z = 0, so the printed numerator cannot be told apart there.
        s = closed_form_abc(0.0, MU0)
        assert printed_closed_form_c(0.0, MU0) == pytest.approx(s.c, rel=1e-15)

    def test_fails_gauss_away_from_origin(self):
        s = closed_form_abc(0.5, MU0)
        margin = abs(s.a * printed_closed_form_c(0.5, MU0) - s.b**2 + 1.0)
        assert margin > 0.1


class TestPhi2Rhs:
    def test_reference_value(self):
        assert phi2_rhs(0.0, 1.2, MU1) == pytest.approx(0.8543758792, rel=1e-9)

    def test_elliptic_region(self):
        with pytest.raises(EllipticityError):
            phi2_rhs(0.0, 0.5, MU1)

    def test_degenerate_delta(self):
        assert phi2_rhs(0.0, 1.0, MU1) == pytest.approx(0.0, abs=1e-15)

    def test_needs_mu_nonzero(self):
        with pytest.raises(ValueError):
            phi2_rhs(0.0, 1.2, MU0)


@pytest.fixture(scope="module")
def run():
    return integrate_connection(0.0, 1.2, (0.0, 0.5), 1e-3, MU1)


class TestIntegrate:
    def test_samples(self, run):
        assert not run.truncated
        assert len(run.samples) == 501
        assert run.z[0] == 0.0 and run.z[-1] == pytest.approx(0.5)
        assert run.min_delta > 0
        assert max(abs(s.gauss_residual) for s in run.samples) <= 1e-13

    def test_residuals(self, run):
        res = codazzi_gauss_residuals(run.samples)
        assert res.max_codazzi <= 1e-6
        assert res.max_gauss <= 1e-13
        assert res.b_zeros == 0

    def test_first_integral(self, run):
        # mu a' = (1 + mu^2) b - mu^2 b' - beta e^{2z}
        z, h = run.z, run.step
        a = np.array([s.a for s in run.samples])
        b = run.b
        mu, beta = MU1.mu, MU1.beta
        lhs = mu * _fd4(a, h)
        rhs = (1 + mu**2) * b - mu**2 * _fd4(b, h) - beta * np.exp(2 * z)
        assert np.abs(lhs - rhs).max() <= 1e-8

    def test_first_integral_with_beta(self):
        p = ConnectionParams(mu=0.8, beta=0.3, gamma=2.0)
        run = integrate_connection(0.0, 1.5, (-0.1, 0.2), 1e-3, p)
        assert not run.truncated
        a = np.array([s.a for s in run.samples])
        b, z, h = run.b, run.z, run.step
        rhs = (1 + p.mu**2) * b - p.mu**2 * _fd4(b, h) - p.beta * np.exp(2 * z)
        assert np.abs(p.mu * _fd4(a, h) - rhs).max() <= 1e-8
        assert codazzi_gauss_residuals(run.samples).max_codazzi <= 1e-6

    def test_self_convergence(self):
        ends = [integrate_connection(0.0, 1.2, (0.0, 0.5), h, MU1).samples[-1].b for h in (1e-2, 5e-3, 2.5e-3)]
        order = math.log2(abs(ends[0] - ends[1]) / abs(ends[1] - ends[2]))
        assert order >= 3.8

    def test_two_sided_span(self):
        run = integrate_connection(0.1, 1.2, (0.0, 0.2), 1e-2, MU1)
        assert_allclose(run.z, np.linspace(0.0, 0.2, 21), atol=1e-12)
        assert run.samples[10].b == 1.2

    def test_bad_initial_point(self):
        with pytest.raises(ConnectionDataError):
            integrate_connection(0.0, 0.5, (0.0, 0.5), 1e-3, MU1)

    def test_stops_where_delta_vanishes(self):
        run = integrate_connection(0.0, 1.2, (-3.0, 0.0), 1e-2, MU1)
        assert run.truncated
        assert "Delta" in run.stop_reason or "coefficient" in run.stop_reason
        assert all(s.z > -3.0 for s in run.samples)

    def test_branch_mismatch_rejected(self):
        p = ConnectionParams(mu=1.0, branch_phi1=1, branch_ode=-1)
        with pytest.raises(ValueError, match="branch_ode"):
            integrate_connection(0.0, 1.2, (0.0, 0.5), 1e-3, p)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            integrate_connection(0.0, 1.2, (0.0, 0.5), 1e-3, MU0)
        with pytest.raises(ValueError):
            integrate_connection(0.0, 1.2, (0.0, 0.5), 0.0, MU1)
        with pytest.raises(ValueError):
            integrate_connection(1.0, 1.2, (0.0, 0.5), 1e-3, MU1)


class TestResiduals:
    def test_closed_form_interior(self):
        lo, hi = validity_domain(MU0)
        margin = 0.25 * (hi - lo)
        res = codazzi_gauss_residuals(closed_form_samples(MU0, (lo + margin, hi - margin), 1e-3))
        assert res.max_codazzi <= 1e-9
        assert res.max_gauss <= 1e-12

    def test_closed_form_full_domain_gauss(self):
        lo, hi = validity_domain(MU0)
        samples = closed_form_samples(MU0, (lo, hi), 1e-3)
        assert lo < samples[0].z and samples[-1].z < hi
        assert codazzi_gauss_residuals(samples).max_gauss <= 1e-12

    def test_detector_sensitivity(self):
        samples = list(integrate_connection(0.0, 1.2, (0.0, 0.5), 1e-3, MU1).samples)
        k = 250
        s = samples[k]
        samples[k] = ConnectionSample(z=s.z, a=s.a, b=s.b + 1e-3, c=s.c, params=s.params)
        res = codazzi_gauss_residuals(samples)
        assert abs(res.gauss[k]) == pytest.approx(2 * s.b * 1e-3, rel=1e-3)

    def test_requires_uniform_grid(self):
        samples = [closed_form_abc(z, MU0) for z in (0.0, 0.1, 0.2, 0.35, 0.4)]
        with pytest.raises(ValueError):
            codazzi_gauss_residuals(samples)
        with pytest.raises(ValueError):
            codazzi_gauss_residuals(samples[:3])

    def test_fd4_exact_on_quartics(self):
        z = np.linspace(0, 1, 11)
        assert_allclose(_fd4(z**4 - 2 * z**3 + z, 0.1), 4 * z**3 - 6 * z**2 + 1, atol=1e-11)

    def test_summary_dict(self):
        res = codazzi_gauss_residuals(integrate_connection(0.0, 1.2, (0.0, 0.1), 1e-2, MU1).samples)
        assert list(res.as_dict()) == ["max_codazzi1", "max_codazzi2", "max_gauss", "b_zeros", "n_samples"]
