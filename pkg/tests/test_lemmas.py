import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import beta, gamma

from fracshape.lemmas import (
    FAMILIES,
    Family,
    LemmaProbe,
    aux_h,
    aux_h_identity,
    comparison_lemma_check,
    comparison_profile,
    frac_derivative_bound_check,
    make_family,
    run_lemma_suite,
)


def assert_close(r, exact, rel=1e-8):
    """Quadrature value agrees with the oracle and the error bar covers the gap."""
    assert r.lhs == pytest.approx(exact, rel=rel)
    assert abs(r.lhs - exact) <= max(r.error, 1e-12 * abs(exact))


def root(u_a, a, s, c, N):
    return a + (2 * u_a) ** (s / N) * N / (s * c)


def fubini_decreasing(fam, a, b, s):
    """LHS after exchanging the order of integration (independent oracle)."""
    def integrand(t):
        return -fam.df(t) * ((t - a) ** (1 - s) - (t - min(t, b)) ** (1 - s))
    end = fam.support_end
    if math.isfinite(end):
        return integrate.quad(integrand, a, end, points=[b] if b < end else None, limit=200)[0]
    return integrate.quad(integrand, a, b, limit=200)[0] + integrate.quad(integrand, b, np.inf, limit=200)[0]


def fubini_increasing(fam, a, b, s):
    def integrand(t):
        return fam.df(t) * ((b - t) ** (1 - s) - (max(a, t) - t) ** (1 - s))
    return integrate.quad(integrand, 0, b, points=[a] if a > 0 else None, limit=200)[0]


class TestClosedForms:
    @pytest.mark.parametrize("s", (0.2, 0.5, 0.8))
    @pytest.mark.parametrize("alpha,a,b", [(1.0, 0.0, 1.0), (3.0, 0.5, 2.0)])
    def test_exponential(self, s, alpha, a, b):
        r = frac_derivative_bound_check(LemmaProbe(make_family("exp", alpha=alpha), a, b, s))
        exact = gamma(2 - s) * alpha ** (s - 1) * (math.exp(-alpha * a) - math.exp(-alpha * b))
        assert_close(r, exact)
        assert r.status == "pass" and r.lhs <= r.rhs

    @pytest.mark.parametrize("s", (0.2, 0.5, 0.8))
    @pytest.mark.parametrize("q", (1.0, 2.0, 3.5))
    def test_hat(self, s, q):
        r = frac_derivative_bound_check(LemmaProbe(make_family("hat", T=1.0, q=q), 0.0, 1.0, s))
        assert_close(r, q * beta(2 - s, q))
        assert r.rhs == pytest.approx(1.0)
        assert r.status == "pass"

    def test_hat_linear_value(self):
        r = frac_derivative_bound_check(LemmaProbe(make_family("hat", T=1.0, q=1.0), 0.0, 1.0, 0.5))
        assert r.lhs == pytest.approx(1 / 1.5, rel=1e-10)

    @pytest.mark.parametrize("s", (0.2, 0.5, 0.8))
    @pytest.mark.parametrize("p,a,b", [(1.0, 0.0, 1.0), (2.0, 0.5, 1.5), (3.0, 0.2, 0.9)])
    def test_power(self, s, p, a, b):
        r = frac_derivative_bound_check(LemmaProbe(make_family("power", p=p), a, b, s))
        exact = (1 - s) * p * beta(p, 1 - s) * (b ** (p + 1 - s) - a ** (p + 1 - s)) / (p + 1 - s)
        assert_close(r, exact)
        assert r.status == "pass"

    def test_zero(self):
        r = frac_derivative_bound_check(LemmaProbe(make_family("zero"), 0.0, 1.0, 0.5))
        assert r.lhs == 0.0 and r.rhs == 0.0 and r.status == "pass"


class TestFubiniOracle:
    @pytest.mark.parametrize("s", (0.3, 0.7))
    @pytest.mark.parametrize("name,params,a,b", [
        ("exp", {"alpha": 2.0}, 0.3, 1.7),
        ("hat", {"T": 2.0, "q": 2.0}, 0.0, 1.0),
        ("hat", {"T": 1.5, "q": 1.5}, 0.5, 3.0),
    ])
    def test_decreasing(self, s, name, params, a, b):
        fam = make_family(name, **params)
        r = frac_derivative_bound_check(LemmaProbe(fam, a, b, s))
        assert r.lhs == pytest.approx(fubini_decreasing(fam, a, b, s), rel=1e-7)

    @pytest.mark.parametrize("s", (0.3, 0.7))
    def test_saturating(self, s):
        fam = make_family("saturating", alpha=2.0)
        r = frac_derivative_bound_check(LemmaProbe(fam, 0.2, 1.0, s))
        assert r.lhs == pytest.approx(fubini_increasing(fam, 0.2, 1.0, s), rel=1e-7)
        assert r.status == "pass"


class TestInputs:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            make_family("sine")

    def test_registry(self):
        assert set(FAMILIES) == {"zero", "exp", "hat", "power", "saturating"}

    def test_increasing_function_in_decreasing_slot(self):
        inc = make_family("power", p=2.0)
        fake = Family("fake", inc.f, inc.df, "decreasing", support_end=2.0)
        with pytest.raises(ValueError, match="monotonicity violated"):
            frac_derivative_bound_check(LemmaProbe(fake, 0.0, 1.0, 0.5))

    def test_increasing_needs_zero_start(self):
        fam = Family("shifted", lambda t: 1 + np.asarray(t, float), lambda t: np.ones_like(np.asarray(t, float)),
                     "increasing")
        with pytest.raises(ValueError, match="f\\(0\\) = 0"):
            frac_derivative_bound_check(LemmaProbe(fam, 0.0, 1.0, 0.5))

    @pytest.mark.parametrize("a,b,s", [(1.0, 1.0, 0.5), (0.0, 1.0, 1.0), (0.0, 1.0, 0.0)])
    def test_probe_validation(self, a, b, s):
        with pytest.raises(ValueError):
            LemmaProbe(make_family("exp"), a, b, s)

    def test_increasing_on_negative_axis(self):
        with pytest.raises(ValueError):
            LemmaProbe(make_family("power"), -1.0, 1.0, 0.5)

    @pytest.mark.parametrize("bad", [{"alpha": -1.0}])
    def test_bad_exp(self, bad):
        with pytest.raises(ValueError):
            make_family("exp", **bad)

    def test_bad_hat(self):
        with pytest.raises(ValueError):
            make_family("hat", T=1.0, q=0.5)


@given(st.floats(0.05, 0.95), st.floats(0.2, 4.0))
@settings(max_examples=15)
def test_exponential_bound_holds(s, alpha):
    r = frac_derivative_bound_check(LemmaProbe(make_family("exp", alpha=alpha), 0.0, 1.0, s))
    exact = gamma(2 - s) * alpha ** (s - 1) * (1 - math.exp(-alpha))
    assert_close(r, exact)
    assert r.status == "pass"


@given(st.floats(0.05, 0.95), st.floats(1.0, 4.0), st.floats(0.0, 0.9))
@settings(max_examples=15)
def test_power_bound_holds(s, p, a):
    r = frac_derivative_bound_check(LemmaProbe(make_family("power", p=p), a, 1.0, s))
    assert r.status == "pass"
    assert r.lhs <= r.rhs + 3 * r.error


class TestAuxiliary:
    def test_identity(self):
        u_a, s, c, N = 0.1, 0.5, 1.0, 2
        R = root(u_a, 0.0, s, c, N)
        r = aux_h_identity(u_a, 0.0, R + 0.5, s, c, N)
        assert r.status == "pass"
        worst = float(r.detail.split()[-1])
        assert worst < 1e-6

    def test_start_value(self):
        assert aux_h(0.0, 0.1, 0.0, 0.5, 1.0, 2) == pytest.approx(0.2, rel=1e-14)

    def test_vanishes_at_root(self):
        R = root(0.1, 0.0, 0.5, 1.0, 2)
        assert aux_h(R, 0.1, 0.0, 0.5, 1.0, 2) == 0.0
        assert aux_h(0.999 * R, 0.1, 0.0, 0.5, 1.0, 2) > 0

    def test_support_condition(self):
        R = root(0.1, 0.0, 0.5, 1.0, 2)
        with pytest.raises(ValueError, match="support condition violated"):
            aux_h_identity(0.1, 0.0, 0.5 * R, 0.5, 1.0, 2)

    @given(st.floats(0.1, 0.9), st.sampled_from([1, 2, 3]), st.floats(0.01, 1.0))
    @settings(max_examples=10)
    def test_identity_property(self, s, N, u_a):
        R = root(u_a, 0.0, s, 1.0, N)
        assert aux_h_identity(u_a, 0.0, R + 0.1, s, 1.0, N, n_probe=12).status == "pass"


class TestComparison:
    s, c, N = 0.5, 1.0, 2

    def b(self, amp):
        return root(amp, 0.0, self.s, self.c, self.N) + 0.25

    @pytest.mark.parametrize("variant", ("decreasing", "increasing"))
    @pytest.mark.parametrize("kappa", (2.0, 3.0))
    def test_steep_profiles_pass(self, variant, kappa):
        b = self.b(0.2)
        u = comparison_profile(0.2, 0.0, b, self.s, self.c, self.N, kappa=kappa, variant=variant)
        r = comparison_lemma_check(u, 0.0, b, self.s, self.c, self.N, variant=variant, n_grid=80)
        assert r.status == "pass"

    def test_large_amplitude_passes(self):
        theta = 2 ** (self.N / self.s)
        b = self.b(0.2 * theta)
        u = comparison_profile(0.2, 0.0, b, self.s, self.c, self.N, kappa=1.0, theta=theta)
        assert comparison_lemma_check(u, 0.0, b, self.s, self.c, self.N, n_grid=80).status == "pass"

    @pytest.mark.parametrize("scale", (1.0, 0.5))
    def test_auxiliary_profile_is_vacuous(self, scale):
        # h itself violates the doubled hypothesis, and so does any multiple below one
        R = root(0.1, 0.0, self.s, self.c, self.N)
        b = R + 0.5
        u = lambda r: scale * aux_h(r, 0.1, 0.0, self.s, self.c, self.N)
        r = comparison_lemma_check(u, 0.0, b, self.s, self.c, self.N, n_grid=80)
        assert r.status == "vacuous"
        assert r.passed

    def test_zero_profile(self):
        r = comparison_lemma_check(lambda x: np.zeros_like(np.asarray(x, float)), 0.0, 1.0,
                                   self.s, self.c, self.N, n_grid=20)
        assert r.status == "pass" and r.lhs == 0.0

    def test_support_not_satisfied(self):
        u = comparison_profile(0.2, 0.0, 1.0, self.s, self.c, self.N, kappa=2.0)
        r = comparison_lemma_check(u, 0.0, 1.0, self.s, self.c, self.N, n_grid=20)
        assert r.status == "vacuous" and "support" in r.detail

    def test_monotonicity(self):
        with pytest.raises(ValueError, match="monotonicity violated"):
            comparison_lemma_check(lambda x: np.asarray(x, float) ** 2, 0.0, 5.0, self.s, self.c, self.N)

    def test_negative_profile(self):
        with pytest.raises(ValueError, match="non-negative"):
            comparison_lemma_check(lambda x: -np.ones_like(np.asarray(x, float)), 0.0, 5.0,
                                   self.s, self.c, self.N)


def test_suite_all_pass():
    results = run_lemma_suite(s_values=(0.5,))
    assert results and all(r.passed for r in results)
    assert any(r.status == "vacuous" for r in results)
    names = [r.name for r in results]
    assert len(names) == len(set(names))


def test_suite_deterministic():
    a = run_lemma_suite(s_values=(0.3,))
    b = run_lemma_suite(s_values=(0.3,))
    assert [(r.lhs, r.rhs, r.status) for r in a] == [(r.lhs, r.rhs, r.status) for r in b] or all(
        (x.lhs == y.lhs or (math.isnan(x.lhs) and math.isnan(y.lhs))) and x.status == y.status
        for x, y in zip(a, b))
