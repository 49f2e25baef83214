import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutcause.conjugate import beta_binomial_posterior
from mutcause.errors import DomainError


def bisect_beta_quantile(a, b, p, tol=1e-14):
    """Invert the regularized incomplete beta by bisection, in mpmath arithmetic."""
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if mpmath.betainc(a, b, 0, mid, regularized=True) < p:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def test_worked_example():
    post = beta_binomial_posterior(1, 1, 70, 100, 0.95)
    assert (post.a, post.b) == (71, 31)
    # the posterior mean is 71/102; the 0.7 point estimate quoted alongside it is the sample proportion
    assert post.mean == pytest.approx(71 / 102, abs=1e-12)
    assert post.lower == pytest.approx(0.603, abs=0.001)
    assert post.upper == pytest.approx(0.781, abs=0.001)


def test_no_data_returns_prior():
    post = beta_binomial_posterior(1, 1, 0, 0, 0.95)
    assert (post.a, post.b) == (1, 1)
    assert post.lower == pytest.approx(0.025) and post.upper == pytest.approx(0.975)


def test_matches_bisection_oracle():
    post = beta_binomial_posterior(2, 3, 5, 10, 0.90)
    assert (post.a, post.b) == (7, 8)
    assert post.mean == pytest.approx(7 / 15)
    assert post.lower == pytest.approx(bisect_beta_quantile(7, 8, 0.05), abs=1e-10)
    assert post.upper == pytest.approx(bisect_beta_quantile(7, 8, 0.95), abs=1e-10)


@pytest.mark.parametrize(
    "args",
    [(0, 1, 1, 2, 0.9), (1, -1, 1, 2, 0.9), (1, 1, 3, 2, 0.9), (1, 1, -1, 2, 0.9), (1, 1, 1, 2, 1.0), (1, 1, 1.5, 2, 0.9)],
)
def test_domain_errors(args):
    with pytest.raises(DomainError):
        beta_binomial_posterior(*args)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.1, 20),
    st.floats(0.1, 20),
    st.integers(0, 500),
    st.integers(0, 500),
    st.floats(0.05, 0.99),
)
def test_interval_properties(a, b, k, extra, level):
    post = beta_binomial_posterior(a, b, k, k + extra, level)
    assert 0 <= post.lower < post.upper <= 1
    assert post.mean == pytest.approx(post.a / (post.a + post.b))
    assert post.a + post.b == pytest.approx(a + b + k + extra)
