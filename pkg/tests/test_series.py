import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weaklab.series import Envelope, LogForm, PartialSums, running_sums


def brute_tail(form: LogForm, K: int, upto: int = 200_000) -> float:
    ks = np.arange(K + 1, upto + 1, dtype=float)
    return math.fsum(np.exp(form(ks)))


def test_powers_merge_and_fold_constant():
    g = LogForm(1.0, 0.0, ((2, -1.0), (2, 0.5), (0, 3.0), (1, 0.0)))
    assert g.const == 4.0
    assert g.powers == ((2.0, -0.5),)


def test_of_shorthand():
    g = LogForm.of(log_coef=-4, k2=-1.0, k1=3)
    assert g.powers == ((1.0, 3.0), (2.0, -1.0))
    assert g(2.0) == pytest.approx(-4 * math.log(2) - 4 + 6)


def test_non_finite_coefficient_rejected():
    with pytest.raises(ValueError):
        LogForm(math.inf)


@pytest.mark.parametrize(
    "form, summable",
    [
        (LogForm(0.0, -2.0), True),
        (LogForm(0.0, -1.0), False),
        (LogForm(5.0, 3.0, ((1.0, -0.1),)), True),
        (LogForm(0.0, -9.0, ((0.5, 0.01),)), False),
        (LogForm(), False),
    ],
)
def test_summability(form, summable):
    assert form.summable() is summable


def test_zeta_four_tail():
    g = LogForm(0.0, -4.0)
    head = math.fsum(k**-4.0 for k in range(1, 11))
    total = head + g.tail_bound(10)
    assert total >= math.pi**4 / 90
    assert total - math.pi**4 / 90 < 1e-3
    assert g.tail_bound(0) >= math.pi**4 / 90


def test_divergent_form_has_no_bound():
    assert LogForm(0.0, 2.0).tail_bound(10) is None


def test_geometric_majorant_for_gaussian_against_linear_growth():
    # sum_{k>0} e^{2k - 2k^2}: the bound must cover the brute-force value
    g = LogForm(0.0, 0.0, ((1.0, 2.0), (2.0, -2.0)))
    assert g.tail_bound(0) >= brute_tail(g, 0, 100)


@settings(max_examples=60, deadline=None)
@given(
    c1=st.floats(-3, 3),
    c2=st.floats(-3, -0.05),
    b=st.floats(-3, 3),
    K=st.integers(0, 30),
)
def test_tail_bound_dominates_brute_force(c1, c2, b, K):
    g = LogForm(0.0, b, ((1.0, c1), (2.0, c2)))
    bound = g.tail_bound(K)
    assert bound is not None
    assert bound >= brute_tail(g, K, K + 2000) * (1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 3), b=st.floats(-2, 2), K=st.integers(0, 50))
def test_exponential_tail_bound_is_tight_enough(a, b, K):
    g = LogForm(0.0, b, ((1.0, -a),))
    exact = brute_tail(g, K, K + 5000)
    bound = g.tail_bound(K)
    assert exact * (1 - 1e-12) <= bound
    # ratio bound loses at most the geometric factor
    assert bound <= exact * 10 / min(a, 1) + 1e-300


def test_overflowing_terms_give_infinite_bound():
    g = LogForm(1000.0, 0.0, ((1.0, -1.0),))
    assert g.tail_bound(0) == math.inf


def test_envelope_reflection_swaps_real_bounds():
    env = Envelope(re_upper=LogForm(2.0), re_lower=LogForm(-1.0), log_mod_lower=LogForm(0.0, 1.0), k_min=3)
    r = env.reflected()
    assert r.re_upper == LogForm(1.0) and r.re_lower == LogForm(-2.0)
    assert r.log_mod_lower == env.log_mod_lower and r.k_min == 3


def test_compensated_sum_beats_naive():
    terms = [1.0] + [1e-16] * 10_000
    acc = PartialSums()
    for x in terms:
        acc.add(x)
    assert acc.value == math.fsum(terms)
    assert sum(terms) != math.fsum(terms)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=200))
def test_running_sums_end_at_fsum(xs):
    s = running_sums(xs)
    assert s[-1] == pytest.approx(math.fsum(xs), rel=1e-15, abs=1e-300)
    assert np.all(np.diff(s) >= 0)
