import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weaklab.evolution import (
    CONVERGES,
    REFUSED,
    STALLS,
    _stencil_factor,
    derivative_residual,
    loglog_slope,
    mild_identity_residual,
    orbit,
    smoothness_probe,
)
from weaklab.spectral import DiagonalOperator, DomainRefused, SpectralVector, TailModel, WitnessPath, norm
from weaklab.spectrum import FiniteSpectrum, ImaginaryExponential, LogStrip, RealLine

E1 = SpectralVector.basis(1)
EPS = np.finfo(float).eps


def single(z):
    return DiagonalOperator(FiniteSpectrum([z]))


def naive_central(y, t, k, h):
    """Textbook central-difference stencils, evaluated pointwise."""
    if k % 2 == 0:
        m = k // 2
        return sum((-1) ** j * math.comb(k, j) * y(t + (m - j) * h) for j in range(k + 1)) / h**k
    inner = lambda s: sum((-1) ** j * math.comb(k, j) * y(s + (k / 2 - j) * h) for j in range(k + 1)) / h**k
    return 0.5 * (inner(t + h / 2) + inner(t - h / 2))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("lam", [1.0, -0.7 + 2j, 3j])
def test_factorized_stencil_equals_textbook_stencil(k, lam):
    h, t = 0.05, 0.3
    y = lambda s: np.exp(s * lam)
    ref = naive_central(y, t, k, h)
    got = _stencil_factor(np.array([lam]), k, h)[0] * y(t)
    assert abs(got - ref) <= 1e-9 * max(1.0, abs(ref))


def test_orbit_at_zero_is_identity():
    f = SpectralVector(((1, 2.0),), TailModel("power", 2.0), 2)
    s = orbit(DiagonalOperator(RealLine()), f, 0.0)
    assert s.value is f and s.tail_error == 0.0


def test_orbit_half_turn():
    s = orbit(single(complex(0, math.pi)), E1, 1.0)
    assert s.value.coefficients[1] == pytest.approx(-1, abs=1e-15)


def test_orbit_doubling():
    s = orbit(single(1.0), E1, math.log(2))
    assert s.value.coefficients[1] == pytest.approx(2, rel=1e-15)


def test_orbit_refuses_outside_domain():
    f = SpectralVector((), TailModel("power", 2.0), 1)
    with pytest.raises(DomainRefused):
        orbit(DiagonalOperator(RealLine()), f, 1.0, N=100)


@settings(max_examples=30)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=16), st.floats(-5, 5))
def test_imaginary_spectrum_is_isometric(ims, t):
    A = DiagonalOperator(FiniteSpectrum([complex(0, y) for y in ims]))
    f = SpectralVector(tuple((i + 1, 1 + 1j * i) for i in range(len(ims))))
    assert norm(orbit(A, f, t).value) == pytest.approx(norm(f), rel=1e-12)


def test_mild_identity_zero_vector():
    assert mild_identity_residual(single(1.0), SpectralVector(), 0.0, 1.0, 64) == 0.0


def test_mild_identity_scalar_simpson_error():
    r64 = mild_identity_residual(single(1.0), E1, 0.0, 1.0, 64)
    r128 = mild_identity_residual(single(1.0), E1, 0.0, 1.0, 128)
    h = 1 / 64
    assert r64 <= 1e-8
    assert r64 == pytest.approx(h**4 / 180 * (math.e - 1), rel=0.05)
    assert 12 <= r64 / r128 <= 20


@pytest.mark.parametrize("steps", [0, 3, 7])
def test_mild_identity_rejects_odd_steps(steps):
    with pytest.raises(ValueError):
        mild_identity_residual(single(1.0), E1, 0.0, 1.0, steps)


def test_mild_identity_backward_is_mild_identity_for_minus_A():
    A = DiagonalOperator(FiniteSpectrum([0.5 + 1j, -1.0, 2j]))
    f = SpectralVector(((1, 1.0), (2, 2.0), (3, -1j)))
    minus = DiagonalOperator(A.spectrum.reflect())
    assert mild_identity_residual(A, f, 0.0, 1.0, 128) < 1e-9
    assert mild_identity_residual(A, f, 0.0, -1.0, 128) < 1e-9
    assert mild_identity_residual(minus, f, 0.0, 1.0, 128) == pytest.approx(
        mild_identity_residual(A, f, 0.0, -1.0, 128), rel=1e-6)


def test_mild_identity_with_tail():
    f = SpectralVector((), TailModel("exp_squares", 1.0), 1)
    assert mild_identity_residual(DiagonalOperator(LogStrip()), f, -0.5, 0.5, 64, N=40) < 1e-8


def test_derivative_first_order_scalar():
    r = derivative_residual(single(1.0), E1, 0.0, 1, 1e-3)
    assert r == pytest.approx(1e-6 / 6, rel=1e-3)
    assert r <= 2e-7


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_derivative_of_constant_orbit(k):
    assert derivative_residual(single(0.0), E1, 0.7, k, 1e-2) == 0.0


def test_derivative_refused_for_rough_vector():
    fam = ImaginaryExponential(2)
    idx = tuple(4 * p for p in range(1, 30))
    path = WitnessPath(idx, tuple(range(1, 30)), tuple(fam.eigenvalues(np.array(idx))), "bounded", 0.0)
    f = SpectralVector((), TailModel("power", 2.0, path), 1)
    with pytest.raises(DomainRefused):
        derivative_residual(DiagonalOperator(fam), f, 0.0, 1, 1e-3)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_halving_h_quarters_the_residual(k):
    A = DiagonalOperator(FiniteSpectrum([1.0, -2 + 1j, 0.5j]))
    f = SpectralVector(((1, 1.0), (2, 0.3), (3, 1j)))
    for h in (1e-2, 5e-3, 1e-3):
        ratio = derivative_residual(A, f, 0.2, k, h) / derivative_residual(A, f, 0.2, k, h / 2)
        assert 3.5 <= ratio <= 4.5


def test_probe_finite_support_converges():
    A = DiagonalOperator(FiniteSpectrum([1.0, 2j, -1 + 3j]))
    f = SpectralVector(((1, 1.0), (2, 1.0), (3, 1.0)))
    rep = smoothness_probe(A, f, 0.5)
    assert [o.verdict for o in rep.orders] == [CONVERGES] * 4
    assert all(1.7 <= o.slope <= 2.3 for o in rep.orders)
    assert not rep.inconclusive


def test_probe_zero_eigenvalue_converges_without_slope():
    rep = smoothness_probe(single(0.0), E1, 0.0)
    assert all(o.verdict == CONVERGES and o.slope is None for o in rep.orders)


def test_probe_refusal_stops_higher_orders():
    fam = ImaginaryExponential(2)
    idx = tuple(4 * p for p in range(1, 30))
    path = WitnessPath(idx, tuple(range(1, 30)), tuple(fam.eigenvalues(np.array(idx))), "bounded", 0.0)
    f = SpectralVector((), TailModel("power", 2.0, path), 1)
    rep = smoothness_probe(DiagonalOperator(fam), f, 0.0)
    assert len(rep.orders) == 1
    assert rep.orders[0].verdict == REFUSED and rep.orders[0].certified


def test_probe_certified_refusal_on_real_line():
    # |lambda_k f_k|^2 = k^-0.4 is not summable
    f = SpectralVector((), TailModel("power", 1.2), 1)
    rep = smoothness_probe(DiagonalOperator(RealLine()), f, 0.0, N=50)
    assert rep.orders[0].verdict == REFUSED and rep.orders[0].certified and not rep.inconclusive


def test_probe_inconclusive_refusal_flagged(opaque):
    f = SpectralVector((), TailModel("power", 3.0), 1)
    rep = smoothness_probe(DiagonalOperator(opaque), f, 0.0, N=50)
    assert rep.orders[0].verdict == REFUSED and not rep.orders[0].certified
    assert rep.inconclusive


@pytest.mark.parametrize("fam", [RealLine(), LogStrip()])
@pytest.mark.parametrize("t", [-1.0, 0.0, 1.0])
def test_probe_gaussian_tail_converges(fam, t):
    f = SpectralVector((), TailModel("exp_squares", 1.0), 1)
    rep = smoothness_probe(DiagonalOperator(fam), f, t)
    assert [o.verdict for o in rep.orders] == [CONVERGES] * 4


def test_probe_stalls_when_steps_are_too_coarse():
    # h * |lambda| >> 1: no asymptotic regime in the ladder
    rep = smoothness_probe(single(200.0), E1, 0.0, max_order=1, h_ladder=(1.0, 0.5, 0.25))
    assert rep.orders[0].verdict == STALLS


def test_probe_validates_ladder():
    with pytest.raises(ValueError):
        smoothness_probe(single(1.0), E1, 0.0, h_ladder=(1e-2, 1e-1))
    with pytest.raises(ValueError):
        smoothness_probe(single(1.0), E1, 0.0, max_order=0)


def test_report_rows():
    rep = smoothness_probe(single(1.0), E1, 0.0, max_order=2)
    rows = rep.rows()
    assert len(rows) == 8 and rows[0][:3] == (0.0, 1, 0.1)
    assert all(r[3] >= 0 for r in rows)


def test_loglog_slope_exact_square():
    hs = [1e-1, 1e-2, 1e-3]
    assert loglog_slope(hs, [h * h for h in hs]) == pytest.approx(2.0)
