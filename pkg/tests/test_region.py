import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weaklab.region import (
    AnalyticFails,
    AnalyticHolds,
    ComplexPoint,
    FailsUpTo,
    HoldsUpTo,
    RegionParams,
    criterion_check,
    default_b_grid,
    exceptional_set,
    holds,
    in_region,
    region_boundary_samples,
    region_mask,
    write_region_csv,
)
from weaklab.spectrum import ExpImaginaryPolyReal, FiniteSpectrum, ImaginaryExponential, LogStrip, RealLine

B11 = RegionParams(1, 1)
finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-3, 1e3)


def test_origin_inside():
    assert in_region(ComplexPoint(0, 0), B11)


def test_point_between_boundaries_outside():
    assert not in_region(ComplexPoint(5, math.exp(10)), B11)


def test_point_right_of_boundary_inside():
    assert in_region(ComplexPoint(12, math.exp(10)), B11)


def test_accepts_python_complex():
    assert in_region(complex(12, math.exp(10)), B11)


@pytest.mark.parametrize("bm, bp", [(0, 1), (1, 0), (-1, 1), (math.inf, 1)])
def test_region_params_must_be_positive(bm, bp):
    with pytest.raises(ValueError, match="must be > 0"):
        RegionParams(bm, bp)


def test_complex_point_rejects_nan():
    with pytest.raises(ValueError):
        ComplexPoint(math.nan, 0)


@given(re=finite, bm=positive, bp=positive)
def test_real_axis_always_inside(re, bm, bp):
    assert in_region(ComplexPoint(re, 0.0), RegionParams(bm, bp))


@given(re=finite, im=finite, bm=positive, bp=positive)
def test_conjugate_symmetry(re, im, bm, bp):
    b = RegionParams(bm, bp)
    assert in_region(ComplexPoint(re, im), b) == in_region(ComplexPoint(re, -im), b)


@given(re=st.floats(0, 1e6), im=finite, bm=positive, bm2=positive, bp=positive)
def test_right_half_ignores_b_minus(re, im, bm, bm2, bp):
    assert in_region(ComplexPoint(re, im), RegionParams(bm, bp)) == in_region(ComplexPoint(re, im), RegionParams(bm2, bp))


@given(re=st.floats(-1e6, 0), im=finite, bm=positive, bp=positive, bp2=positive)
def test_left_half_ignores_b_plus(re, im, bm, bp, bp2):
    assert in_region(ComplexPoint(re, im), RegionParams(bm, bp)) == in_region(ComplexPoint(re, im), RegionParams(bm, bp2))


@given(re=finite, im=finite, bm=positive, bp=positive, s1=st.floats(0.01, 1), s2=st.floats(0.01, 1))
def test_smaller_parameters_give_larger_region(re, im, bm, bp, s1, s2):
    z = ComplexPoint(re, im)
    if in_region(z, RegionParams(bm, bp)):
        assert in_region(z, RegionParams(bm * s1, bp * s2))


@settings(max_examples=50)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30), positive, positive)
def test_mask_matches_scalar_predicate(pts, bm, bp):
    b = RegionParams(bm, bp)
    z = np.array([complex(a, c) for a, c in pts])
    assert list(region_mask(z, b)) == [in_region(w, b) for w in z]


def test_exceptional_set_real_spectrum_empty():
    assert exceptional_set(RealLine(), RegionParams(0.01, 0.01), 100) == []


def test_exceptional_set_imaginary_exponential_everything():
    assert exceptional_set(ImaginaryExponential(2), B11, 10) == list(range(1, 11))


def test_exceptional_set_square_real_part_empty():
    assert exceptional_set(ExpImaginaryPolyReal(q=2, s=1), B11, 50) == []


def test_exceptional_set_requires_positive_n():
    with pytest.raises(ValueError):
        exceptional_set(RealLine(), B11, 0)


def test_exceptional_set_truncates_at_representable_index(caplog):
    fam = ImaginaryExponential(2)
    out = exceptional_set(fam, B11, 5000)
    assert out[-1] == fam.max_index
    assert "truncated" in caplog.text


def test_criterion_real_line_analytic():
    assert isinstance(criterion_check(RealLine()), AnalyticHolds)


def test_criterion_imaginary_exponential_analytic():
    assert isinstance(criterion_check(ImaginaryExponential(2)), AnalyticFails)


def test_criterion_log_strip_scan():
    v = criterion_check(LogStrip(1, 1), [RegionParams(1, 0.5)], 1000, analytic=False)
    assert isinstance(v, HoldsUpTo)
    assert v.exceptional == () and v.region == RegionParams(1, 0.5) and v.N == 1000


def test_criterion_scan_fails_for_imaginary_exponential():
    v = criterion_check(ImaginaryExponential(2), [B11, RegionParams(4, 4)], 500, analytic=False)
    assert isinstance(v, FailsUpTo)
    assert all(w for _, w in v.witnesses)
    assert all(max(w) <= v.N for _, w in v.witnesses)


def test_criterion_scan_default_grid_has_441_points():
    grid = default_b_grid()
    assert len(grid) == 441
    assert grid[0] == RegionParams(2**-10, 2**-10) and grid[1] == RegionParams(2**-10, 2**-9)


def test_criterion_rejects_empty_grid():
    with pytest.raises(ValueError):
        criterion_check(RealLine(), [])


@settings(max_examples=30)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=16))
def test_finite_spectrum_always_holds(pts):
    v = criterion_check(FiniteSpectrum([complex(a, b) for a, b in pts]), [B11, RegionParams(0.5, 2)], 100)
    assert holds(v)


def test_threaded_scan_matches_serial():
    spec = LogStrip(0.0, 1.0)
    serial = criterion_check(spec, default_b_grid()[::7], 400, analytic=False)
    threaded = criterion_check(spec, default_b_grid()[::7], 400, analytic=False, threads=4)
    assert serial == threaded


def test_boundary_at_height_one_is_origin():
    (left, right), = [s for s in region_boundary_samples(B11, (-1, 1), 3) if s[0].im == 1.0]
    assert (left.re, right.re) == (0.0, 0.0)


def test_boundary_at_height_e():
    left, right = region_boundary_samples(B11, (math.e, 2 * math.e), 2)[0]
    assert left.re == pytest.approx(-1.0, abs=1e-15) and right.re == pytest.approx(1.0, abs=1e-15)


def test_boundary_with_unequal_parameters():
    left, right = region_boundary_samples(RegionParams(2, 3), (math.exp(2), 10), 2)[0]
    assert left.re == pytest.approx(-4.0) and right.re == pytest.approx(6.0)


def test_boundary_monotone_on_each_side():
    samples = region_boundary_samples(RegionParams(1.5, 0.7), (0.01, 50), 200)
    rights = [r.re for _, r in samples]
    lefts = [l.re for l, _ in samples]
    assert rights == sorted(rights) and lefts == sorted(lefts, reverse=True)


@pytest.mark.parametrize("rng, count", [((1, 1), 5), ((2, 1), 5), ((0, 1), 1)])
def test_boundary_rejects_bad_input(rng, count):
    with pytest.raises(ValueError):
        region_boundary_samples(B11, rng, count)


def test_region_csv(tmp_path):
    path = tmp_path / "r.csv"
    write_region_csv(region_boundary_samples(B11, (-math.e, math.e), 3), path)
    text = path.read_bytes()
    assert b"\r" not in text
    rows = list(csv.reader(text.decode().splitlines()))
    assert rows[0] == ["im", "left_re", "right_re"]
    assert [float(x) for x in rows[2]] == [0.0, 0.0, 0.0]
    assert float(rows[3][1]) == pytest.approx(-1.0)
