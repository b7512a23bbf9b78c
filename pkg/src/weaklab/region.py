"""The logarithmic region family L(b-, b+) and the bounded-complement criterion.

A point ``lam`` belongs to ``L(b-, b+)`` iff::

    Re lam <= min(0, -b- * ln|Im lam|)   or   Re lam >= max(0, b+ * ln|Im lam|)

with ``ln|0| = -inf``, so the whole real axis is inside every region.  All
weak solutions of ``y' = Ay`` on the line are infinitely differentiable
exactly when some region leaves only a bounded part of the spectrum outside.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from .spectrum import SpectrumFamily

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComplexPoint:
    re: float
    im: float

    def __post_init__(self):
        object.__setattr__(self, "re", float(self.re))
        object.__setattr__(self, "im", float(self.im))
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"non-finite point ({self.re}, {self.im})")

    @classmethod
    def of(cls, z: complex) -> "ComplexPoint":
        return cls(z.real, z.imag)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)


@dataclass(frozen=True)
class RegionParams:
    b_minus: float
    b_plus: float

    def __post_init__(self):
        for name in ("b_minus", "b_plus"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0")
            object.__setattr__(self, name, v)

    def swapped(self) -> "RegionParams":
        """Parameters of the mirror region ``-L``."""
        return RegionParams(self.b_plus, self.b_minus)

    def to_list(self) -> list[float]:
        return [self.b_minus, self.b_plus]


def in_region(lam: ComplexPoint | complex, b: RegionParams) -> bool:
    """Membership of ``lam`` in ``L(b.b_minus, b.b_plus)``."""
    re, im = (lam.re, lam.im) if isinstance(lam, ComplexPoint) else (lam.real, lam.imag)
    if im == 0.0:
        # ln|Im| = -inf: both thresholds collapse to 0
        return True
    ln_im = math.log(abs(im))
    return re <= min(0.0, -b.b_minus * ln_im) or re >= max(0.0, b.b_plus * ln_im)


def region_mask(z: np.ndarray, b: RegionParams) -> np.ndarray:
    """Vectorised :func:`in_region` over a complex array."""
    z = np.asarray(z, dtype=complex)
    re, im = z.real, np.abs(z.imag)
    on_axis = im == 0.0
    with np.errstate(divide="ignore"):
        ln_im = np.log(np.where(on_axis, 1.0, im))
    left = re <= np.minimum(0.0, -b.b_minus * ln_im)
    right = re >= np.maximum(0.0, b.b_plus * ln_im)
    return on_axis | left | right


def _scan_limit(spec: "SpectrumFamily", N: int) -> int:
    limit = min(N, spec.max_index)
    if spec.size is not None:
        limit = min(limit, spec.size)
    if limit < N:
        log.warning("%s: scan truncated at index %d (requested %d)", spec.label, limit, N)
    return limit


def exceptional_set(spec: "SpectrumFamily", b: RegionParams, N: int) -> list[int]:
    """Indices ``n <= N`` whose eigenvalue lies outside ``L(b)``, ascending."""
    if N < 1:
        raise ValueError("N must be >= 1")
    limit = _scan_limit(spec, N)
    idx = np.arange(1, limit + 1)
    outside = ~region_mask(spec.eigenvalues(idx), b)
    return [int(i) for i in idx[outside]]


# -- criterion verdicts ------------------------------------------------------


@dataclass(frozen=True)
class HoldsUpTo:
    N: int
    region: RegionParams
    exceptional: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "outcome": "HoldsUpTo",
            "N": self.N,
            "region": self.region.to_list(),
            "exceptional_indices": list(self.exceptional),
        }


@dataclass(frozen=True)
class FailsUpTo:
    N: int
    witnesses: tuple[tuple[RegionParams, tuple[int, ...]], ...]

    def __post_init__(self):
        if not self.witnesses or any(not w for _, w in self.witnesses):
            raise ValueError("FailsUpTo needs a nonempty witness list for every region")

    def to_dict(self) -> dict:
        return {
            "outcome": "FailsUpTo",
            "N": self.N,
            "witnesses": [{"region": b.to_list(), "indices": list(w)} for b, w in self.witnesses],
        }


@dataclass(frozen=True)
class AnalyticHolds:
    region: RegionParams
    reason: str = ""

    def to_dict(self) -> dict:
        return {"outcome": "AnalyticHolds", "region": self.region.to_list(), "reason": self.reason}


@dataclass(frozen=True)
class AnalyticFails:
    reason: str

    def to_dict(self) -> dict:
        return {"outcome": "AnalyticFails", "reason": self.reason}


CriterionVerdict = Union[HoldsUpTo, FailsUpTo, AnalyticHolds, AnalyticFails]


def holds(verdict: CriterionVerdict) -> bool:
    return isinstance(verdict, (HoldsUpTo, AnalyticHolds))


def default_b_grid() -> list[RegionParams]:
    """``{2^-10, ..., 2^10}`` squared, b_minus varying slowest (441 points)."""
    values = [2.0**e for e in range(-10, 11)]
    return [RegionParams(bm, bp) for bm in values for bp in values]


@dataclass
class _Scan:
    region: RegionParams
    exceptional: list[int] = field(default_factory=list)
    late: list[int] = field(default_factory=list)


def criterion_check(
    spec: "SpectrumFamily",
    b_grid: Sequence[RegionParams] | None = None,
    N: int = 1000,
    *,
    analytic: bool = True,
    late_fraction: float = 0.5,
    max_witnesses: int = 10,
    threads: int = 1,
) -> CriterionVerdict:
    """Decide whether ``sigma(A) \\ L(b)`` is bounded for some ``b`` on the grid.

    Catalog families answer in closed form unless ``analytic=False``.  The
    truncated scan calls a region *holding* when no exceptional index falls
    in the late window ``(late_fraction*N, N]``; otherwise the latest
    exceptional indices of every grid point are reported as witnesses.
    A finite spectrum always holds.
    """
    grid = list(default_b_grid() if b_grid is None else b_grid)
    if not grid:
        raise ValueError("b_grid must be nonempty")
    if N < 1:
        raise ValueError("N must be >= 1")
    if analytic:
        verdict = spec.analytic_verdict()
        if verdict is not None:
            return verdict

    limit = _scan_limit(spec, N)
    idx = np.arange(1, limit + 1)
    z = spec.eigenvalues(idx)
    cutoff = late_fraction * limit

    def scan(b: RegionParams) -> _Scan:
        exc = idx[~region_mask(z, b)]
        s = _Scan(b, [int(i) for i in exc])
        s.late = [i for i in s.exceptional if i > cutoff]
        return s

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scans = list(pool.map(scan, grid))
    else:
        scans = [scan(b) for b in grid]

    if spec.size is not None:
        best = min(scans, key=lambda s: len(s.exceptional))
        return HoldsUpTo(limit, best.region, tuple(best.exceptional))
    if spec.modulus_growth:
        for s in scans:
            if not s.late:
                return HoldsUpTo(limit, s.region, tuple(s.exceptional))
    return FailsUpTo(
        limit,
        tuple((s.region, tuple(s.late[-max_witnesses:] or s.exceptional[-max_witnesses:])) for s in scans),
    )


# -- figure data -------------------------------------------------------------


def _boundary_x(y: float, b: RegionParams) -> tuple[float, float]:
    if y == 0.0:
        return 0.0, 0.0
    ln_y = math.log(abs(y))
    return min(0.0, -b.b_minus * ln_y), max(0.0, b.b_plus * ln_y)


def region_boundary_samples(
    b: RegionParams, im_range: tuple[float, float], count: int
) -> list[tuple[ComplexPoint, ComplexPoint]]:
    """Left and right boundary curves of ``L(b)`` at ``count`` equispaced heights."""
    lo, hi = (float(v) for v in im_range)
    if count < 2:
        raise ValueError("count must be >= 2")
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"degenerate interval [{lo}, {hi}]")
    out = []
    for y in np.linspace(lo, hi, count):
        y = float(y)
        left, right = _boundary_x(y, b)
        out.append((ComplexPoint(left, y), ComplexPoint(right, y)))
    return out


def write_region_csv(samples: Sequence[tuple[ComplexPoint, ComplexPoint]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["im", "left_re", "right_re"])
        for left, right in samples:
            w.writerow([repr(left.im), repr(left.re), repr(right.re)])
