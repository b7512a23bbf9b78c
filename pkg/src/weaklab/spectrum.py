"""Eigenvalue enumerations ``n -> lambda_n`` for diagonal normal operators.

Two kinds exist: a finite list of points, and a closed catalog of
parametric families.  Every catalog family knows

* a vectorised evaluator (``eigenvalues``) and the largest index whose
  eigenvalue is representable in double precision (``max_index``);
* an :class:`~weaklab.series.Envelope` bounding ``Re lambda_n`` and
  ``ln|lambda_n|`` by log forms in ``n``, used for certified tail bounds;
* its closed-form criterion verdict;
* the asymptotic behaviour of its real parts (``re_trend``).

=============================  ============================  ==========================
family id                      lambda_n                      all weak solutions smooth
=============================  ============================  ==========================
``real-line``                  ``alpha*n + beta``            always
``log-strip``                  ``c ln n + i n^p``            iff ``c != 0``
``imaginary-exponential``      ``i r^n``                     never
``exp-imaginary-vs-poly-real`` ``n^q + i exp(s n^d)``        iff ``q >= d``
=============================  ============================  ==========================

The last family takes ``d = 1`` by default; ``d > 1`` gives spectra such as
``n + i exp(n^3)`` whose real parts drift to infinity outside every region.
"""

from __future__ import annotations

import math
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .region import AnalyticFails, AnalyticHolds, ComplexPoint, CriterionVerdict, RegionParams
from .series import LOG_FLOAT_MAX, Envelope, LogForm

UNBOUNDED_INDEX = sys.maxsize


def _cplx(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    # avoids 1j * x, which turns an infinite x into a NaN real part
    out = np.empty(np.shape(re), dtype=complex)
    out.real, out.imag = re, im
    return out


def _last_finite(n: int, fn) -> int:
    """Largest ``m <= n`` with ``fn(m)`` finite."""
    with np.errstate(over="ignore"):
        while n > 0 and not np.isfinite(fn(float(n))):
            n -= 1
    return n


class SpectrumFamily(ABC):
    """A countable eigenvalue enumeration, indexed from 1."""

    family_id: str
    #: |lambda_n| eventually nondecreasing and unbounded
    modulus_growth: bool = True
    #: number of eigenvalues for finite lists, ``None`` otherwise
    size: int | None = None

    @property
    def max_index(self) -> int:
        return UNBOUNDED_INDEX

    @abstractmethod
    def eigenvalues(self, idx) -> np.ndarray: ...

    def __call__(self, n: int) -> ComplexPoint:
        if n < 1 or n > self.max_index or (self.size is not None and n > self.size):
            raise IndexError(f"{self.label}: no representable eigenvalue at index {n}")
        return ComplexPoint.of(complex(self.eigenvalues(np.array([n]))[0]))

    def envelope(self) -> Envelope | None:
        return None

    def analytic_verdict(self) -> CriterionVerdict | None:
        return None

    def re_trend(self) -> str | None:
        """``'bounded'``, ``'up'`` or ``'down'`` for the real parts; ``None`` if unknown."""
        return None

    @abstractmethod
    def params(self) -> dict: ...

    @property
    def label(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.family_id}({args})"

    def reflect(self) -> "SpectrumFamily":
        return Reflected(self)

    def to_dict(self) -> dict:
        return {"kind": self.family_id, **self.params()}

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return self.label


class FiniteSpectrum(SpectrumFamily):
    family_id = "finite"
    modulus_growth = False

    def __init__(self, points: Sequence[ComplexPoint | complex | tuple[float, float]]):
        pts = []
        for p in points:
            if isinstance(p, ComplexPoint):
                pts.append(p)
            elif isinstance(p, (tuple, list)):
                pts.append(ComplexPoint(*p))
            else:
                pts.append(ComplexPoint.of(complex(p)))
        if not pts:
            raise ValueError("a finite spectrum needs at least one point")
        self.points = tuple(pts)
        self.size = len(pts)
        self._z = np.array([complex(p) for p in pts])

    @property
    def max_index(self) -> int:
        return self.size

    def eigenvalues(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=int)
        if idx.size and (idx.min() < 1 or idx.max() > self.size):
            raise IndexError(f"index out of range 1..{self.size}")
        return self._z[idx - 1]

    def params(self) -> dict:
        return {"points": [[p.re, p.im] for p in self.points]}

    def reflect(self) -> "FiniteSpectrum":
        return FiniteSpectrum([ComplexPoint(-p.re, -p.im) for p in self.points])

    @property
    def label(self) -> str:
        return f"finite({self.size} points)"


class RealLine(SpectrumFamily):
    """``lambda_n = alpha*n + beta`` (a self-adjoint operator)."""

    family_id = "real-line"

    def __init__(self, alpha: float = 1.0, beta: float = 0.0):
        self.alpha, self.beta = float(alpha), float(beta)
        if self.alpha == 0.0 or not math.isfinite(self.alpha) or not math.isfinite(self.beta):
            raise ValueError("real-line needs a finite nonzero alpha")

    def eigenvalues(self, idx) -> np.ndarray:
        n = np.asarray(idx, dtype=float)
        return (self.alpha * n + self.beta).astype(complex)

    def envelope(self) -> Envelope:
        a, b = abs(self.alpha), abs(self.beta)
        re = LogForm(self.beta, 0.0, ((1.0, self.alpha),))
        # |a n + b| <= (|a|+|b|) n, and >= |a| n / 2 once n >= 2|b|/|a|
        return Envelope(
            re_upper=re,
            re_lower=re,
            log_mod_upper=LogForm(math.log(a + b), 1.0),
            log_mod_lower=LogForm(math.log(a / 2), 1.0),
            k_min=max(1, math.ceil(2 * b / a)),
        )

    def analytic_verdict(self) -> CriterionVerdict:
        return AnalyticHolds(RegionParams(1.0, 1.0), "real spectrum lies in every region")

    def re_trend(self) -> str:
        return "up" if self.alpha > 0 else "down"

    def params(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


class LogStrip(SpectrumFamily):
    """``lambda_n = c ln n + i n^p``."""

    family_id = "log-strip"

    def __init__(self, c: float = 1.0, p: float = 1.0):
        self.c, self.p = float(c), float(p)
        if not (self.p > 0 and math.isfinite(self.p) and math.isfinite(self.c)):
            raise ValueError("log-strip needs finite c and p > 0")

    @property
    def max_index(self) -> int:
        log_limit = LOG_FLOAT_MAX / self.p
        if log_limit >= math.log(UNBOUNDED_INDEX):
            return UNBOUNDED_INDEX
        return int(math.exp(log_limit))

    def eigenvalues(self, idx) -> np.ndarray:
        n = np.asarray(idx, dtype=float)
        return _cplx(self.c * np.log(n), n**self.p)

    def envelope(self) -> Envelope:
        # ln n <= n^p / (e p), hence |lambda_n| <= n^p (1 + |c|/(e p))
        re = LogForm(0.0, self.c)
        return Envelope(
            re_upper=re,
            re_lower=re,
            log_mod_upper=LogForm(math.log1p(abs(self.c) / (math.e * self.p)), self.p),
            log_mod_lower=LogForm(0.0, self.p),
        )

    def analytic_verdict(self) -> CriterionVerdict:
        c, p = self.c, self.p
        if c > 0:
            return AnalyticHolds(RegionParams(1.0, c / p), "c ln n >= b+ p ln n with b+ = c/p")
        if c < 0:
            return AnalyticHolds(RegionParams(-c / p, 1.0), "c ln n <= -b- p ln n with b- = -c/p")
        return AnalyticFails("Re lambda_n = 0 while ln|Im lambda_n| = p ln n -> inf: outside every region")

    def re_trend(self) -> str:
        return "up" if self.c > 0 else "down" if self.c < 0 else "bounded"

    def params(self) -> dict:
        return {"c": self.c, "p": self.p}


class ImaginaryExponential(SpectrumFamily):
    """``lambda_n = i r^n`` with ``r > 1``."""

    family_id = "imaginary-exponential"

    def __init__(self, r: float = 2.0):
        self.r = float(r)
        if not (self.r > 1 and math.isfinite(self.r)):
            raise ValueError("imaginary-exponential needs r > 1")

    @property
    def max_index(self) -> int:
        return _last_finite(int(LOG_FLOAT_MAX // math.log(self.r)), lambda n: np.power(self.r, n))

    def eigenvalues(self, idx) -> np.ndarray:
        n = np.asarray(idx, dtype=float)
        return _cplx(np.zeros_like(n), np.power(self.r, n))

    def envelope(self) -> Envelope:
        zero = LogForm()
        mod = LogForm(0.0, 0.0, ((1.0, math.log(self.r)),))
        return Envelope(re_upper=zero, re_lower=zero, log_mod_upper=mod, log_mod_lower=mod)

    def analytic_verdict(self) -> CriterionVerdict:
        return AnalyticFails("purely imaginary and unbounded: Re = 0 < b+ n ln r for every b")

    def re_trend(self) -> str:
        return "bounded"

    def params(self) -> dict:
        return {"r": self.r}


class ExpImaginaryPolyReal(SpectrumFamily):
    """``lambda_n = n^q + i exp(s n^d)``."""

    family_id = "exp-imaginary-vs-poly-real"

    def __init__(self, q: float = 2.0, s: float = 1.0, d: float = 1.0):
        self.q, self.s, self.d = float(q), float(s), float(d)
        if not (self.q >= 0 and self.s > 0 and self.d > 0):
            raise ValueError("exp-imaginary-vs-poly-real needs q >= 0, s > 0, d > 0")

    @property
    def max_index(self) -> int:
        start = int((LOG_FLOAT_MAX / self.s) ** (1.0 / self.d))
        return _last_finite(start, lambda n: np.exp(self.s * n**self.d) + n**self.q)

    def eigenvalues(self, idx) -> np.ndarray:
        n = np.asarray(idx, dtype=float)
        return _cplx(n**self.q, np.exp(self.s * n**self.d))

    def envelope(self) -> Envelope:
        q, s, d = self.q, self.s, self.d
        # |lambda| <= n^q + e^{s n^d} <= e^{s n^d} (1 + sup_x x^q e^{-s x^d})
        peak = math.exp((q / d) * (math.log(q) - math.log(s * d * math.e))) if q > 0 else 1.0
        re = LogForm(0.0, 0.0, ((q, 1.0),))
        return Envelope(
            re_upper=re,
            re_lower=re,
            log_mod_upper=LogForm(math.log1p(peak), 0.0, ((d, s),)),
            log_mod_lower=LogForm(0.0, 0.0, ((d, s),)),
        )

    def analytic_verdict(self) -> CriterionVerdict:
        q, s, d = self.q, self.s, self.d
        if q > d:
            return AnalyticHolds(RegionParams(1.0, 1.0), "n^q outgrows b+ s n^d: finitely many exceptions")
        if q == d:
            return AnalyticHolds(RegionParams(1.0, 1.0 / s), "n^q = b+ s n^d with b+ = 1/s")
        return AnalyticFails("q < d: Re lambda_n = n^q < b+ s n^d eventually for every b+")

    def re_trend(self) -> str:
        return "up" if self.q > 0 else "bounded"

    def params(self) -> dict:
        return {"q": self.q, "s": self.s, "d": self.d}


class Reflected(SpectrumFamily):
    """The spectrum ``{-lambda_n}`` of ``-A``."""

    def __init__(self, base: SpectrumFamily):
        self.base = base
        self.family_id = base.family_id
        self.modulus_growth = base.modulus_growth
        self.size = base.size

    @property
    def max_index(self) -> int:
        return self.base.max_index

    def eigenvalues(self, idx) -> np.ndarray:
        return -self.base.eigenvalues(idx)

    def envelope(self) -> Envelope | None:
        env = self.base.envelope()
        return None if env is None else env.reflected()

    def analytic_verdict(self) -> CriterionVerdict | None:
        v = self.base.analytic_verdict()
        if isinstance(v, AnalyticHolds):
            return AnalyticHolds(v.region.swapped(), "mirror of: " + v.reason)
        return v

    def re_trend(self) -> str | None:
        t = self.base.re_trend()
        return {"up": "down", "down": "up"}.get(t, t)

    def params(self) -> dict:
        return self.base.params()

    def reflect(self) -> SpectrumFamily:
        return self.base

    def to_dict(self) -> dict:
        return {**self.base.to_dict(), "reflected": True}

    @property
    def label(self) -> str:
        return f"-{self.base.label}"


CATALOG: dict[str, type[SpectrumFamily]] = {
    cls.family_id: cls for cls in (RealLine, LogStrip, ImaginaryExponential, ExpImaginaryPolyReal)
}


def make_family(kind: str, reflected: bool = False, **params) -> SpectrumFamily:
    """Build a spectrum from its serialised form (see :meth:`SpectrumFamily.to_dict`)."""
    if kind == "finite":
        fam: SpectrumFamily = FiniteSpectrum(params.pop("points"))
        if params:
            raise TypeError(f"unexpected parameters {sorted(params)}")
    else:
        try:
            cls = CATALOG[kind]
        except KeyError:
            raise ValueError(f"unknown spectrum family {kind!r}; known: {sorted(CATALOG)}") from None
        fam = cls(**params)
    return fam.reflect() if reflected else fam


@dataclass(frozen=True)
class CatalogEntry:
    family_id: str
    formula: str
    defaults: dict
    verdict: CriterionVerdict


def catalog_entries() -> list[CatalogEntry]:
    """Catalog families at their default parameters, with analytic verdicts."""
    formulas = {
        "real-line": "alpha*n + beta",
        "log-strip": "c*ln(n) + i*n^p",
        "imaginary-exponential": "i*r^n",
        "exp-imaginary-vs-poly-real": "n^q + i*exp(s*n^d)",
    }
    out = []
    for fid, cls in CATALOG.items():
        fam = cls()
        out.append(CatalogEntry(fid, formulas[fid], fam.params(), fam.analytic_verdict()))
    return out
