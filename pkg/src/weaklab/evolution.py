"""Weak-solution orbits ``y(t) = e^{tA} f`` and numerical smoothness probes.

For a normal ``A`` every ``f`` in the domain of all ``e^{tA}`` gives a weak
(mild) solution of ``y' = Ay`` on the whole line.  The solution is ``n``
times strongly differentiable at ``t`` iff ``y(t)`` lies in ``D(A^n)``, and
then ``y^(k)(t) = A^k y(t)``.  Finite differences of the orbit are compared
with ``A^k y(t)``; a domain refusal is itself the evidence of
non-differentiability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .spectral import (
    DEFAULT_N,
    AbsPowExp,
    DiagonalOperator,
    DomainRefused,
    Exp,
    InDomain,
    NotInDomain,
    Power,
    SpectralVector,
    apply_symbol,
    domain_test,
)

DEFAULT_H_LADDER = (1e-1, 1e-2, 1e-3, 1e-4)
SLOPE_WINDOW = (1.7, 2.3)
STALL_LEVEL = 1e-6

CONVERGES = "ConvergesOrder2"
STALLS = "Stalls"
REFUSED = "DomainRefused"

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class OrbitSample:
    t: float
    value: SpectralVector
    tail_error: float


def orbit(A: DiagonalOperator, f: SpectralVector, t: float, N: int = DEFAULT_N) -> OrbitSample:
    """``y(t) = e^{tA} f``; ``t = 0`` returns ``f`` itself."""
    if t == 0:
        return OrbitSample(0.0, f, 0.0)
    g, err = apply_symbol(Exp(t), A, f, N)
    return OrbitSample(float(t), g, err)


def _materialized(A, f, t, N) -> SpectralVector:
    # Exp(0) materialises a tail, unlike orbit(.., 0)
    return apply_symbol(Exp(t), A, f, N)[0]


def _aligned(vectors: Sequence[SpectralVector]) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(set().union(*(v.coefficients for v in vectors)))
    pos = {k: i for i, k in enumerate(keys)}
    out = np.zeros((len(vectors), len(keys)), dtype=complex)
    for row, v in enumerate(vectors):
        for k, c in v.entries:
            out[row, pos[k]] = c
    return np.array(keys, dtype=int), out


def mild_identity_residual(
    A: DiagonalOperator, f: SpectralVector, t0: float, t: float, quad_steps: int = 64, N: int = DEFAULT_N
) -> float:
    """``|| y(t) - y(t0) - A Q ||`` with ``Q`` the composite Simpson integral of ``y`` over ``[t0, t]``."""
    if quad_steps < 2 or quad_steps % 2:
        raise ValueError("quad_steps must be even and >= 2")
    # |e^{s lam}| is convex in s, so the endpoints certify the whole interval
    for s in (t0, t):
        v = domain_test(Exp(s), A, f, N)
        if not isinstance(v, InDomain):
            raise DomainRefused(Exp(s), v)
    nodes = np.linspace(t0, t, quad_steps + 1)
    samples = [_materialized(A, f, float(s), N) for s in nodes]
    keys, Y = _aligned(samples)
    if keys.size == 0:
        return 0.0
    Q = simpson(Y, x=nodes, axis=0)
    AQ, _ = apply_symbol(Power(1), A, SpectralVector(tuple(zip(keys.tolist(), Q.tolist()))), N)
    _, both = _aligned([samples[0], samples[-1], AQ])
    r = both[1] - both[0] - both[2]
    return float(np.sqrt(math.fsum(np.abs(r) ** 2)))


def _stencil_factor(lam: np.ndarray, k: int, h: float) -> np.ndarray:
    """Symbol of the central difference of order ``k`` with step ``h`` on ``e^{s lam}``.

    Even ``k``: ``delta^k`` over ``k+1`` points; odd ``k``: ``mu delta^k`` over
    ``k+2`` points, with ``delta -> 2 sinh(h lam/2)`` and ``mu -> cosh(h lam/2)``.
    """
    half = 0.5 * h * lam
    out = (2.0 * np.sinh(half) / h) ** k
    if k % 2:
        out = out * np.cosh(half)
    return out


def _residual_parts(A, f, t, k, h, N) -> tuple[float, float]:
    """``(||D_h^k y(t) - A^k y(t)||, ||A^k y(t)||)`` over the truncation window."""
    y = _materialized(A, f, t, N)
    if not y.entries:
        return 0.0, 0.0
    idx = np.array([i for i, _ in y.entries], dtype=int)
    c = np.array([v for _, v in y.entries], dtype=complex)
    lam = A.eigenvalues(idx)
    with np.errstate(over="ignore", invalid="ignore"):
        exact = lam**k
        diff = (_stencil_factor(lam, k, h) - exact) * c
        ref = exact * c
    res = math.sqrt(math.fsum(np.abs(diff) ** 2))
    scale = math.sqrt(math.fsum(np.abs(ref) ** 2))
    return res, scale


def derivative_residual(
    A: DiagonalOperator, f: SpectralVector, t: float, k: int, h: float, N: int = DEFAULT_N
) -> float:
    """``|| D_h^k y(t) - A^k y(t) ||`` with a central difference of order ``k``.

    Raises :class:`DomainRefused` unless ``f`` is certified in the domain of
    ``|lambda|^k e^{t Re lambda}``, i.e. ``y(t)`` in ``D(A^k)``.
    """
    if k < 1 or h <= 0:
        raise ValueError("need k >= 1 and h > 0")
    v = domain_test(AbsPowExp(k, t), A, f, N)
    if not isinstance(v, InDomain):
        raise DomainRefused(AbsPowExp(k, t), v)
    return _residual_parts(A, f, t, k, h, N)[0]


@dataclass(frozen=True)
class OrderResult:
    k: int
    residuals: tuple[tuple[float, float], ...]
    verdict: str
    slope: float | None = None
    certified: bool = False  # a refusal backed by NotInDomain


@dataclass(frozen=True)
class SmoothnessReport:
    t: float
    orders: tuple[OrderResult, ...]

    @property
    def inconclusive(self) -> bool:
        return any(o.verdict == REFUSED and not o.certified for o in self.orders)

    def verdicts(self) -> dict[int, str]:
        return {o.k: o.verdict for o in self.orders}

    def rows(self) -> list[tuple]:
        """CSV rows ``t, order, h, residual, verdict``; refusals carry empty h/residual."""
        out = []
        for o in self.orders:
            if not o.residuals:
                out.append((self.t, o.k, "", "", o.verdict))
            for h, r in o.residuals:
                out.append((self.t, o.k, h, r, o.verdict))
        return out


def loglog_slope(hs: Sequence[float], rs: Sequence[float]) -> float:
    """Least-squares slope of ``log r`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(rs), 1)[0])


def _classify(pairs: list[tuple[float, float]], floor: float) -> tuple[str, float | None]:
    usable = [(h, r) for h, r in pairs if r > floor]
    if len(usable) < 2:
        # every residual is at rounding level: nothing left to converge
        if all(r <= max(floor, STALL_LEVEL) for _, r in pairs):
            return CONVERGES, None
        return STALLS, None
    slope = loglog_slope(*zip(*usable))
    if SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]:
        return CONVERGES, slope
    return STALLS, slope


def smoothness_probe(
    A: DiagonalOperator,
    f: SpectralVector,
    t: float,
    max_order: int = 4,
    h_ladder: Sequence[float] = DEFAULT_H_LADDER,
    N: int = DEFAULT_N,
) -> SmoothnessReport:
    """Finite-difference evidence for ``y in C^k`` at ``t``, ``k = 1..max_order``.

    Residuals below ``64 eps ||A^k y||`` are rounding noise and do not enter
    the slope fit.  The first order whose domain test fails ends the probe.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    hs = [float(h) for h in h_ladder]
    if not hs or any(h <= 0 for h in hs) or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h_ladder must be strictly decreasing and positive")
    orders = []
    for k in range(1, max_order + 1):
        v = domain_test(AbsPowExp(k, t), A, f, N)
        if not isinstance(v, InDomain):
            orders.append(OrderResult(k, (), REFUSED, None, isinstance(v, NotInDomain)))
            break
        pairs = []
        scale = 0.0
        for h in hs:
            r, scale = _residual_parts(A, f, t, k, h, N)
            pairs.append((h, r))
        verdict, slope = _classify(pairs, 64 * _EPS * scale)
        orders.append(OrderResult(k, tuple(pairs), verdict, slope))
    return SmoothnessReport(float(t), tuple(orders))
