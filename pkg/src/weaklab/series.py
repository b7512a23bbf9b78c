"""Certified bounds for positive series given through the logarithm of their terms.

Every infinite series handled by the lab has terms of the form ``exp(g(k))``
where ``g`` is a *log form*::

    g(k) = const + log_coef * ln(k) + sum_p coef_p * k**p        (p > 0)

Envelopes of eigenvalues, symbols and coefficient laws are all expressed as
log forms, so upper bounds of the form ``exp(U(k))`` give convergent
majorants and lower bounds ``exp(L(k))`` give divergent minorants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

LOG_FLOAT_MAX = math.log(np.finfo(float).max)

# Rounding slack applied to every certified bound.
_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class LogForm:
    """``const + log_coef*ln k + sum(coef * k**p)``, evaluated for ``k >= 1``."""

    const: float = 0.0
    log_coef: float = 0.0
    powers: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        merged: dict[float, float] = {}
        for p, c in self.powers:
            if p < 0:
                raise ValueError(f"power exponent must be >= 0, got {p}")
            merged[float(p)] = merged.get(float(p), 0.0) + float(c)
        const = float(self.const) + merged.pop(0.0, 0.0)
        clean = tuple(sorted((p, c) for p, c in merged.items() if c != 0.0))
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "log_coef", float(self.log_coef))
        object.__setattr__(self, "powers", clean)
        for v in (const, self.log_coef, *(c for _, c in clean)):
            if not math.isfinite(v):
                raise ValueError("log form coefficients must be finite")

    @classmethod
    def of(cls, const: float = 0.0, log_coef: float = 0.0, **powers: float) -> "LogForm":
        """Shorthand: ``LogForm.of(log_coef=-4, k2=-1.0, k1=3)``."""
        items = []
        for name, coef in powers.items():
            if not name.startswith("k"):
                raise TypeError(f"unexpected keyword {name!r}")
            items.append((float(name[1:].replace("_", ".")), coef))
        return cls(const, log_coef, tuple(items))

    def __add__(self, other: "LogForm") -> "LogForm":
        return LogForm(
            self.const + other.const,
            self.log_coef + other.log_coef,
            self.powers + other.powers,
        )

    def scale(self, s: float) -> "LogForm":
        return LogForm(s * self.const, s * self.log_coef, tuple((p, s * c) for p, c in self.powers))

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        out = self.const + self.log_coef * np.log(k)
        for p, c in self.powers:
            out = out + c * k**p
        return out

    def dominant(self) -> tuple[str, float, float]:
        """Leading growth term as ``(kind, exponent, coefficient)``."""
        if self.powers:
            p, c = self.powers[-1]
            return "power", p, c
        if self.log_coef != 0.0:
            return "log", 0.0, self.log_coef
        return "const", 0.0, self.const

    def summable(self) -> bool:
        """Whether ``sum_k exp(g(k))`` converges."""
        kind, _, c = self.dominant()
        if kind == "power":
            return c < 0
        if kind == "log":
            return c < -1
        return False

    def sup_log_ratio(self, k0: int) -> float:
        """Upper bound on ``g(k+1) - g(k)`` valid for every ``k >= k0``.

        Each difference ``c*((k+1)**p - k**p)`` is monotone in ``k``, so its
        supremum is its value at ``k0`` or its limit.  Positive terms with
        ``p > 1`` are only controlled when paired with a dominant negative
        power ``P > p`` using ``P k**(P-1) <= (k+1)**P - k**P`` and
        ``(k+1)**p - k**p <= p 2**(p-1) k**(p-1)``.
        """
        k0 = float(k0)
        total = 0.0
        rest = list(self.powers)
        big_pos = [(p, c) for p, c in rest if p > 1 and c > 0]
        if big_pos:
            P, cP = self.powers[-1]
            if not (P > 1 and cP < 0):
                return math.inf
            bracket = cP * P + sum(c * p * 2.0 ** (p - 1) * k0 ** (p - P) for p, c in big_pos)
            if bracket >= 0:
                return math.inf
            total += k0 ** (P - 1) * bracket
            rest = [pc for pc in rest if pc not in big_pos and pc != (P, cP)]
        for p, c in rest:
            if p >= 1:
                if p == 1:
                    total += c
                else:
                    total += c * ((k0 + 1) ** p - k0**p)
            elif c > 0:
                total += c * ((k0 + 1) ** p - k0**p)
        if self.log_coef > 0:
            total += self.log_coef * math.log1p(1.0 / k0)
        return total

    def tail_bound(self, K: int, max_explicit: int = 1_000_000) -> float | None:
        """Certified upper bound on ``sum_{k > K} exp(g(k))``; ``None`` if unavailable.

        The bound is ``inf`` only when the terms overflow double precision.
        """
        if K < 0:
            raise ValueError("K must be >= 0")
        if not self.summable():
            return None
        if not self.powers:
            # pure power-of-k decay: integral comparison
            b = self.log_coef
            if K == 0:
                head, K = math.exp(self.const), 1
            else:
                head = 0.0
            with np.errstate(over="ignore"):
                integral = math.exp(self.const + (b + 1) * math.log(K)) / (-(b + 1))
            return (head + integral) * _SLACK
        k0 = K + 1
        while True:
            s = self.sup_log_ratio(k0)
            if s < 0:
                break
            k0 *= 2
            if k0 - (K + 1) > max_explicit:
                return None
        explicit = 0.0
        if k0 > K + 1:
            ks = np.arange(K + 1, k0, dtype=float)
            with np.errstate(over="ignore"):
                explicit = math.fsum(np.exp(self(ks)))
        g0 = float(self(k0))
        if g0 > LOG_FLOAT_MAX:
            return math.inf
        head = math.exp(g0) / (-math.expm1(s))
        return (explicit + head) * _SLACK


@dataclass(frozen=True)
class Envelope:
    """Bounds on ``Re(lambda_k)`` and ``ln|lambda_k|`` valid for ``k >= k_min``.

    A missing bound is ``None``.  ``k`` is the position along whatever
    sequence the envelope describes (eigenbasis index or witness position).
    """

    re_upper: LogForm | None = None
    re_lower: LogForm | None = None
    log_mod_upper: LogForm | None = None
    log_mod_lower: LogForm | None = None
    k_min: int = 1

    def reflected(self) -> "Envelope":
        """Envelope of ``-lambda``."""
        return Envelope(
            re_upper=None if self.re_lower is None else self.re_lower.scale(-1.0),
            re_lower=None if self.re_upper is None else self.re_upper.scale(-1.0),
            log_mod_upper=self.log_mod_upper,
            log_mod_lower=self.log_mod_lower,
            k_min=self.k_min,
        )


@dataclass
class PartialSums:
    """Compensated running sum of nonnegative terms (Neumaier's variant)."""

    total: float = 0.0
    _comp: float = field(default=0.0, repr=False)

    def add(self, x: float) -> float:
        s = self.total
        t = s + x
        if math.isinf(t):
            self.total, self._comp = t, 0.0
            return t
        if abs(s) >= abs(x):
            self._comp += (s - t) + x
        else:
            self._comp += (x - t) + s
        self.total = t
        return t + self._comp

    @property
    def value(self) -> float:
        return self.total + self._comp


def running_sums(terms: Iterable[float]) -> np.ndarray:
    """Compensated prefix sums; entry ``i`` is the sum of ``terms[:i+1]``."""
    acc = PartialSums()
    return np.array([acc.add(float(x)) for x in terms], dtype=float)
