"""Explicit weak solutions that are not differentiable at 0.

When the spectrum keeps leaving every region ``L(b)``, one can pick
eigenvalues ``lambda_{n(k)}`` outside the shrinking regions
``L((2k)^-1, (2k)^-1)`` with ``|lambda_{n(k)}| > k^4``.  Two cases:

* bounded real parts: ``f = sum k^-2 e_{n(k)}`` lies in every ``D(e^{tA})``
  but ``sum |lambda_{n(k)}|^2 k^-4 >= sum k^4`` diverges, so ``f`` is not in
  ``D(A)``;
* real parts drifting to ``+inf`` along a subsequence with
  ``Re lambda >= position``: ``f = sum e^{-n(k) Re lambda_{n(k)}} e_{n(k)}``
  behaves the same way.  Drift to ``-inf`` is the same case for ``-A``.

The orbit ``y(t) = e^{tA} f`` is then a weak solution with ``y(0) = f``
outside ``D(A)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import (
    DEFAULT_CAP,
    DEFAULT_N,
    DiagonalOperator,
    DomainVerdict,
    Exp,
    InDomain,
    NotInDomain,
    Power,
    SpectralVector,
    TailModel,
    WitnessPath,
    domain_test,
)
from .spectrum import SpectrumFamily

BOUNDED, UP, DOWN = "bounded", "up", "down"
CERTIFIED = "CertifiedNotDifferentiableAtZero"
INCONCLUSIVE = "Inconclusive"

DEFAULT_OMEGA_MAX = 1e3
DEFAULT_EXPLICIT = 16


class InsufficientWitnesses(RuntimeError):
    """The scan ran out of spectrum before enough witnesses were found."""

    def __init__(self, found: int, needed: int):
        self.found = found
        self.needed = needed
        super().__init__(f"found {found} witnesses, needed {needed}; raise the scan limit")


def in_strip(z: complex, k: int) -> bool:
    """``-(2k)^-1 ln|Im z| < Re z < (2k)^-1 ln|Im z|``, i.e. ``z`` outside ``L((2k)^-1, (2k)^-1)``."""
    if z.imag == 0:
        return False
    w = math.log(abs(z.imag)) / (2 * k)
    return -w < z.real < w


@dataclass(frozen=True)
class WitnessSequence:
    """Selected eigenvalues, in selection order restricted to the regime's subsequence.

    ``ordinals[p-1]`` is the greedy step ``k`` at which the ``p``-th entry was
    picked, so every point satisfies the strip condition for its ordinal.
    """

    indices: tuple[int, ...]
    points: tuple[complex, ...]
    ordinals: tuple[int, ...]
    regime: str
    omega: float = 0.0

    def __post_init__(self):
        n = len(self.indices)
        if n == 0 or len(self.points) != n or len(self.ordinals) != n:
            raise ValueError("witness fields must be nonempty and equally long")
        if self.regime not in (BOUNDED, UP, DOWN):
            raise ValueError(f"unknown regime {self.regime!r}")
        prev = 0.0
        for p, (z, k) in enumerate(zip(self.points, self.ordinals), start=1):
            if not (k >= p and abs(z) > max(k**4, prev)):
                raise ValueError(f"modulus growth fails at witness {p}")
            if not in_strip(z, k):
                raise ValueError(f"strip condition fails at witness {p}")
            if self.regime == BOUNDED and abs(z.real) > self.omega:
                raise ValueError(f"|Re| exceeds omega at witness {p}")
            if self.regime == UP and z.real < p:
                raise ValueError(f"Re below position at witness {p}")
            if self.regime == DOWN and z.real > -p:
                raise ValueError(f"Re above -position at witness {p}")
            prev = abs(z)

    def __len__(self) -> int:
        return len(self.indices)

    def to_path(self) -> WitnessPath:
        """The sequence as a tail carrier; a ``down`` sequence is stored for ``-A``."""
        pts = self.points if self.regime != DOWN else tuple(-z for z in self.points)
        regime = BOUNDED if self.regime == BOUNDED else "up"
        return WitnessPath(self.indices, self.ordinals, pts, regime, self.omega)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "omega": self.omega,
            "indices": list(self.indices),
            "ordinals": list(self.ordinals),
            "points": [[z.real, z.imag] for z in self.points],
        }


def _greedy(z: np.ndarray) -> list[tuple[int, int, complex]]:
    """First-fit pass: ``(ordinal, index, point)`` for every witness found."""
    out = []
    k, prev = 1, 0.0
    for n, w in enumerate(z.tolist(), start=1):
        if abs(w) > max(k**4, prev) and in_strip(w, k):
            out.append((k, n, w))
            prev = abs(w)
            k += 1
    return out


def select_witnesses(
    spec: SpectrumFamily, count: int, scan_limit: int = 1000, *, omega_max: float = DEFAULT_OMEGA_MAX
) -> WitnessSequence:
    """Greedy witness selection over ``lambda_1 .. lambda_scan_limit``.

    Returns every witness the scan finds (at least ``count``).  The regime is
    taken from the family's known real-part trend; otherwise real parts within
    ``omega_max`` mean ``bounded`` and the sign of the largest one decides.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    limit = min(scan_limit, spec.max_index)
    if spec.size is not None:
        limit = min(limit, spec.size)
    found = _greedy(spec.eigenvalues(np.arange(1, limit + 1))) if limit >= 1 else []
    if len(found) < count:
        raise InsufficientWitnesses(len(found), count)

    re = np.array([w.real for _, _, w in found])
    regime = spec.re_trend()
    if regime is None:
        if np.max(np.abs(re)) <= omega_max:
            regime = BOUNDED
        else:
            regime = UP if re[np.argmax(np.abs(re))] > 0 else DOWN
    if regime == BOUNDED:
        picked = found
    else:
        sign = 1 if regime == UP else -1
        picked = []
        for item in found:
            if sign * item[2].real >= len(picked) + 1:
                picked.append(item)
        if len(picked) < count:
            raise InsufficientWitnesses(len(picked), count)
    omega = float(np.max(np.abs([w.real for _, _, w in picked]))) if regime == BOUNDED else 0.0
    return WitnessSequence(
        indices=tuple(n for _, n, _ in picked),
        points=tuple(w for _, _, w in picked),
        ordinals=tuple(k for k, _, _ in picked),
        regime=regime,
        omega=omega,
    )


def build_bounded_re_vector(w: WitnessSequence, explicit: int = DEFAULT_EXPLICIT) -> SpectralVector:
    """``f = sum_k k^-2 e_{n(k)}``: explicit for ``k <= explicit``, then a ``k^-2`` tail on the path."""
    if w.regime != BOUNDED:
        raise ValueError(f"bounded-Re construction needs a bounded regime, got {w.regime!r}")
    m = min(explicit, len(w))
    entries = tuple((w.indices[k - 1], k**-2.0) for k in range(1, m + 1))
    return SpectralVector(entries, TailModel("power", 2.0, w.to_path()), m + 1)


def build_unbounded_re_vector(
    w: WitnessSequence, explicit: int = DEFAULT_EXPLICIT
) -> tuple[SpectralVector, SpectralVector]:
    """``f`` with coefficients ``exp(-n(k) Re lambda_{n(k)})`` and ``h`` with half that exponent."""
    if w.regime != UP:
        raise ValueError(f"unbounded-Re construction needs the 'up' regime, got {w.regime!r}")
    path = w.to_path()
    m = min(explicit, len(w))

    def vector(c: float) -> SpectralVector:
        entries = tuple(
            (w.indices[p - 1], math.exp(-c * w.ordinals[p - 1] * w.points[p - 1].real)) for p in range(1, m + 1)
        )
        return SpectralVector(entries, TailModel("coupled_exp", c, path), m + 1)

    return vector(1.0), vector(0.5)


def reflect_operator(A: DiagonalOperator) -> DiagonalOperator:
    """The diagonal operator ``-A``."""
    return DiagonalOperator(A.spectrum.reflect())


@dataclass(frozen=True)
class CounterexampleCertificate:
    vector: SpectralVector
    exp_domain_checks: tuple[tuple[float, DomainVerdict], ...]
    a_domain_check: DomainVerdict
    conclusion: str
    auxiliary: SpectralVector | None = None

    def __post_init__(self):
        if self.conclusion == CERTIFIED:
            ok = all(isinstance(v, InDomain) for _, v in self.exp_domain_checks)
            if not (ok and isinstance(self.a_domain_check, NotInDomain)):
                raise ValueError("certified conclusion needs InDomain exp checks and a NotInDomain A-check")

    @property
    def certified(self) -> bool:
        return self.conclusion == CERTIFIED

    def to_dict(self) -> dict:
        a = self.a_domain_check
        return {
            "conclusion": self.conclusion,
            "vector": self.vector.to_dict(),
            "exp_domain_checks": [{"t": t, "verdict": v.to_dict()} for t, v in self.exp_domain_checks],
            "a_domain_check": a.to_dict(),
            "divergence_witness": [[k, s] for k, s in a.witness] if isinstance(a, NotInDomain) else [],
            "auxiliary": None if self.auxiliary is None else self.auxiliary.to_dict(),
        }


def certify(
    A: DiagonalOperator,
    f: SpectralVector,
    t_samples: Sequence[float],
    N: int = DEFAULT_N,
    cap: float = DEFAULT_CAP,
    *,
    auxiliary: SpectralVector | None = None,
    threads: int = 1,
) -> CounterexampleCertificate:
    """Check ``f in D(e^{tA})`` at every sample and ``f notin D(A)``.

    Certified iff every exponential check is ``InDomain`` and the ``A`` check
    is ``NotInDomain`` with partial sums past ``cap``.
    """
    ts = [float(t) for t in t_samples]
    if not (any(t < 0 for t in ts) and any(t > 0 for t in ts)):
        raise ValueError("t_samples must contain both a negative and a positive time")

    def check(t: float) -> DomainVerdict:
        return domain_test(Exp(t), A, f, N, cap)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            exp_checks = list(pool.map(check, ts))
    else:
        exp_checks = [check(t) for t in ts]
    a_check = domain_test(Power(1), A, f, N, cap)
    ok = all(isinstance(v, InDomain) for v in exp_checks)
    ok = ok and isinstance(a_check, NotInDomain) and a_check.exceeds_cap
    return CounterexampleCertificate(
        f, tuple(zip(ts, exp_checks)), a_check, CERTIFIED if ok else INCONCLUSIVE, auxiliary
    )


@dataclass(frozen=True)
class ForgeResult:
    witnesses: WitnessSequence
    certificate: CounterexampleCertificate
    reflected: bool


def forge_counterexample(
    spec: SpectrumFamily,
    count: int = 8,
    t_samples: Sequence[float] = (-2.0, -1.0, 1.0, 2.0),
    cap: float = DEFAULT_CAP,
    scan_limit: int = 1000,
    N: int = DEFAULT_N,
    *,
    omega_max: float = DEFAULT_OMEGA_MAX,
    threads: int = 1,
) -> ForgeResult:
    """Witnesses, vector and certificate for ``spec``.

    A ``down`` drift is handled on ``-A``: witnesses and vector are built
    there, and the certificate is still issued for ``A`` itself.
    """
    A = DiagonalOperator(spec)
    w = select_witnesses(spec, count, scan_limit, omega_max=omega_max)
    reflected = w.regime == DOWN
    if reflected:
        w = select_witnesses(spec.reflect(), count, scan_limit, omega_max=omega_max)
    if w.regime == BOUNDED:
        f, h = build_bounded_re_vector(w), None
    else:
        f, h = build_unbounded_re_vector(w)
    cert = certify(A, f, t_samples, N, cap, auxiliary=h, threads=threads)
    return ForgeResult(w, cert, reflected)
