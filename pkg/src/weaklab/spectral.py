"""Diagonal model of a normal operator: spectral measure, Borel calculus, domains.

A normal operator with an orthonormal eigenbasis acts on coefficient vectors
``f = sum f_k e_k`` by ``A e_k = lambda_k e_k``.  In this model

* the spectral projection ``E(delta)`` keeps the coefficients with
  ``lambda_k`` in ``delta`` and zeroes the rest;
* ``F(A)`` multiplies coefficient ``k`` by ``F(lambda_k)``;
* ``f`` lies in ``D(F(A))`` iff ``sum_k |F(lambda_k) f_k|^2 < inf``.

Vectors have a finite explicit part plus an analytic *tail*: a coefficient
law applied either to every index from ``tail_start`` on, or to the
positions of a :class:`WitnessPath` (a subsequence of eigenbasis indices
with known growth guarantees).  Domain tests sum the explicit part and the
tail up to a truncation level exactly, then decide the rest from closed-form
log-form majorants/minorants (see :mod:`weaklab.series`).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .region import ComplexPoint
from .series import Envelope, LogForm, running_sums
from .spectrum import SpectrumFamily

DEFAULT_N = 10_000
DEFAULT_CAP = 1e6

TAIL_KINDS = ("zero", "power", "exp", "exp_squares", "coupled_exp")
_PARAM_NAMES = {"zero": None, "power": "p", "exp": "alpha", "exp_squares": "alpha", "coupled_exp": "c"}
REGIMES = ("bounded", "up")


def _num(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _unnum(x) -> float:
    return float(x)


@dataclass(frozen=True)
class DiagonalOperator:
    """``A e_n = lambda_n e_n`` for the eigenvalues of ``spectrum``."""

    spectrum: SpectrumFamily

    def eigenvalues(self, idx) -> np.ndarray:
        return self.spectrum.eigenvalues(np.asarray(idx, dtype=int))

    @property
    def index_limit(self) -> int:
        lim = self.spectrum.max_index
        return lim if self.spectrum.size is None else min(lim, self.spectrum.size)


# -- Borel symbols -----------------------------------------------------------

_Forms = tuple[Union[LogForm, None], Union[LogForm, None]]


def _scaled(form: LogForm | None, s: float) -> LogForm | None:
    return None if form is None else form.scale(s)


def _add(a: LogForm | None, b: LogForm | None) -> LogForm | None:
    return None if a is None or b is None else a + b


def _exp_forms(t: float, env: Envelope) -> _Forms:
    if t == 0:
        return LogForm(), LogForm()
    hi, lo = (env.re_upper, env.re_lower) if t > 0 else (env.re_lower, env.re_upper)
    return _scaled(hi, t), _scaled(lo, t)


def _pow_forms(n: int, env: Envelope) -> _Forms:
    if n == 0:
        return LogForm(), LogForm()
    return _scaled(env.log_mod_upper, n), _scaled(env.log_mod_lower, n)


def _log_abs_lambda(lam: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(lam))


@dataclass(frozen=True)
class Power:
    """``F(lambda) = lambda^n``; ``Power(0)`` is the identity."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("Power needs a nonnegative integer exponent")
        object.__setattr__(self, "n", int(self.n))

    def values(self, lam):
        return np.ones_like(lam) if self.n == 0 else lam**self.n

    def log_values(self, lam):
        if self.n == 0:
            return np.zeros_like(lam)
        with np.errstate(divide="ignore"):
            return self.n * np.log(lam)

    def log_abs(self, lam):
        return np.zeros(lam.shape) if self.n == 0 else self.n * _log_abs_lambda(lam)

    def forms(self, env: Envelope) -> _Forms:
        return _pow_forms(self.n, env)


@dataclass(frozen=True)
class Exp:
    """``F(lambda) = exp(t lambda)``."""

    t: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError("Exp needs a finite t")
        object.__setattr__(self, "t", float(self.t))

    def values(self, lam):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.t * lam)

    def log_values(self, lam):
        return self.t * lam

    def log_abs(self, lam):
        return self.t * lam.real

    def forms(self, env: Envelope) -> _Forms:
        return _exp_forms(self.t, env)


@dataclass(frozen=True)
class AbsPowExp:
    """``F(lambda) = |lambda|^m exp(t Re lambda)``; its domain is that of ``A^m e^{tA}``."""

    m: int
    t: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0 or not math.isfinite(self.t):
            raise ValueError("AbsPowExp needs integer m >= 0 and finite t")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "t", float(self.t))

    def values(self, lam):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_abs(lam)).astype(complex)

    def log_values(self, lam):
        return self.log_abs(lam).astype(complex)

    def log_abs(self, lam):
        out = self.t * lam.real
        return out if self.m == 0 else out + self.m * _log_abs_lambda(lam)

    def forms(self, env: Envelope) -> _Forms:
        pu, pl = _pow_forms(self.m, env)
        eu, el = _exp_forms(self.t, env)
        return _add(pu, eu), _add(pl, el)


@dataclass(frozen=True)
class Indicator:
    """``F = 1_delta`` for a predicate ``delta`` over :class:`ComplexPoint`."""

    predicate: Callable[[ComplexPoint], bool]
    name: str = "delta"

    def mask(self, lam) -> np.ndarray:
        return np.array([bool(self.predicate(ComplexPoint.of(complex(z)))) for z in lam], dtype=bool)

    def values(self, lam):
        return self.mask(lam).astype(float)

    def log_values(self, lam):
        return np.where(self.mask(lam), 0.0, -np.inf).astype(complex)

    def log_abs(self, lam):
        return np.where(self.mask(lam), 0.0, -np.inf)

    def forms(self, env: Envelope) -> _Forms:
        return LogForm(), None


BorelSymbol = Union[Power, Exp, AbsPowExp, Indicator]


# -- predicates for spectral projections --------------------------------------

def everything(_: ComplexPoint) -> bool:
    return True


def nothing(_: ComplexPoint) -> bool:
    return False


def disk(alpha: float) -> Callable[[ComplexPoint], bool]:
    """The closed disk ``{|lambda| <= alpha}``."""
    return lambda z: abs(z) <= alpha


def singleton(point: ComplexPoint | complex) -> Callable[[ComplexPoint], bool]:
    w = complex(point)
    return lambda z: complex(z) == w


def intersect(*preds: Callable[[ComplexPoint], bool]) -> Callable[[ComplexPoint], bool]:
    return lambda z: all(p(z) for p in preds)


# -- vectors -----------------------------------------------------------------


@dataclass(frozen=True)
class WitnessPath:
    """Eigenbasis indices ``n(1), n(2), ...`` carrying a tail, with growth guarantees.

    ``points`` are the eigenvalues the path was selected from; ``ordinals``
    the selection ordinals (each ``>= position``).  Regime ``bounded``
    guarantees ``|Re mu_p| <= omega`` and ``|mu_p| > p^4``; regime ``up``
    guarantees ``Re mu_p >= p`` and ``ln|Im mu_p| > 2 ordinal_p Re mu_p``.
    The guarantees are checked on the stored points and assumed for the
    continuation past them when ``continues`` is true.
    """

    indices: tuple[int, ...]
    ordinals: tuple[int, ...]
    points: tuple[complex, ...]
    regime: str
    omega: float = 0.0
    continues: bool = True

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "ordinals", tuple(int(i) for i in self.ordinals))
        object.__setattr__(self, "points", tuple(complex(z) for z in self.points))
        n = len(self.indices)
        if n == 0 or len(self.ordinals) != n or len(self.points) != n:
            raise ValueError("path needs equally long, nonempty indices/ordinals/points")
        if len(set(self.indices)) != n:
            raise ValueError("path indices must be distinct")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        for p, (o, z) in enumerate(zip(self.ordinals, self.points), start=1):
            if o < p:
                raise ValueError(f"ordinal {o} below position {p}")
            if self.regime == "bounded":
                if abs(z.real) > self.omega or abs(z) <= p**4:
                    raise ValueError(f"bounded-regime guarantee fails at position {p}")
            elif not (z.real >= p and math.log(abs(z.imag)) > 2 * o * z.real):
                raise ValueError(f"up-regime guarantee fails at position {p}")

    def envelope(self) -> Envelope:
        if self.regime == "bounded":
            w = float(self.omega)
            return Envelope(re_upper=LogForm(w), re_lower=LogForm(-w), log_mod_lower=LogForm(0.0, 4.0))
        return Envelope(re_lower=LogForm(0.0, 0.0, ((1.0, 1.0),)), log_mod_lower=LogForm(0.0, 0.0, ((2.0, 2.0),)))

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "ordinals": list(self.ordinals),
            "points": [[z.real, z.imag] for z in self.points],
            "regime": self.regime,
            "omega": self.omega,
            "continues": self.continues,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "WitnessPath":
        return cls(
            indices=tuple(d["indices"]),
            ordinals=tuple(d["ordinals"]),
            points=tuple(complex(re, im) for re, im in d["points"]),
            regime=d["regime"],
            omega=float(d.get("omega", 0.0)),
            continues=bool(d.get("continues", True)),
        )


@dataclass(frozen=True)
class TailModel:
    """Coefficient law beyond the explicit part.

    ========================  =================================================
    ``zero``                  no tail
    ``power`` (p > 1)         ``|f| = k^-p``
    ``exp`` (alpha > 0)       ``|f| = exp(-alpha k)``
    ``exp_squares``           ``|f| = exp(-alpha k^2)``
    ``coupled_exp`` (c > 0)   ``|f| = exp(-c n(k) Re mu_k)`` on an ``up`` path
    ========================  =================================================

    ``k`` is the eigenbasis index, or the position when a ``path`` is given.
    Tail coefficients are real and positive.
    """

    kind: str = "zero"
    param: float = 0.0
    path: WitnessPath | None = None

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise ValueError(f"tail kind must be one of {TAIL_KINDS}")
        object.__setattr__(self, "param", float(self.param))
        k, a = self.kind, self.param
        if k == "zero":
            if self.path is not None:
                raise ValueError("a zero tail takes no path")
        elif k == "power" and not a > 1:
            raise ValueError("power tail needs p > 1")
        elif k in ("exp", "exp_squares", "coupled_exp") and not (a > 0 and math.isfinite(a)):
            raise ValueError(f"{k} tail needs a positive parameter")
        if k == "coupled_exp" and (self.path is None or self.path.regime != "up"):
            raise ValueError("coupled_exp tail lives on an 'up' witness path")

    def law_form(self) -> LogForm | None:
        """``ln|f_k|`` as a log form in ``k`` (``None`` for the coupled law)."""
        a = self.param
        if self.kind == "power":
            return LogForm(0.0, -a)
        if self.kind == "exp":
            return LogForm(0.0, 0.0, ((1.0, -a),))
        if self.kind == "exp_squares":
            return LogForm(0.0, 0.0, ((2.0, -a),))
        return None

    def log_coefficients(self, positions: np.ndarray) -> np.ndarray:
        if self.kind == "coupled_exp":
            i = positions.astype(int) - 1
            ords = np.array(self.path.ordinals, dtype=float)[i]
            re = np.array([z.real for z in self.path.points])[i]
            return -self.param * ords * re
        return self.law_form()(positions)

    def coefficients(self, positions: np.ndarray) -> np.ndarray:
        """``|f|`` at tail positions, evaluated directly (may underflow to 0)."""
        k = positions.astype(float)
        a = self.param
        with np.errstate(under="ignore"):
            if self.kind == "power":
                return k**-a
            if self.kind == "exp":
                return np.exp(-a * k)
            if self.kind == "exp_squares":
                return np.exp(-a * k * k)
            return np.exp(self.log_coefficients(positions))

    def params(self) -> dict:
        name = _PARAM_NAMES[self.kind]
        return {} if name is None else {name: self.param}


def _coerce_entries(entries) -> tuple[tuple[int, complex], ...]:
    items = entries.items() if isinstance(entries, Mapping) else entries
    out: dict[int, complex] = {}
    for i, c in items:
        i = int(i)
        if i < 1:
            raise ValueError(f"eigenbasis indices start at 1, got {i}")
        if i in out:
            raise ValueError(f"duplicate index {i}")
        c = complex(c)
        if not cmath.isfinite(c):
            raise ValueError(f"non-finite coefficient at index {i}")
        out[i] = c
    return tuple(sorted((i, c) for i, c in out.items() if c != 0))


@dataclass(frozen=True)
class SpectralVector:
    """Coefficients in the eigenbasis: explicit entries plus a tail from ``tail_start``."""

    entries: tuple[tuple[int, complex], ...] = ()
    tail: TailModel = field(default_factory=TailModel)
    tail_start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "entries", _coerce_entries(self.entries))
        if int(self.tail_start) != self.tail_start or self.tail_start < 1:
            raise ValueError("tail_start must be a positive integer")
        object.__setattr__(self, "tail_start", int(self.tail_start))
        if self.tail.kind == "zero":
            return
        path = self.tail.path
        if path is None:
            if any(i >= self.tail_start for i, _ in self.entries):
                raise ValueError("explicit entries overlap the tail range")
        else:
            if self.tail_start > len(path.indices) + 1 and not path.continues:
                raise ValueError("tail starts past the end of a finite path")
            if set(path.indices[self.tail_start - 1 :]) & set(self.coefficients):
                raise ValueError("explicit entries overlap the tail's path indices")

    @classmethod
    def basis(cls, n: int, coef: complex = 1.0) -> "SpectralVector":
        return cls(((n, coef),))

    @classmethod
    def from_coefficients(cls, coefs: Mapping[int, complex]) -> "SpectralVector":
        return cls(tuple(coefs.items()))

    @property
    def coefficients(self) -> dict[int, complex]:
        return dict(self.entries)

    @property
    def has_tail(self) -> bool:
        return self.tail.kind != "zero"

    def to_dict(self) -> dict:
        return {
            "entries": [[i, c.real, c.imag] for i, c in self.entries],
            "tail": {
                "kind": self.tail.kind,
                "params": self.tail.params(),
                "start": self.tail_start,
                "path": None if self.tail.path is None else self.tail.path.to_dict(),
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SpectralVector":
        tail = d.get("tail") or {"kind": "zero"}
        params = dict(tail.get("params") or {})
        kind = tail.get("kind", "zero")
        name = _PARAM_NAMES.get(kind)
        if kind not in TAIL_KINDS:
            raise ValueError(f"tail kind must be one of {TAIL_KINDS}")
        expected = set() if name is None else {name}
        if set(params) != expected:
            raise ValueError(f"tail {kind!r} takes params {sorted(expected)}, got {sorted(params)}")
        path = tail.get("path")
        model = TailModel(kind, params.get(name, 0.0) if name else 0.0,
                          None if path is None else WitnessPath.from_dict(path))
        entries = [(int(i), complex(re, im)) for i, re, im in d.get("entries", [])]
        return cls(tuple(entries), model, int(tail.get("start", 1)))


# -- domain verdicts -----------------------------------------------------------


@dataclass(frozen=True)
class InDomain:
    sum_bound: float
    partial_sum: float
    tail_bound: float
    N: int

    def to_dict(self) -> dict:
        return {"outcome": "InDomain", "sum_bound": _num(self.sum_bound), "partial_sum": _num(self.partial_sum),
                "tail_bound": _num(self.tail_bound), "N": self.N}


@dataclass(frozen=True)
class NotInDomain:
    """Divergence established by a closed-form minorant or by crossing ``cap``."""

    witness: tuple[tuple[int, float], ...]
    basis: str
    cap: float

    def __post_init__(self):
        sums = [s for _, s in self.witness]
        if any(b <= a for a, b in zip(sums, sums[1:])):
            raise ValueError("witness partial sums must increase strictly")

    @property
    def exceeds_cap(self) -> bool:
        return bool(self.witness) and self.witness[-1][1] > self.cap

    @property
    def crossing(self) -> int | None:
        """Position at which the partial sums first exceed ``cap``."""
        return self.witness[-1][0] if self.exceeds_cap else None

    def to_dict(self) -> dict:
        return {"outcome": "NotInDomain", "basis": self.basis, "cap": _num(self.cap),
                "witness": [[k, _num(s)] for k, s in self.witness]}


@dataclass(frozen=True)
class Inconclusive:
    N: int
    partial_sum: float
    note: str

    def to_dict(self) -> dict:
        return {"outcome": "Inconclusive", "N": self.N, "partial_sum": _num(self.partial_sum), "note": self.note}


DomainVerdict = Union[InDomain, NotInDomain, Inconclusive]


class DomainRefused(ValueError):
    """A symbol was applied to a vector outside its domain."""

    def __init__(self, symbol, verdict: DomainVerdict):
        self.symbol = symbol
        self.verdict = verdict
        super().__init__(f"{symbol!r}: vector not certified in domain ({type(verdict).__name__})")


# -- materialisation -----------------------------------------------------------


@dataclass
class _Window:
    """Explicit entries plus tail positions up to the truncation level."""

    idx: np.ndarray          # eigenbasis indices
    pos: np.ndarray          # positions, the summation order
    coef: np.ndarray         # coefficients; tail rows hold the law's value (0 on underflow)
    logf: np.ndarray         # ln|f| of tail rows; 0 for explicit rows
    n_explicit: int
    last: int                # last materialised tail position (tail_start - 1 if none)
    has_rest: bool           # unmaterialised tail terms exist
    infinite: bool           # the tail has infinitely many terms


def _window(f: SpectralVector, N: int, limit: int | None = None) -> _Window:
    path = f.tail.path
    ex_idx = np.array([i for i, _ in f.entries], dtype=int)
    ex_coef = np.array([c for _, c in f.entries], dtype=complex)
    if path is not None:
        where = {n: p for p, n in enumerate(path.indices, start=1)}
        ex_pos = np.array([where.get(int(i), int(i)) for i in ex_idx], dtype=float)
    else:
        ex_pos = ex_idx.astype(float)

    start = f.tail_start
    if not f.has_tail:
        last, has_rest, infinite = start - 1, False, False
        t_pos = np.zeros(0)
        t_idx = np.zeros(0, dtype=int)
    elif path is None:
        end = N if limit is None else min(N, limit)
        last = max(end, start - 1)
        t_pos = np.arange(start, last + 1, dtype=float)
        t_idx = t_pos.astype(int)
        infinite = limit is None or limit >= 2**62
        has_rest = infinite or last < limit
    else:
        L = len(path.indices)
        last = max(min(N, L), start - 1)
        t_pos = np.arange(start, last + 1, dtype=float)
        t_idx = np.array([path.indices[int(p) - 1] for p in t_pos], dtype=int)
        infinite = path.continues
        has_rest = infinite or last < L
    t_logf = f.tail.log_coefficients(t_pos) if t_pos.size else np.zeros(0)
    t_val = f.tail.coefficients(t_pos) if t_pos.size else np.zeros(0)
    return _Window(
        idx=np.concatenate([ex_idx, t_idx]),
        pos=np.concatenate([ex_pos, t_pos]),
        coef=np.concatenate([ex_coef, t_val.astype(complex)]),
        logf=np.concatenate([np.zeros(ex_idx.size), t_logf]),
        n_explicit=ex_idx.size,
        last=last,
        has_rest=has_rest,
        infinite=infinite,
    )


def _orientation(A: DiagonalOperator, path: WitnessPath) -> int:
    """+1 if ``A`` has the path's eigenvalues, -1 if it has their negatives."""
    z = complex(A.eigenvalues([path.indices[0]])[0])
    w = path.points[0]
    if np.isclose(z, w, rtol=1e-12, atol=0.0):
        return 1
    if np.isclose(z, -w, rtol=1e-12, atol=0.0):
        return -1
    raise ValueError("the vector's witness path was built for a different operator")


def _coupled_forms(F: BorelSymbol, c: float, sigma: int) -> tuple[LogForm | None, LogForm | None, int]:
    """Forms for ``2 ln|F(lambda) f|`` on an ``up`` path with ``|f| = exp(-c n Re mu)``.

    Uses ``Re mu_p >= p``, ``n_p >= p`` and ``ln|mu_p| > 2 n_p Re mu_p``;
    ``lambda = sigma * mu``.
    """
    if isinstance(F, Indicator):
        return LogForm(0.0, 0.0, ((2.0, -2 * c),)), None, 1
    if isinstance(F, Power):
        m, t = F.n, 0.0
    elif isinstance(F, Exp):
        m, t = 0, F.t
    else:
        m, t = F.m, F.t
    t = sigma * t
    upper, k_min = None, 1
    if m == 0:
        # (t - c n) Re mu <= (t - c p) p once c p > t
        upper = LogForm(0.0, 0.0, ((2.0, -2 * c), (1.0, 2 * t)))
        k_min = math.floor(t / c) + 1 if t > 0 else 1
    lower = None
    if 2 * m > c:
        lower = LogForm(0.0, 0.0, ((2.0, 2 * (2 * m - c)), (1.0, 2 * t)))
    return upper, lower, k_min


def _continuation_forms(F: BorelSymbol, A: DiagonalOperator, f: SpectralVector, sigma: int):
    """Upper/lower log forms of ``|F(lambda_p) f_p|^2`` past the window, and their start."""
    tail = f.tail
    if tail.kind == "coupled_exp":
        return _coupled_forms(F, tail.param, sigma)
    if tail.path is not None:
        env = tail.path.envelope()
        if sigma < 0:
            env = env.reflected()
    else:
        env = A.spectrum.envelope()
    if env is None:
        return None, None, 1
    law = tail.law_form()
    fu, fl = F.forms(env)
    upper = _scaled(_add(fu, law), 2.0)
    lower = _scaled(_add(fl, law), 2.0)
    return upper, lower, env.k_min


def _trail(pos: np.ndarray, sums: np.ndarray, cap: float) -> tuple[tuple[int, float], ...]:
    if sums.size == 0:
        return ()
    over = np.nonzero(sums > cap)[0]
    stop = int(over[0]) if over.size else sums.size - 1
    marks = []
    k = 1
    while k - 1 < stop:
        marks.append(k - 1)
        k *= 2
    marks.append(stop)
    out: list[tuple[int, float]] = []
    for i in marks:
        s = float(sums[i])
        if not out or s > out[-1][1]:
            out.append((int(pos[i]), s))
    return tuple(out)


@dataclass
class _Evaluation:
    verdict: DomainVerdict
    window: _Window
    lam: np.ndarray


def _evaluate(F: BorelSymbol, A: DiagonalOperator, f: SpectralVector, N: int, cap: float) -> _Evaluation:
    if N < 1:
        raise ValueError("N must be >= 1")
    path = f.tail.path
    sigma = _orientation(A, path) if path is not None else 1
    upper = lower = None
    k_min = 1
    if f.has_tail:
        upper, lower, k_min = _continuation_forms(F, A, f, sigma)
    N_eff = N
    if path is None and f.has_tail and k_min > N + 1:
        # finish the numeric sum where the envelope starts to hold
        N_eff = k_min - 1
    w = _window(f, N_eff, A.index_limit)
    if w.idx.size and (w.idx.max() > A.index_limit):
        raise ValueError(f"index {int(w.idx.max())} exceeds the operator's representable range")
    lam = A.eigenvalues(w.idx) if w.idx.size else np.zeros(0, dtype=complex)

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ne = w.n_explicit
        log_coef = np.concatenate([np.log(np.abs(w.coef[:ne])), w.logf[ne:]])
        logterm = 2.0 * (F.log_abs(lam) + log_coef)
        logterm = np.where(np.isnan(logterm), -np.inf, logterm)
        order = np.argsort(w.pos, kind="stable")
        terms = np.exp(logterm[order])
    sums = running_sums(terms)
    S = float(sums[-1]) if sums.size else 0.0

    if not w.has_rest:
        if math.isfinite(S):
            return _Evaluation(InDomain(S * (1 + 1e-12), S, 0.0, N), w, lam)
        return _Evaluation(Inconclusive(N, S, "finite sum overflows double precision"), w, lam)

    if upper is not None and w.last + 1 >= k_min and math.isfinite(S):
        tb = upper.tail_bound(w.last)
        if tb is not None and math.isfinite(tb):
            return _Evaluation(InDomain(S * (1 + 1e-12) + tb, S, tb, N), w, lam)
    if lower is not None and w.infinite and not lower.summable():
        return _Evaluation(NotInDomain(_trail(w.pos[order], sums, cap), "minorant", cap), w, lam)
    if S > cap:
        return _Evaluation(NotInDomain(_trail(w.pos[order], sums, cap), "cap", cap), w, lam)
    note = "no closed-form majorant or minorant for this tail and symbol"
    return _Evaluation(Inconclusive(N, S, note), w, lam)


def domain_test(
    F: BorelSymbol, A: DiagonalOperator, f: SpectralVector, N: int = DEFAULT_N, cap: float = DEFAULT_CAP
) -> DomainVerdict:
    """Decide ``f in D(F(A))`` via ``sum_k |F(lambda_k) f_k|^2``.

    Explicit entries and tail positions up to ``N`` are summed exactly (with
    compensated summation).  The remainder is decided by a closed-form
    majorant (``InDomain``) or divergent minorant (``NotInDomain``); failing
    both, partial sums above ``cap`` give ``NotInDomain`` and anything else
    is ``Inconclusive``.
    """
    return _evaluate(F, A, f, N, cap).verdict


def _materialize(F: BorelSymbol, ev: _Evaluation) -> SpectralVector:
    w, lam = ev.window, ev.lam
    ne = w.n_explicit
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        values = F.values(lam) * w.coef
        logc = np.concatenate([np.log(w.coef[:ne]), w.logf[ne:].astype(complex)])
        # overflowing factors or underflowed tail values: go through logs
        bad = ~np.isfinite(values) | ((w.coef == 0) & (np.arange(values.size) >= ne))
        if bad.any():
            values[bad] = np.exp(F.log_values(lam[bad]) + logc[bad])
    values = np.where(np.isfinite(values), values, 0)
    return SpectralVector(tuple(zip(w.idx.tolist(), values.tolist())))


def apply_symbol(
    F: BorelSymbol, A: DiagonalOperator, f: SpectralVector, N: int = DEFAULT_N
) -> tuple[SpectralVector, float]:
    """``g = F(A) f`` over the truncation window, with an l2 bound on what was dropped.

    The result has a zero tail.  ``Power(0)`` returns ``f`` itself.
    Raises :class:`DomainRefused` unless ``f`` is certified in ``D(F(A))``.
    """
    if isinstance(F, Power) and F.n == 0:
        return f, 0.0
    ev = _evaluate(F, A, f, N, DEFAULT_CAP)
    if not isinstance(ev.verdict, InDomain):
        raise DomainRefused(F, ev.verdict)
    return _materialize(F, ev), math.sqrt(ev.verdict.tail_bound)


def spectral_projection(
    A: DiagonalOperator, delta: Callable[[ComplexPoint], bool], f: SpectralVector, N: int = DEFAULT_N
) -> tuple[SpectralVector, float]:
    """``E(delta) f``: coefficients with ``lambda_k`` outside ``delta`` are dropped.

    Tails are materialised up to ``N``; the returned bound covers the rest.
    """
    return apply_symbol(Indicator(delta), A, f, N)


def tail_norm_bound(f: SpectralVector, N: int = DEFAULT_N) -> float:
    """Bound on the l2 norm of the tail positions past ``N`` (no operator needed)."""
    w = _window(f, N)
    if not w.has_rest:
        return 0.0
    if f.tail.kind == "coupled_exp":
        form = LogForm(0.0, 0.0, ((2.0, -2 * f.tail.param),))
    else:
        form = f.tail.law_form().scale(2.0)
    tb = form.tail_bound(w.last)
    return math.inf if tb is None else math.sqrt(tb)


def materialize(f: SpectralVector, N: int = DEFAULT_N) -> dict[int, complex]:
    """Coefficients of ``f`` over the truncation window, keyed by eigenbasis index."""
    w = _window(f, N)
    vals = w.coef
    return {int(i): complex(v) for i, v in zip(w.idx, vals) if v != 0}


def norm(f: SpectralVector, N: int = DEFAULT_N) -> float:
    """l2 norm of the materialised window of ``f``."""
    return math.sqrt(math.fsum(abs(c) ** 2 for c in materialize(f, N).values()))


def pairing(f: SpectralVector, g: SpectralVector, N: int = DEFAULT_N) -> tuple[complex, float]:
    """``<f, g> = sum f_k conj(g_k)`` over the window, with a Cauchy-Schwarz tail bound."""
    fc, gc = materialize(f, N), materialize(g, N)
    prods = [fc[k] * gc[k].conjugate() for k in fc.keys() & gc.keys()]
    value = complex(math.fsum(p.real for p in prods), math.fsum(p.imag for p in prods))
    nf = math.sqrt(math.fsum(abs(c) ** 2 for c in fc.values()))
    ng = math.sqrt(math.fsum(abs(c) ** 2 for c in gc.values()))
    ef, eg = tail_norm_bound(f, N), tail_norm_bound(g, N)
    err = 0.0
    if ef:
        err += ef * ng
    if eg:
        err += nf * eg
    if ef and eg:
        err += ef * eg
    return value, err
