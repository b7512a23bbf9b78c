"""Scenario files, reproducible runs and run comparison.

A scenario is one JSON document::

    {"schema": 1, "name": "...",
     "spectrum": {"kind": "imaginary-exponential", "r": 2},
     "experiment": {"type": "counterexample", "count": 8},
     "output_dir": "runs/imag"}

Unknown keys, duplicate keys and loose types are rejected.  Outputs are
plain text (JSON with two-space indent, CSV, LF newlines) written in a fixed
order, so identical scenarios give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .evolution import DEFAULT_H_LADDER, smoothness_probe, mild_identity_residual
from .forge import DEFAULT_OMEGA_MAX, InsufficientWitnesses, forge_counterexample
from .region import RegionParams, criterion_check, region_boundary_samples, write_region_csv
from .spectral import DEFAULT_CAP, DEFAULT_N, DiagonalOperator, DomainRefused, SpectralVector
from .spectrum import SpectrumFamily, make_family


class ScenarioError(ValueError):
    """A scenario document failed to parse or validate."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid scenario:\n  " + "\n  ".join(problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- spectrum specs ------------------------------------------------------------


class _SpectrumSpec(_Strict):
    reflected: bool = False

    def build(self) -> SpectrumFamily:
        params = self.model_dump(exclude={"kind", "reflected"})
        return make_family(self.kind, self.reflected, **params)

    @model_validator(mode="after")
    def _buildable(self):
        self.build()
        return self


class RealLineSpec(_SpectrumSpec):
    kind: Literal["real-line"]
    alpha: float = 1.0
    beta: float = 0.0


class LogStripSpec(_SpectrumSpec):
    kind: Literal["log-strip"]
    c: float = 1.0
    p: float = 1.0


class ImaginaryExponentialSpec(_SpectrumSpec):
    kind: Literal["imaginary-exponential"]
    r: float = 2.0


class ExpPolySpec(_SpectrumSpec):
    kind: Literal["exp-imaginary-vs-poly-real"]
    q: float = 2.0
    s: float = 1.0
    d: float = 1.0


class FiniteSpec(_SpectrumSpec):
    kind: Literal["finite"]
    points: list[tuple[float, float]] = Field(min_length=1)

    def build(self) -> SpectrumFamily:
        return make_family("finite", self.reflected, points=[complex(a, b) for a, b in self.points])


SpectrumSpec = Annotated[
    Union[RealLineSpec, LogStripSpec, ImaginaryExponentialSpec, ExpPolySpec, FiniteSpec],
    Field(discriminator="kind"),
]


# -- shared pieces ---------------------------------------------------------------


class RegionSpec(_Strict):
    b_minus: float
    b_plus: float

    @model_validator(mode="after")
    def _positive(self):
        RegionParams(self.b_minus, self.b_plus)
        return self

    def build(self) -> RegionParams:
        return RegionParams(self.b_minus, self.b_plus)


class TailSpec(_Strict):
    kind: Literal["zero", "power", "exp", "exp_squares", "coupled_exp"] = "zero"
    params: dict[str, float] = Field(default_factory=dict)
    start: int = Field(1, ge=1)
    path: Optional[dict[str, Any]] = None


class VectorSpec(_Strict):
    entries: list[tuple[int, float, float]] = Field(default_factory=list)
    tail: TailSpec = Field(default_factory=TailSpec)

    @model_validator(mode="after")
    def _valid(self):
        self.build()
        return self

    def build(self) -> SpectralVector:
        return SpectralVector.from_dict(self.model_dump())


def _ladder_ok(v: list[float]) -> list[float]:
    if not v or any(h <= 0 for h in v) or any(b >= a for a, b in zip(v, v[1:])):
        raise ValueError("h_ladder must be strictly decreasing and positive")
    return v


# -- experiments -------------------------------------------------------------------


class CriterionSweep(_Strict):
    type: Literal["criterion_sweep"]
    b_grid: Optional[list[RegionSpec]] = Field(None, min_length=1)
    N: int = Field(1000, ge=1)
    analytic: bool = True


class SmoothnessProbe(_Strict):
    type: Literal["smoothness_probe"]
    vector: VectorSpec
    t_grid: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    max_order: int = Field(4, ge=1, le=8)
    h_ladder: list[float] = Field(default_factory=lambda: list(DEFAULT_H_LADDER))
    N: int = Field(DEFAULT_N, ge=1)

    _ladder = field_validator("h_ladder")(_ladder_ok)


class Counterexample(_Strict):
    type: Literal["counterexample"]
    count: int = Field(8, ge=1)
    t_samples: list[float] = Field(default_factory=lambda: [-2.0, -1.0, 1.0, 2.0])
    cap: float = Field(DEFAULT_CAP, gt=0)
    scan_limit: int = Field(1000, ge=1)
    N: int = Field(DEFAULT_N, ge=1)
    omega_max: float = Field(DEFAULT_OMEGA_MAX, gt=0)

    @field_validator("t_samples")
    @classmethod
    def _both_signs(cls, v):
        if not (any(t < 0 for t in v) and any(t > 0 for t in v)):
            raise ValueError("t_samples must contain both a negative and a positive time")
        return v


class RegionFigure(_Strict):
    type: Literal["region_figure"]
    b: RegionSpec = Field(default_factory=lambda: RegionSpec(b_minus=1.0, b_plus=1.0))
    im_range: tuple[float, float]
    count: int = Field(256, ge=2)

    @field_validator("im_range")
    @classmethod
    def _interval(cls, v):
        if not (math.isfinite(v[0]) and math.isfinite(v[1]) and v[0] < v[1]):
            raise ValueError(f"degenerate interval [{v[0]}, {v[1]}]")
        return v


class MildIdentity(_Strict):
    type: Literal["mild_identity"]
    vector: VectorSpec
    t0: float = 0.0
    t: float = 1.0
    quad_steps: int = Field(64, ge=2)
    N: int = Field(DEFAULT_N, ge=1)

    @field_validator("quad_steps")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("quad_steps must be even")
        return v


Experiment = Annotated[
    Union[CriterionSweep, SmoothnessProbe, Counterexample, RegionFigure, MildIdentity],
    Field(discriminator="type"),
]


class Scenario(_Strict):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    schema_version: Literal[1] = Field(alias="schema")
    name: str = Field(min_length=1)
    spectrum: Optional[SpectrumSpec] = None
    experiment: Experiment
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _needs_spectrum(self):
        if self.spectrum is None and self.experiment.type != "region_figure":
            raise ValueError(f"experiment {self.experiment.type!r} needs a spectrum")
        return self

    def family(self) -> SpectrumFamily:
        return self.spectrum.build()


# -- parsing -----------------------------------------------------------------------


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ValueError(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line of the innermost key in ``loc``."""
    pos, line = 0, None
    for part in loc:
        if not isinstance(part, str):
            continue
        hit = text.find(f'"{part}"', pos)
        if hit < 0:
            break
        pos = hit
        line = text.count("\n", 0, hit) + 1
    return line


def parse_scenario(document: str) -> Scenario:
    """Validate a scenario document; errors name the field and its line."""
    try:
        json.loads(document, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"line {e.lineno}, column {e.colno}: {e.msg}"]) from None
    except ValueError as e:
        raise ScenarioError([str(e)]) from None
    try:
        return Scenario.model_validate_json(document, strict=True)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            loc = tuple(err["loc"])
            where = ".".join(str(p) for p in loc) or "<document>"
            line = _line_of(document, loc)
            prefix = f"line {line}: " if line else ""
            msg = err["msg"].removeprefix("Value error, ")
            problems.append(f"{prefix}{where}: {msg}")
        raise ScenarioError(problems) from None


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def scenario_to_dict(s: Scenario) -> dict:
    return s.model_dump(mode="json", by_alias=True)


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def scenario_digest(s: Scenario) -> str:
    """SHA-256 of the canonical form; ``output_dir`` does not take part."""
    d = scenario_to_dict(s)
    d.pop("output_dir", None)
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


# -- running ----------------------------------------------------------------------


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    name: str
    started: str
    finished: str
    version: str
    digest: str
    outcome: dict
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "started": self.started,
            "finished": self.finished,
            "version": self.version,
            "digest": self.digest,
            "outcome": self.outcome,
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(d["name"], d["started"], d["finished"], d["version"], d["digest"], d["outcome"],
                   dict(d.get("outputs", {})))

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        p = Path(path)
        if p.is_dir():
            p = p / "run.json"
        return cls.from_dict(json.loads(p.read_text()))


def _criterion(s: Scenario, exp: CriterionSweep, out: Path, threads: int) -> tuple[dict, list[str]]:
    spec = s.family()
    grid = None if exp.b_grid is None else [b.build() for b in exp.b_grid]
    verdict = criterion_check(spec, grid, exp.N, analytic=exp.analytic, threads=threads)
    _dump_json({"spectrum": spec.to_dict(), "verdict": verdict.to_dict()}, out / "verdict.json")
    summary = {"outcome": verdict.to_dict()["outcome"]}
    if hasattr(verdict, "region"):
        summary["region"] = verdict.region.to_list()
    return summary, ["verdict.json"]


def _smoothness(s: Scenario, exp: SmoothnessProbe, out: Path, threads: int) -> tuple[dict, list[str]]:
    A = DiagonalOperator(s.family())
    f = exp.vector.build()

    def probe(t: float):
        return smoothness_probe(A, f, t, exp.max_order, exp.h_ladder, exp.N)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(probe, exp.t_grid))
    else:
        reports = [probe(t) for t in exp.t_grid]
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "order", "h", "residual", "verdict"])
        for rep in reports:
            for row in rep.rows():
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    per_t = [
        {"t": rep.t, "inconclusive": rep.inconclusive,
         "orders": [{"k": o.k, "verdict": o.verdict, "slope": o.slope, "certified_refusal": o.certified}
                    for o in rep.orders]}
        for rep in reports
    ]
    _dump_json({"spectrum": A.spectrum.to_dict(), "vector": f.to_dict(), "probes": per_t}, out / "verdict.json")
    verdicts = sorted({o.verdict for rep in reports for o in rep.orders})
    return {"outcome": "SmoothnessProbe", "verdicts": verdicts}, ["report.csv", "verdict.json"]


def _counterexample(s: Scenario, exp: Counterexample, out: Path, threads: int) -> tuple[dict, list[str]]:
    spec = s.family()
    try:
        res = forge_counterexample(spec, exp.count, exp.t_samples, exp.cap, exp.scan_limit, exp.N,
                                   omega_max=exp.omega_max, threads=threads)
    except InsufficientWitnesses as e:
        body = {"conclusion": "InsufficientWitnesses", "found": e.found, "needed": e.needed}
        _dump_json(body, out / "certificate.json")
        return {"outcome": "InsufficientWitnesses", "found": e.found}, ["certificate.json"]
    body = res.certificate.to_dict()
    body["spectrum"] = spec.to_dict()
    body["witnesses"] = res.witnesses.to_dict()
    body["built_on_reflection"] = res.reflected
    _dump_json(body, out / "certificate.json")
    summary = {"outcome": res.certificate.conclusion, "regime": res.witnesses.regime,
               "witness_count": len(res.witnesses)}
    return summary, ["certificate.json"]


def _region(s: Scenario, exp: RegionFigure, out: Path, threads: int) -> tuple[dict, list[str]]:
    samples = region_boundary_samples(exp.b.build(), exp.im_range, exp.count)
    write_region_csv(samples, out / "region.csv")
    return {"outcome": "RegionFigure", "samples": exp.count}, ["region.csv"]


def _mild(s: Scenario, exp: MildIdentity, out: Path, threads: int) -> tuple[dict, list[str]]:
    A = DiagonalOperator(s.family())
    f = exp.vector.build()
    try:
        r = mild_identity_residual(A, f, exp.t0, exp.t, exp.quad_steps, exp.N)
        body = {"outcome": "Residual", "residual": r}
    except DomainRefused as e:
        body = {"outcome": "DomainRefused", "verdict": e.verdict.to_dict()}
    _dump_json({**body, "t0": exp.t0, "t": exp.t, "quad_steps": exp.quad_steps}, out / "verdict.json")
    return {k: v for k, v in body.items() if k != "verdict"}, ["verdict.json"]


_DISPATCH = {
    "criterion_sweep": _criterion,
    "smoothness_probe": _smoothness,
    "counterexample": _counterexample,
    "region_figure": _region,
    "mild_identity": _mild,
}


def run(scenario: Scenario, out_dir: str | Path | None = None, threads: int = 1) -> RunRecord:
    """Execute the scenario, write its outputs and ``run.json``; return the record."""
    out = Path(out_dir or scenario.output_dir or f"runs/{scenario.name}")
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    summary, files = _DISPATCH[scenario.experiment.type](scenario, scenario.experiment, out, max(1, threads))
    record = RunRecord(
        name=scenario.name,
        started=started,
        finished=_now(),
        version=__version__,
        digest=scenario_digest(scenario),
        outcome=_json_safe(summary),
        outputs={name: _sha256(out / name) for name in files},
    )
    _dump_json(record.to_dict(), out / "run.json")
    return record


class DigestMismatch(ValueError):
    pass


def compare_runs(a: RunRecord, b: RunRecord) -> list[str]:
    """Differences between two runs of one scenario; timestamps are ignored."""
    if a.digest != b.digest:
        raise DigestMismatch(f"runs come from different scenarios ({a.digest[:12]} vs {b.digest[:12]})")
    diff = []
    if a.version != b.version:
        diff.append(f"version: {a.version} -> {b.version}")
    for key in sorted(a.outcome.keys() | b.outcome.keys()):
        if a.outcome.get(key) != b.outcome.get(key):
            diff.append(f"outcome.{key}: {a.outcome.get(key)!r} -> {b.outcome.get(key)!r}")
    for name in sorted(a.outputs.keys() | b.outputs.keys()):
        if a.outputs.get(name) != b.outputs.get(name):
            diff.append(f"output {name}: {a.outputs.get(name)} -> {b.outputs.get(name)}")
    return diff
