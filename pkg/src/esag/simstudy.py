"""Data-generating scenarios M1-M4 and the Monte Carlo rejection-rate driver."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from functools import partial
import io
import json
import logging
import time
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .diagnostics import gof_test
from .errors import EsagError, InvalidParameterError
from .fit import FitOptions
from .param import EsagMoments, OmegaParams, ag_moments, omega_to_moments
from .sampling import SeededRng, mix_samples, sample_angular_cauchy, sample_esag

log = logging.getLogger(__name__)

M1_MU = (2.0, -2.0, 3.0, -3.0)
M1_GAMMA = (2.0, 3.0, 5.0, 8.0, 2.0)

# default alpha grids and sample sizes
DEFAULT_ALPHAS = {"M1": (None,), "M2": (0.05, 0.1, 0.2), "M3": (0.05, 0.1, 5.0, 10.0),
                "M4": (0.1, 0.5, 2.5, 5.0)}
DEFAULT_N = (250, 500, 1000)
FULL_REPS, FULL_B = 300, 200
DESK_REPS, DESK_B = 100, 100

KINDS = ("M1", "M2", "M3", "M4")


@dataclass(frozen=True)
class Scenario:
    kind: str
    n: int
    alpha: float | None = None
    mu: tuple[float, ...] = M1_MU
    gamma: tuple[float, ...] = M1_GAMMA
    cauchy_scale: str = "identity"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown scenario kind {self.kind!r}")
        if self.n < 1:
            raise InvalidParameterError("n must be positive")
        a = self.alpha
        if self.kind == "M2" and (a is None or not 0.0 < a < 1.0):
            raise InvalidParameterError("M2 needs alpha in (0, 1)")
        if self.kind in ("M3", "M4") and (a is None or a <= 0.0 or a == 1.0):
            raise InvalidParameterError(f"{self.kind} needs alpha > 0, alpha != 1")
        if self.cauchy_scale not in ("identity", "V"):
            raise InvalidParameterError("cauchy_scale must be 'identity' or 'V'")

    @property
    def label(self) -> str:
        return self.kind if self.alpha is None else f"{self.kind}(alpha={self.alpha:g})"


def base_moments(s: Scenario) -> EsagMoments:
    return omega_to_moments(OmegaParams(s.mu, s.gamma))


def scenario_moments(s: Scenario) -> EsagMoments:
    """Moments of the Gaussian behind the scenario (AG, not ESAG, for M3/M4)."""
    base = base_moments(s)
    if s.kind in ("M1", "M2"):
        return base
    d = base.d
    lam = base.lam.copy()
    if s.kind == "M3":
        lam[:-1] *= s.alpha ** (1.0 / (d - 1))
    else:
        lam[:-1] *= s.alpha ** (-1.0 / (d - 1))
        lam[-1] = s.alpha
    return ag_moments(base.mu, lam, base.eigvecs)


def make_scenario_sample(s: Scenario, rng: SeededRng) -> np.ndarray:
    m = scenario_moments(s)
    if s.kind != "M2":
        return sample_esag(m, s.n, rng)
    clean = sample_esag(m, s.n, rng.child(0))
    scale = m.V if s.cauchy_scale == "V" else None
    dirty = sample_angular_cauchy(m.mu, s.n, rng.child(1), scale=scale)
    return mix_samples(clean, dirty, s.alpha, rng.child(2))


@dataclass
class StudyReport:
    scenario: Scenario
    levels: tuple[float, ...]
    rates: tuple[float, ...]
    reps: int
    B: int
    drops: int
    p_values: list[float | None] = field(default_factory=list)
    runtime: float = 0.0

    def rate(self, level: float) -> float:
        return self.rates[self.levels.index(level)]

    def rows(self) -> list[dict]:
        return [{"scenario": self.scenario.kind,
                 "alpha": "" if self.scenario.alpha is None else repr(self.scenario.alpha),
                 "n": self.scenario.n, "level": repr(lv), "rate": repr(rt),
                 "reps": self.reps, "drops": self.drops}
                for lv, rt in zip(self.levels, self.rates)]

    def to_dict(self) -> dict:
        return {"scenario": asdict(self.scenario), "levels": list(self.levels),
                "rates": list(self.rates), "reps": self.reps, "B": self.B,
                "drops": self.drops, "p_values": self.p_values}


def _replicate(r: int, s: Scenario, B: int, rng: SeededRng, options: FitOptions):
    stream = rng.child(r)
    data = make_scenario_sample(s, stream.child(0))
    try:
        return gof_test(data, B, stream.child(1), options).p_value
    except EsagError as exc:
        log.warning("%s replicate %d dropped: %s", s.label, r, exc)
        return None


def rejection_study(s: Scenario, reps: int, B: int, levels: Sequence[float], rng: SeededRng,
                    options: FitOptions | None = None, threads: int = 1) -> StudyReport:
    """Fraction of ``reps`` simulated datasets on which the test rejects.

    A replicate rejects at level ``a`` when its estimated p-value is below
    ``a``.  Dropped replicates stay in the denominator as non-rejections.
    """
    if reps < 1 or B < 1:
        raise InvalidParameterError("reps and B must be positive")
    levels = tuple(float(x) for x in levels)
    if not levels:
        raise InvalidParameterError("need at least one nominal level")
    t0 = time.perf_counter()
    opts = options or FitOptions()
    p = pmap(partial(_replicate, s=s, B=B, rng=rng, options=opts), range(reps), threads)
    drops = sum(v is None for v in p)
    rates = tuple(sum(v is not None and v < lv for v in p) / reps for lv in levels)
    return StudyReport(s, levels, rates, reps, B, drops, p, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# config-driven runs

CSV_FIELDS = ("scenario", "alpha", "n", "level", "rate", "reps", "drops")


@dataclass
class StudyConfig:
    scenarios: list[dict]
    reps: int = DESK_REPS
    B: int = DESK_B
    levels: tuple[float, ...] = (0.05,)
    seed: int = 0
    full_scale: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "StudyConfig":
        if not isinstance(raw, dict):
            raise InvalidParameterError("config must be a JSON object")
        unknown = set(raw) - {"scenarios", "reps", "B", "levels", "seed", "full_scale"}
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        scen = raw.get("scenarios")
        if not isinstance(scen, list) or not scen:
            raise InvalidParameterError("config needs a nonempty 'scenarios' list")
        cfg = cls(scen, int(raw.get("reps", DESK_REPS)), int(raw.get("B", DESK_B)),
                  tuple(float(x) for x in raw.get("levels", (0.05,))),
                  int(raw.get("seed", 0)), bool(raw.get("full_scale", False)))
        if cfg.full_scale:
            cfg.reps, cfg.B = FULL_REPS, FULL_B
        cfg.expand()
        return cfg

    def expand(self) -> list[Scenario]:
        out = []
        for entry in self.scenarios:
            if not isinstance(entry, dict) or "kind" not in entry:
                raise InvalidParameterError("each scenario needs a 'kind'")
            kind = entry["kind"]
            alphas = entry.get("alpha", DEFAULT_ALPHAS.get(kind, (None,)))
            if alphas is None or np.isscalar(alphas):
                alphas = [alphas]
            ns = entry.get("n", DEFAULT_N)
            if np.isscalar(ns):
                ns = [ns]
            extra = {k: entry[k] for k in ("mu", "gamma", "cauchy_scale") if k in entry}
            for k in ("mu", "gamma"):
                if k in extra:
                    extra[k] = tuple(float(v) for v in extra[k])
            for n in ns:
                for a in alphas:
                    out.append(Scenario(kind, int(n), None if a is None else float(a), **extra))
        return out


def run_config(cfg: StudyConfig, threads: int = 1) -> list[StudyReport]:
    master = SeededRng(cfg.seed)
    reports = []
    for i, s in enumerate(cfg.expand()):
        rep = rejection_study(s, cfg.reps, cfg.B, cfg.levels, master.child(i), threads=threads)
        log.info("%s n=%d: rates %s (%.1fs)", s.label, s.n, rep.rates, rep.runtime)
        reports.append(rep)
    return reports


def reports_csv(reports: Sequence[StudyReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerows(r.rows())
    return buf.getvalue()


def reports_json(reports: Sequence[StudyReport], cfg: StudyConfig | None = None) -> str:
    body = {"reports": [r.to_dict() for r in reports]}
    if cfg is not None:
        body["config"] = {"reps": cfg.reps, "B": cfg.B, "levels": list(cfg.levels),
                          "seed": cfg.seed}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def table1(reports: Sequence[StudyReport], level: float = 0.05) -> str:
    """Rejection rates as a table: rows n, columns (kind, alpha)."""
    cols = sorted({(r.scenario.kind, r.scenario.alpha) for r in reports},
                  key=lambda c: (c[0], -1.0 if c[1] is None else c[1]))
    ns = sorted({r.scenario.n for r in reports})
    cell = {(r.scenario.n, r.scenario.kind, r.scenario.alpha): r.rate(level) for r in reports}
    head = ["n"] + [k if a is None else f"{k}:{a:g}" for k, a in cols]
    lines = ["\t".join(head)]
    for n in ns:
        row = [str(n)] + [f"{cell[(n, k, a)]:.2f}" if (n, k, a) in cell else "" for k, a in cols]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
