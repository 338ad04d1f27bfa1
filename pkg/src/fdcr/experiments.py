"""Monte Carlo sweeps over DL SINR target or CSI error, with CSV output.

Seeding: trial ``t`` of a scenario with master seed ``s`` draws its geometry
from ``SeedSequence(s, spawn_key=(t, 0))`` and its small-scale fading for
``N_T`` antennas from ``SeedSequence(s, spawn_key=(t, 1, N_T))``. Geometry is
therefore shared across antenna counts and every sweep point reuses the same
realization, so all comparisons are paired. Because the estimation errors are
drawn as unit-ball samples and scaled by ``kappa`` afterwards, the
uncertainty balls are nested across ``kappa2`` points of a trial.
"""

import hashlib
import io
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import stats

from .channel import SystemConfig, db_to_lin, draw_geometry, draw_realization, watt_to_dbm
from .oracle import AUDIT_TOL
from .recovery import RANK_TOL, VIOLATION_TOL
from .schemes import SCHEMES, STATUSES, run_scheme
from .solver import SolverSettings

__all__ = [
    "AXES",
    "CSV_COLUMNS",
    "Scenario",
    "TrialRecord",
    "Row",
    "ScenarioResult",
    "fig2_scenario",
    "fig3_scenario",
    "config_for",
    "trial_rngs",
    "run_trial",
    "run_scenario",
    "version_string",
]

AXES = ("dl-sinr-db", "kappa2")
CSV_COLUMNS = ("scheme", "axis_name", "axis_value", "nt", "trials", "feasible",
               "mean_leakage_dbm", "ci95_dbm", "mean_solve_ms")
AVERAGING = ("watts", "dbm")
NA = "NA"


@dataclass(frozen=True)
class Scenario:
    """One sweep: the axis, its points and everything held fixed.

    ``dl_sinr_db`` is ignored when the axis is ``dl-sinr-db`` and ``kappa2``
    when the axis is ``kappa2``. ``base`` carries every other system constant.
    """

    name: str = "custom"
    axis: str = "dl-sinr-db"
    values: tuple = (4.0, 6.0, 8.0, 10.0)
    nt: tuple = (6, 7, 9)
    dl_sinr_db: float = 10.0
    ul_sinr_db: float = 6.0
    kappa2: float = 0.05
    trials: int = 50
    seed: int = 0
    schemes: tuple = SCHEMES
    average: str = "watts"
    base: SystemConfig = field(default_factory=SystemConfig)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "nt", tuple(int(n) for n in self.nt))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        self.validate()

    def validate(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        if not self.values:
            raise ValueError("need at least one axis value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("axis values must be strictly increasing")
        if not self.nt or len(set(self.nt)) != len(self.nt):
            raise ValueError("nt must be a non-empty list without repeats")
        if not self.schemes or len(set(self.schemes)) != len(self.schemes):
            raise ValueError("schemes must be a non-empty list without repeats")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown schemes {bad}; choose from {SCHEMES}")
        if self.average not in AVERAGING:
            raise ValueError(f"average must be one of {AVERAGING}")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")
        for n in self.nt:
            for x in self.values:
                config_for(self, n, x)  # raises on out-of-range parameters

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "base"}
        out["values"] = list(self.values)
        out["nt"] = list(self.nt)
        out["schemes"] = list(self.schemes)
        out["base"] = _jsonable(self.base.to_dict())
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def fig2_scenario(**changes):
    """Leakage versus the DL SINR target for several antenna counts."""
    sc = Scenario(name="fig2", axis="dl-sinr-db", values=(4.0, 6.0, 8.0, 10.0),
                  nt=(6, 7, 9), ul_sinr_db=6.0, kappa2=0.05)
    return replace(sc, **changes) if changes else sc


def fig3_scenario(**changes):
    """Leakage versus the normalised CSI error at ``N_T = 9``."""
    sc = Scenario(name="fig3", axis="kappa2", values=(0.01, 0.02, 0.05, 0.10),
                  nt=(9,), dl_sinr_db=10.0, ul_sinr_db=5.0)
    return replace(sc, **changes) if changes else sc


def config_for(scenario, nt, x):
    """The :class:`SystemConfig` of one sweep point."""
    dl_db = x if scenario.axis == "dl-sinr-db" else scenario.dl_sinr_db
    kappa2 = x if scenario.axis == "kappa2" else scenario.kappa2
    return scenario.base.with_(
        N_T=int(nt),
        gamma_DL=float(db_to_lin(dl_db)),
        gamma_UL=float(db_to_lin(scenario.ul_sinr_db)),
        kappa2=float(kappa2),
    )


def trial_rngs(seed, trial, nt):
    """``(geometry_rng, fading_rng)`` for one trial and antenna count."""
    geo = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial), 0)))
    fad = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial), 1, int(nt))))
    return geo, fad


def draw_trial(cfg, seed, trial):
    geo_rng, fad_rng = trial_rngs(seed, trial, cfg.N_T)
    geo = draw_geometry(cfg, geo_rng)
    return draw_realization(cfg, geo, fad_rng)


@dataclass(frozen=True)
class TrialRecord:
    scheme: str
    nt: int
    axis_value: float
    trial: int
    status: str
    leakage: float  # watts, nan unless status == "ok"
    solve_time: float  # seconds
    audit_violation: float = float("nan")  # largest scaled audit violation
    worst_leakage: float = float("nan")  # oracle worst case (max over phases for baseline 2)
    provenance: str = ""
    message: str = ""


def run_trial(cfg, seed, trial, schemes=SCHEMES, axis_value=float("nan"), settings=None):
    """Every requested scheme on the same realization; one record each."""
    chan = draw_trial(cfg, seed, trial)
    out = []
    for name in schemes:
        res = run_scheme(name, chan, cfg, settings)
        audits = [a for a in res.audits.values() if a is not None]
        viol = max((a.max_violation for a in audits), default=float("nan"))
        worst = max((a.worst_leakage for a in audits), default=float("nan"))
        out.append(TrialRecord(
            scheme=name, nt=cfg.N_T, axis_value=float(axis_value), trial=int(trial),
            status=res.status, leakage=float(res.leakage) if res.ok else float("nan"),
            solve_time=float(res.solve_time), audit_violation=float(viol),
            worst_leakage=float(worst), provenance=res.info.get("provenance", ""),
            message=res.message,
        ))
    return out


def _run_task(task):
    scenario, nt, x, trial = task
    cfg = config_for(scenario, nt, x)
    return run_trial(cfg, scenario.seed, trial, scenario.schemes, x)


@dataclass(frozen=True)
class Row:
    scheme: str
    axis_name: str
    axis_value: float
    nt: int
    trials: int
    feasible: float  # fraction of trials with an audited solution
    mean_leakage_w: float
    mean_leakage_dbm: float
    ci95_dbm: float  # nan when fewer than two samples
    mean_solve_ms: float
    counts: dict = field(default_factory=dict)


def _aggregate(values, average):
    """-> (mean watts, mean dBm, 95% CI half-width in dB)."""
    x = np.sort(np.asarray(values, dtype=float))  # fixed summation order
    n = x.size
    if n == 0:
        return float("nan"), float("nan"), float("nan")
    t = float(stats.t.ppf(0.975, n - 1)) if n > 1 else float("nan")
    if average == "watts":
        m = float(np.mean(x))
        dbm = float(watt_to_dbm(m))
        # delta method: d(10 log10 m) = 10 / ln(10) * dm / m
        half = t * float(np.std(x, ddof=1)) / math.sqrt(n) if n > 1 else float("nan")
        return m, dbm, 10.0 / math.log(10.0) * half / m
    d = np.sort(watt_to_dbm(x))
    dbm = float(np.mean(d))
    half = t * float(np.std(d, ddof=1)) / math.sqrt(n) if n > 1 else float("nan")
    return float(np.mean(x)), dbm, half


@dataclass
class ScenarioResult:
    scenario: Scenario
    rows: list
    records: list  # every TrialRecord, sorted

    @property
    def audit_failures(self):
        return sum(r.status == "audit-failed" for r in self.records)

    def row(self, scheme, nt, axis_value):
        for r in self.rows:
            if r.scheme == scheme and r.nt == nt and math.isclose(r.axis_value, axis_value):
                return r
        raise KeyError((scheme, nt, axis_value))

    def select(self, **match):
        return [r for r in self.records if all(getattr(r, k) == v for k, v in match.items())]

    def to_csv(self, timing=True):
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            cells = [
                r.scheme, r.axis_name, f"{r.axis_value:.10g}", str(r.nt), str(r.trials),
                f"{r.feasible:.4f}",
                f"{r.mean_leakage_dbm:.6f}" if np.isfinite(r.mean_leakage_dbm) else "",
                f"{r.ci95_dbm:.6f}" if np.isfinite(r.ci95_dbm) else NA,
                f"{r.mean_solve_ms:.3f}" if timing else NA,
            ]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def manifest(self, timing=True):
        sc = self.scenario
        payload = sc.to_dict()
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return {
            "scenario": payload,
            "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
            "seed": int(sc.seed),
            "timing": bool(timing),
            "seeding": "SeedSequence(seed, spawn_key=(trial, 0)) geometry; (trial, 1, N_T) fading",
            "tolerances": {
                "rank": RANK_TOL,
                "violation": VIOLATION_TOL,
                "audit": AUDIT_TOL,
                "gap": SolverSettings.gap_tol,
                "feasibility": SolverSettings.feas_tol,
            },
            "version": version_string(),
            "rows": [
                {"scheme": r.scheme, "axis_value": r.axis_value, "nt": r.nt, "counts": r.counts}
                for r in self.rows
            ],
        }


def _rows(scenario, records):
    by_key = {}
    for rec in records:
        by_key.setdefault((rec.scheme, rec.nt, rec.axis_value), []).append(rec)
    rows = []
    for scheme in scenario.schemes:
        for nt in scenario.nt:
            for x in scenario.values:
                recs = by_key.get((scheme, nt, x), [])
                ok = [r.leakage for r in recs if r.status == "ok"]
                m, dbm, ci = _aggregate(ok, scenario.average)
                counts = {s: sum(r.status == s for r in recs) for s in STATUSES}
                n = len(recs)
                times = np.sort([r.solve_time for r in recs])
                rows.append(Row(
                    scheme=scheme, axis_name=scenario.axis, axis_value=x, nt=nt, trials=n,
                    feasible=len(ok) / n if n else 0.0, mean_leakage_w=m, mean_leakage_dbm=dbm,
                    ci95_dbm=ci, mean_solve_ms=1e3 * float(np.mean(times)) if n else float("nan"),
                    counts=counts,
                ))
    return rows


def run_scenario(scenario, jobs=1, progress=None):
    """Run every (antenna count, sweep point, trial) and aggregate.

    ``jobs > 1`` spreads the trials over worker processes. Records are sorted
    before aggregation, so the result does not depend on ``jobs``.
    ``progress`` is called with the number of finished tasks.
    """
    if int(jobs) < 1:
        raise ValueError("jobs must be >= 1")
    tasks = [(scenario, nt, x, t) for nt in scenario.nt for x in scenario.values
             for t in range(int(scenario.trials))]
    records = []
    if jobs == 1:
        for i, task in enumerate(tasks):
            records.extend(_run_task(task))
            if progress:
                progress(i + 1)
    else:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            for i, recs in enumerate(pool.map(_run_task, tasks, chunksize=1)):
                records.extend(recs)
                if progress:
                    progress(i + 1)
    order = {s: i for i, s in enumerate(scenario.schemes)}
    records.sort(key=lambda r: (order[r.scheme], r.nt, r.axis_value, r.trial))
    return ScenarioResult(scenario, _rows(scenario, records), records)


def version_string():
    """Package version plus ``git describe`` output when run from a checkout."""
    from . import __version__

    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        out = ""
    return f"{__version__}+g{out}" if out else __version__
