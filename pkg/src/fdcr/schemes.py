"""The three resource-allocation schemes, end to end on one realization.

Each ``solve_*`` function builds, solves, recovers rank-one beamformers and
audits the result against the true channels. Failures never raise; they
come back as a :class:`SchemeOutcome` status.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .oracle import audit
from .problem import (
    RobustInstance, build_baseline1, build_baseline2, build_hd_ul, build_relaxed,
    hd_sinr_target, zf_dl_directions,
)
from .receivers import DegenerateChannelError, mmse_receivers
from .recovery import RecoveryError, recover
from .solver import solve

__all__ = [
    "SCHEMES",
    "STATUSES",
    "SchemeOutcome",
    "solve_proposed",
    "solve_baseline1",
    "solve_baseline2",
    "run_scheme",
    "MMSE_MAX_ITERS",
    "MMSE_RTOL",
]

SCHEMES = ("proposed", "baseline1", "baseline2")
STATUSES = ("ok", "infeasible", "numerical-failure", "audit-failed", "degenerate")
MMSE_MAX_ITERS = 20
MMSE_RTOL = 1e-6


@dataclass
class SchemeOutcome:
    scheme: str
    status: str
    leakage: float = np.nan  # watts; time-averaged for the half-duplex scheme
    solve_time: float = 0.0  # seconds summed over every solver call
    solutions: dict = field(default_factory=dict, repr=False)
    audits: dict = field(default_factory=dict, repr=False)
    message: str = ""
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"


def _elapsed(reports):
    return float(sum(r.wall_time for r in reports))


def _solve_and_recover(problem, inst, settings):
    """-> (status, solution or None, reports list, message)."""
    rep = solve(problem, settings)
    if rep.status != "optimal":
        return rep.status, None, [rep], rep.solver_status
    try:
        sol = recover(rep, inst, problem, settings=settings)
    except RecoveryError as exc:
        return "numerical-failure", None, list(exc.reports.values()), str(exc)
    return "ok", sol, list(sol.reports.values()), ""


def _instance(realization, cfg, bank=None):
    try:
        return RobustInstance.from_realization(realization, cfg, bank=bank), ""
    except DegenerateChannelError as exc:
        return None, str(exc)


def _audited(scheme, sol, realization, cfg, reports, **audit_kw):
    rep = audit(sol, realization, cfg, **audit_kw)
    status = "ok" if rep.ok else "audit-failed"
    msg = "" if rep.ok else "audit failed: " + ", ".join(rep.failures())
    return SchemeOutcome(scheme, status, sol.tau, _elapsed(reports), {"main": sol}, {"main": rep}, msg)


def solve_proposed(realization, cfg, settings=None):
    """Robust FD scheme: relaxed SDP, rank-one recovery, audit."""
    inst, err = _instance(realization, cfg)
    if inst is None:
        return SchemeOutcome("proposed", "degenerate", message=err)
    status, sol, reports, msg = _solve_and_recover(build_relaxed(inst), inst, settings)
    if sol is None:
        return SchemeOutcome("proposed", status, solve_time=_elapsed(reports), message=msg)
    out = _audited("proposed", sol, realization, cfg, reports)
    out.info["provenance"] = sol.provenance
    return out


def solve_baseline1(realization, cfg, settings=None):
    """ZF DL directions with optimised powers (and UL powers)."""
    inst, err = _instance(realization, cfg)
    if inst is None:
        return SchemeOutcome("baseline1", "degenerate", message=err)
    try:
        directions = zf_dl_directions(inst.csi.h)
    except DegenerateChannelError as exc:
        return SchemeOutcome("baseline1", "degenerate", message=str(exc))
    problem = build_baseline1(inst, directions)
    status, sol, reports, msg = _solve_and_recover(problem, inst, settings)
    if sol is None:
        return SchemeOutcome("baseline1", status, solve_time=_elapsed(reports), message=msg)
    return _audited("baseline1", sol, realization, cfg, reports)


def _hd_ul_phase(inst, cfg, gamma, settings):
    """MMSE / power alternation for the half-duplex UL phase.

    Starts from ZF receivers (MMSE at full power if ZF is infeasible) and
    stops when the largest relative power change is below ``MMSE_RTOL`` or
    after ``MMSE_MAX_ITERS`` solves. Returns ``(status, solution, bank,
    reports, iterations, message)``.
    """
    g = inst.csi.g
    reports = []
    bank = inst.bank
    problem = build_hd_ul(inst, bank, gamma)
    rep = solve(problem, settings)
    reports.append(rep)
    if rep.status == "infeasible":
        bank = mmse_receivers(g, cfg.P_UL_max, cfg.sigma2_UL)
        problem = build_hd_ul(inst, bank, gamma)
        rep = solve(problem, settings)
        reports.append(rep)
    if rep.status != "optimal":
        return rep.status, None, bank, reports, len(reports), rep.solver_status
    P = np.array([rep.values[f"P[{j}]"] for j in range(g.shape[0])])
    iters = 1
    while iters < MMSE_MAX_ITERS:
        new_bank = mmse_receivers(g, np.maximum(P, 0.0), cfg.sigma2_UL)
        new_problem = build_hd_ul(inst, new_bank, gamma)
        new_rep = solve(new_problem, settings)
        reports.append(new_rep)
        iters += 1
        if new_rep.status != "optimal":
            break  # keep the last consistent (receivers, powers) pair
        P_new = np.array([new_rep.values[f"P[{j}]"] for j in range(g.shape[0])])
        bank, problem, rep = new_bank, new_problem, new_rep
        change = float(np.max(np.abs(P_new - P)) / max(float(np.max(np.abs(P))), 1e-300))
        P = P_new
        if change <= MMSE_RTOL:
            break
    sub = replace(inst, bank=bank)
    try:
        sol = recover(rep, sub, problem, settings=settings)
    except RecoveryError as exc:
        return "numerical-failure", None, bank, reports, iters, str(exc)
    return "ok", sol, bank, reports, iters, ""


def solve_baseline2(realization, cfg, settings=None):
    """Half-duplex BS: DL and UL served in separate phases with doubled-rate
    SINR targets; the reported leakage is the time average of the two
    phases' optimal worst-case leakages."""
    inst, err = _instance(realization, cfg)
    if inst is None:
        return SchemeOutcome("baseline2", "degenerate", message=err)
    gdl = hd_sinr_target(np.asarray(cfg.gamma_DL))
    gul = hd_sinr_target(np.asarray(cfg.gamma_UL))
    dl_problem, _ = build_baseline2(inst)
    status, dl_sol, reports, msg = _solve_and_recover(dl_problem, inst, settings)
    if dl_sol is None:
        return SchemeOutcome("baseline2", status, solve_time=_elapsed(reports), message="DL phase: " + msg)
    dl_audit = audit(dl_sol, realization, cfg, gamma_dl=gdl, serve_ul=False)

    J = inst.csi.g.shape[0]
    if J:
        status, ul_sol, bank, ul_reports, iters, msg = _hd_ul_phase(inst, cfg, gul, settings)
        reports += ul_reports
        if ul_sol is None:
            return SchemeOutcome("baseline2", status, solve_time=_elapsed(reports), message="UL phase: " + msg)
        ul_audit = audit(ul_sol, realization, cfg, bank=bank, gamma_ul=gul, serve_dl=False)
        tau_ul = ul_sol.tau
    else:
        ul_sol, ul_audit, tau_ul, iters, bank = None, None, 0.0, 0, None
    solutions = {"dl": dl_sol, "ul": ul_sol}
    audits = {"dl": dl_audit, "ul": ul_audit}
    failed = [f"{ph}: {', '.join(a.failures())}" for ph, a in audits.items() if a is not None and not a.ok]
    out = SchemeOutcome(
        "baseline2", "audit-failed" if failed else "ok",
        0.5 * (dl_sol.tau + tau_ul), _elapsed(reports), solutions, audits,
        "audit failed: " + "; ".join(failed) if failed else "",
        {"tau_dl": dl_sol.tau, "tau_ul": tau_ul, "mmse_iterations": iters,
         "ul_receivers": bank.flavor if bank is not None else ""},
    )
    return out


_DISPATCH = {"proposed": solve_proposed, "baseline1": solve_baseline1, "baseline2": solve_baseline2}


def run_scheme(name, realization, cfg, settings=None):
    if name not in _DISPATCH:
        raise ValueError(f"unknown scheme {name!r}; choose from {SCHEMES}")
    return _DISPATCH[name](realization, cfg, settings)

