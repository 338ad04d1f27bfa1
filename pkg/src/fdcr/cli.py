"""Command-line entry point: ``fdcr run | verify | demo``.

Exit codes: 0 success, 1 a solution failed its audit (or a verify check
failed), 2 bad arguments. Output files are written only after a run
completes, through a temporary file and an atomic rename.
"""

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import fields, replace

import numpy as np

from .channel import SystemConfig, lin_to_db, watt_to_dbm
from .experiments import (
    AVERAGING, Scenario, config_for, draw_trial, fig2_scenario, fig3_scenario, run_scenario,
)
from .schemes import SCHEMES, run_scheme

PRESETS = {"fig2": fig2_scenario, "fig3": fig3_scenario, "custom": Scenario}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------
def parse_range(text):
    """``start:stop:step`` (stop included) or a comma list -> tuple of floats."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"bad range {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 12)) for i in range(n))
    return parse_floats(text)


def parse_floats(text):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


def parse_ints(text):
    vals = parse_floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def parse_names(text):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in SCHEMES]
    if bad or not names:
        raise UsageError(f"unknown schemes {bad}; choose from {', '.join(SCHEMES)}")
    return names


def load_config(path):
    """YAML or JSON mapping; keys are Scenario or SystemConfig field names."""
    import yaml

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise UsageError(f"{path}: cannot parse config: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a mapping at top level")
    return data


def _split_config(data):
    scen_names = {f.name for f in fields(Scenario)} - {"base"}
    sys_names = {f.name for f in fields(SystemConfig)}
    preset = data.get("scenario", "custom")
    scen, system = {}, {}
    for key, val in data.items():
        if key == "scenario":
            continue
        if key in scen_names:
            scen[key] = tuple(val) if isinstance(val, list) else val
        elif key in sys_names:
            system[key] = val
        else:
            raise UsageError(f"unknown config key {key!r}")
    return preset, scen, system


def build_scenario(args):
    preset, scen, system = "custom", {}, {}
    if args.config:
        preset, scen, system = _split_config(load_config(args.config))
    preset = args.scenario or preset
    if preset not in PRESETS:
        raise UsageError(f"unknown scenario {preset!r}")
    try:
        base_cfg = SystemConfig().with_(**system) if system else SystemConfig()
        sc = replace(PRESETS[preset](), base=base_cfg, **scen)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None

    changes = {}
    kappa = args.kappa2
    dl = args.dl_sinr_db
    if preset == "custom" and kappa is not None and len(kappa) > 1 and (dl is None or len(dl) == 1):
        changes["axis"] = "kappa2"
    axis = changes.get("axis", sc.axis)
    for flag, vals, axis_name, field_name in (
        ("--dl-sinr-db", dl, "dl-sinr-db", "dl_sinr_db"),
        ("--kappa2", kappa, "kappa2", "kappa2"),
    ):
        if vals is None:
            continue
        if axis == axis_name:
            changes["values"] = vals
        elif len(vals) == 1:
            changes[field_name] = vals[0]
        else:
            raise UsageError(f"{flag} takes a single value when sweeping {axis}")
    if axis == "kappa2" and "values" not in changes and preset == "custom" and kappa is not None:
        changes["values"] = kappa
    for name in ("nt", "trials", "seed", "schemes", "average"):
        val = getattr(args, name)
        if val is not None:
            changes[name] = val
    if args.ul_sinr_db is not None:
        changes["ul_sinr_db"] = args.ul_sinr_db
    try:
        return replace(sc, **changes)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _atomic_write(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------
def cmd_run(args):
    sc = build_scenario(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    out_dir = os.path.dirname(os.path.abspath(args.out))
    if not os.path.isdir(out_dir):
        raise UsageError(f"output directory {out_dir} does not exist")
    timing = args.timing == "on"
    total = len(sc.nt) * len(sc.values) * sc.trials
    t0 = time.perf_counter()

    def progress(done):
        if not args.quiet:
            print(f"\r{done}/{total} trials", end="", file=sys.stderr, flush=True)

    result = run_scenario(sc, jobs=args.jobs, progress=progress)
    if not args.quiet:
        print(f"\rfinished {total} trials in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    _atomic_write(args.out, result.to_csv(timing=timing))
    _atomic_write(args.out + ".manifest", json.dumps(result.manifest(timing=timing), indent=2) + "\n")
    if not args.quiet:
        sys.stdout.write(result.to_csv(timing=timing))
    failed = result.audit_failures
    if failed:
        print(f"{failed} solution(s) failed the audit", file=sys.stderr)
        return 1
    return 0


def cmd_demo(args):
    try:
        sc = Scenario(values=(args.dl_sinr_db,), nt=(args.nt,), ul_sinr_db=args.ul_sinr_db,
                      kappa2=args.kappa2, trials=1, seed=args.seed,
                      schemes=args.schemes or SCHEMES)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = config_for(sc, args.nt, args.dl_sinr_db)
    chan = draw_trial(cfg, args.seed, args.trial)
    print(f"seed {args.seed} trial {args.trial}: N_T={cfg.N_T} K={cfg.K} J={cfg.J} R={cfg.R} "
          f"DL {lin_to_db(cfg.gamma_DL[0]):.2f} dB UL {lin_to_db(cfg.gamma_UL[0]):.2f} dB "
          f"kappa2={cfg.kappa2}")
    code = 0
    for name in sc.schemes:
        res = run_scheme(name, chan, cfg)
        leak = f"{float(watt_to_dbm(res.leakage)):.3f} dBm" if res.ok else "-"
        print(f"\n[{name}] status={res.status} leakage={leak} solve={res.solve_time:.2f} s")
        if res.message:
            print(f"  {res.message}")
        for key, val in sorted(res.info.items()):
            print(f"  {key}: {val}")
        for phase, rep in res.audits.items():
            if rep is None:
                continue
            print(f"  audit[{phase}] ok={rep.ok} tau={rep.tau:.6e} W worst-case={rep.worst_leakage:.6e} W")
            for m, v in rep.margins.items():
                flag = "" if rep.passed[m] else "  FAIL"
                print(f"    {m:<14} {v:+.3e}{flag}")
        if res.status == "audit-failed":
            code = 1
    return code


def cmd_verify(args):
    from .verify import run_checks

    rows = run_checks(seed=args.seed)
    width = max(len(r[0]) for r in rows)
    print(f"{'check':<{width}}  {'value':>12}  {'limit':>10}  result")
    for name, value, limit, ok in rows:
        print(f"{name:<{width}}  {value:>12.3e}  {limit:>10.1e}  {'pass' if ok else 'FAIL'}")
    bad = sum(not r[3] for r in rows)
    print(f"{len(rows) - bad}/{len(rows)} checks passed")
    return 0 if bad == 0 else 1


def make_parser():
    p = _Parser(prog="fdcr", description="Robust leakage-minimising FD cognitive-radio beamforming.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="Monte Carlo sweep to CSV")
    run.add_argument("--scenario", choices=sorted(PRESETS))
    run.add_argument("--config", help="YAML/JSON file with Scenario / SystemConfig fields")
    run.add_argument("--nt", type=parse_ints, help="antenna counts, e.g. 6,9")
    run.add_argument("--dl-sinr-db", type=parse_range, help="start:stop:step (inclusive) or list")
    run.add_argument("--ul-sinr-db", type=float)
    run.add_argument("--kappa2", type=parse_floats, help="list, e.g. 0.01,0.05")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--schemes", type=parse_names)
    run.add_argument("--average", choices=AVERAGING, help="average watts (default) or dBm")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--timing", choices=("on", "off"), default="on",
                     help="'off' writes NA for solve time so the CSV is reproducible byte for byte")
    run.add_argument("--out", required=True)
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="oracle and property checks")
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    demo = sub.add_parser("demo", help="one seeded trial with the full audit")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--trial", type=int, default=0)
    demo.add_argument("--nt", type=int, default=9)
    demo.add_argument("--dl-sinr-db", type=float, default=10.0)
    demo.add_argument("--ul-sinr-db", type=float, default=6.0)
    demo.add_argument("--kappa2", type=float, default=0.05)
    demo.add_argument("--schemes", type=parse_names)
    demo.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except (UsageError, OSError) as exc:
        print(f"fdcr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
