"""Command-line interface.

Subcommands:

* ``swe verify``            one Thacker run, errors against the exact solution
* ``swe convergence``       a refinement ladder, CSV table of errors/orders
* ``swe run``               a scenario from a config file or a flood preset
* ``swe stability-report``  per-step governor bounds for a scenario
* ``swe penta-check``       the pentadiagonal spectral-norm diagnostic

Exit codes: 0 completed, 2 blow-up, 3 iteration failure, 4 bad
configuration.  ``SWE_THREADS`` caps how many ladder rungs run in
parallel worker processes (default 1, which also guarantees
bit-reproducible output files).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenario import (
    ConfigError,
    RunStatus,
    governor_csv,
    load_scenario,
    logone_preset,
    parse_logone_preset,
    run as run_scenario,
    write_outputs,
)
from .stability import penta_norm_diagnostic
from .thacker import (
    ThackerParams,
    _attach_orders,
    reports_to_csv,
    run_convergence_study,
    run_thacker,
)

EXIT_COMPLETED = 0
EXIT_BLOW_UP = 2
EXIT_ITERATION_FAILURE = 3
EXIT_CONFIG_ERROR = 4

_STATUS_EXIT = {
    RunStatus.COMPLETED: EXIT_COMPLETED,
    RunStatus.BLOW_UP: EXIT_BLOW_UP,
    RunStatus.ITERATION_FAILURE: EXIT_ITERATION_FAILURE,
}


def _worker_count() -> int:
    raw = os.environ.get("SWE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SWE_THREADS must be an integer, got {raw!r}") from None


def _out_path(args, name: str) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _emit(args, name: str, text: str) -> None:
    path = _out_path(args, name)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        print(f"wrote {path}")


def cmd_verify(args) -> int:
    p = ThackerParams()
    mx = int(round(p.l / args.dx))
    T = args.periods * p.period(args.example)
    r = run_thacker(args.example, mx, args.k, p, T=T, gamma=args.gamma)
    if r.diverged:
        print(f"diverged: {r.detail}")
        return EXIT_ITERATION_FAILURE if "failed to converge" in r.detail else EXIT_BLOW_UP
    print(f"example {args.example}  dx={r.dx:.6g}  k={r.k:.6g}  T={T:.6g}")
    print(f"e_h={r.e_h:.6e}  e_u={r.e_u:.6e}  e_v={r.e_v:.6e}")
    return EXIT_COMPLETED


def _spatial_rung(task):
    example, mx_exp, k_exp = task
    p = ThackerParams()
    return run_thacker(example, int(round(p.l * 3**mx_exp)), 3.0 ** (-k_exp), p)


def _temporal_rung(task):
    example, mx_exp, k_exp = task
    p = ThackerParams()
    return run_thacker(example, int(round(p.l * 3**mx_exp)), 3.0 ** (-k_exp), p)


def cmd_convergence(args) -> int:
    workers = _worker_count()
    if args.mode == "spatial":
        tasks = [(args.example, e, args.k_exponent) for e in args.dx_exponents]
        fn = _spatial_rung
    else:
        tasks = [(args.example, args.dx_exponent, e) for e in args.k_exponents]
        fn = _temporal_rung
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            reports = list(pool.map(fn, tasks))
        _attach_orders(reports)
    elif args.mode == "spatial":
        reports = run_convergence_study(args.example, "spatial",
                                        dx_exponents=tuple(args.dx_exponents),
                                        k_exponent=args.k_exponent)
    else:
        reports = run_convergence_study(args.example, "temporal",
                                        k_exponents=tuple(args.k_exponents),
                                        dx_exponent=args.dx_exponent)
    _emit(args, f"convergence_ex{args.example}_{args.mode}.csv", reports_to_csv(reports))
    return EXIT_BLOW_UP if any(r.diverged for r in reports) else EXIT_COMPLETED


def _load_run_scenario(args):
    if args.config is not None and args.preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        return load_scenario(text, out_dir=args.out)
    if args.preset is not None:
        return logone_preset(parse_logone_preset(args.preset),
                             out_dir=args.out or ".")
    raise ConfigError("one of --config or --preset is required")


def cmd_run(args) -> int:
    scenario = _load_run_scenario(args)
    result = run_scenario(scenario, max_steps=args.max_steps)
    write_outputs(result, scenario)
    if result.completed:
        print(f"Completed: {len(result.records)} records, "
              f"t={result.final.t:.6g}")
    else:
        print(f"{result.status.value} at n={result.fail_n}, t={result.fail_t:.6g}: "
              f"{result.detail}")
    return _STATUS_EXIT[result.status]


def cmd_stability_report(args) -> int:
    scenario = _load_run_scenario(args)
    result = run_scenario(scenario, max_steps=args.max_steps)
    _emit(args, "governor.csv", governor_csv(result.governor_log))
    if not result.completed:
        print(f"{result.status.value} at n={result.fail_n}: {result.detail}")
    return _STATUS_EXIT[result.status]


def cmd_penta_check(args) -> int:
    if args.n < 1:
        raise ConfigError(f"matrix size must be at least 1, got {args.n}")
    bound, norm = penta_norm_diagnostic(args.n)
    ok = norm <= bound + 1e-9
    print(f"n={args.n}  spectral norm = {norm:.12f}  bound = {bound}  "
          f"{'OK' if ok else 'VIOLATED'}")
    return EXIT_COMPLETED if ok else EXIT_BLOW_UP


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swe",
                                 description="split-step shallow-water solver")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="one Thacker run against the exact solution")
    v.add_argument("--example", type=int, choices=(1, 2), default=1)
    v.add_argument("--dx", type=float, default=3.0**-3)
    v.add_argument("--k", type=float, default=None,
                   help="fixed time step; omit for the adaptive governor")
    v.add_argument("--gamma", type=float, default=18.0)
    v.add_argument("--periods", type=float, default=1.0)
    v.set_defaults(fn=cmd_verify)

    c = sub.add_parser("convergence", help="refinement-ladder error table")
    c.add_argument("--example", type=int, choices=(1, 2), required=True)
    c.add_argument("--mode", choices=("spatial", "temporal"), required=True)
    c.add_argument("--dx-exponents", type=int, nargs="+", default=[2, 3, 4])
    c.add_argument("--k-exponent", type=int, default=6)
    c.add_argument("--k-exponents", type=int, nargs="+", default=[4, 5, 6])
    c.add_argument("--dx-exponent", type=int, default=4)
    c.add_argument("--out", default=None, help="output directory (default stdout)")
    c.set_defaults(fn=cmd_convergence)

    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("--config", default=None)
    r.add_argument("--preset", default=None,
                   help="logone:<wet|dry>:<min|avg|max>")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--max-steps", type=int, default=None)
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("stability-report", help="per-step governor bounds")
    s.add_argument("--config", default=None)
    s.add_argument("--preset", default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--max-steps", type=int, default=None)
    s.set_defaults(fn=cmd_stability_report)

    p = sub.add_parser("penta-check", help="pentadiagonal norm diagnostic")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=cmd_penta_check)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
