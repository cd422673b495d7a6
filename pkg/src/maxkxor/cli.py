"""Command-line front end: ``maxkxor <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 runtime error. Runtime errors print a
single ``error: <Type>: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import kernels
from .analysis import (
    SweepConfig,
    aggregate,
    extrapolate_depth,
    fit_growth,
    fit_log,
    mean_level_index,
    poisson_reference,
    read_records,
    run_sweep,
    stable_seed,
)
from .exact import DEFAULT_CAP, optimal_fraction, solve_exact
from .instances import read_instance, sample_instance, write_instance
from .meanfield import MfConfig, integrate, mf_solve, sample_catalyst, sigma_lookup
from .optimizer import OptimizerConfig, optimize_depth_ladder, transfer_evaluate
from .qaoa import AngleSchedule, build_cost_diagonal, energy, evolve, level_distribution

EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _emit(obj, out=None):
    text = json.dumps(obj, indent=1, default=_json_default)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer, np.floating)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(args.count):
        seed = args.seed if args.count == 1 else stable_seed(args.seed, i)
        inst = sample_instance(args.n_vars, args.k, args.ratio, seed, args.scheme)
        path = out / f"kxor_n{args.n_vars}_k{args.k}_r{args.ratio:g}_{i:04d}.json"
        write_instance(inst, path)
        paths.append(str(path))
    resolved = {"command": "generate", "n_vars": args.n_vars, "k": args.k, "ratio": args.ratio,
                "count": args.count, "seed": args.seed, "scheme": args.scheme, "out": str(out)}
    (out / "generate_config.json").write_text(json.dumps(resolved, indent=1) + "\n")
    for p in paths:
        print(p)


def cmd_exact(args):
    inst = read_instance(args.instance)
    sol = solve_exact(inst, cap=args.cap)
    print("e_min,e_max,n_optimal,p0")
    print(f"{sol.e_min},{sol.e_max},{sol.n_optimal},{optimal_fraction(sol, inst.n_vars)!r}")


def _optimizer_config(args):
    return OptimizerConfig(
        n_random_starts=args.starts,
        shallow_depth_cutoff=args.cutoff,
        local_tolerance=args.tol,
        max_evaluations=args.max_evals,
    )


def cmd_qaoa(args):
    inst = read_instance(args.instance)
    diag = build_cost_diagonal(inst)
    record = {"command": "qaoa", "instance": str(args.instance), "backend": kernels.NAME,
              "e_min": diag.e_min, "e_max": diag.e_max}
    if args.angles:
        data = json.loads(Path(args.angles).read_text())
        sched = AngleSchedule.from_dict(data.get("schedule", data))
        f = energy(diag, sched)
        record.update(mode="fixed", p=sched.p, schedule=sched.to_dict(), f_value=f,
                      ratio=transfer_evaluate(sched, inst))
    else:
        cfg = _optimizer_config(args)
        res = optimize_depth_ladder(diag, args.depth, cfg, seed=args.seed)[-1]
        record.update(mode="optimized", p=res.p, seed=args.seed, schedule=res.schedule.to_dict(),
                      f_value=res.f_value, ratio=res.ratio, n_evaluations=res.n_evaluations,
                      converged=res.converged, config=cfg.__dict__)
    _emit(record, args.out)


def _mf_config(args):
    return MfConfig(t_final=args.t_final, rtol=args.rtol, atol=args.atol)


def cmd_mf(args):
    inst = read_instance(args.instance)
    sigma = args.sigma if args.sigma is not None else sigma_lookup(inst.k, inst.target_ratio or inst.ratio)
    cfg = _mf_config(args)
    if args.dump:
        res = integrate(inst, sample_catalyst(inst.n_vars, sigma, args.seed), cfg,
                        dump=args.dump, dump_every=args.dump_every)
    else:
        res = mf_solve(inst, args.catalysts, args.seed, sigma, cfg)
    _emit({
        "command": "mf", "instance": str(args.instance), "backend": kernels.NAME,
        "sigma": sigma, "catalysts": args.catalysts, "seed": args.seed, "config": cfg.__dict__,
        "bitstring": "".join(map(str, res.bitstring)), "e_star": res.e_star, "ratio": res.ratio,
        "rel_deviation": res.rel_deviation, "e0_reading": "e_max", "ties": res.n_ties,
        "n_steps": res.n_steps, "max_norm_residual": res.max_norm_residual,
        "catalyst_seed": res.catalyst.seed,
    }, args.out)


def cmd_sweep(args):
    data = yaml.safe_load(Path(args.config).read_text()) or {}
    for key in ("n_vars", "base_seed", "ensemble"):
        flag = getattr(args, key)
        if flag is not None:
            data[key] = flag
    config = SweepConfig.from_dict(data)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    recs = run_sweep(config, out, threads=args.threads)
    resolved = {**config.to_dict(), "threads": args.threads, "out": str(out), "backend": kernels.NAME}
    Path(str(out) + ".config.json").write_text(json.dumps(resolved, indent=1) + "\n")
    for key, (mean, std, n) in aggregate(recs).items():
        print(",".join(map(str, key)) + f",{mean!r},{std!r},{n}")


def cmd_fit(args):
    recs = [r for r in read_records(args.records) if r.algorithm == "qaoa"]
    stats = aggregate(recs, ("n_vars", "k", "r", "p"))
    cells: dict = {}
    for (n, k, r, p), (mean, _, _) in stats.items():
        cells.setdefault((n, k, r), []).append((p, mean))
    report = {"records": str(args.records), "exclude_first": args.exclude_first,
              "targets": args.target, "log_fits": []}
    depth_points: dict = {t: [] for t in args.target}
    for (n, k, r), pts in sorted(cells.items()):
        fit = fit_log(pts, exclude_first=args.exclude_first)
        entry = {"n_vars": n, "k": k, "r": r, **fit.to_dict(), "p_star": {}}
        for t in args.target:
            try:
                p_star = extrapolate_depth(fit, t)
            except ValueError:
                p_star = None
            entry["p_star"][str(t)] = p_star
            if p_star is not None:
                depth_points[t].append((k, p_star))
        report["log_fits"].append(entry)
    if args.model != "log":
        report["growth_fits"] = {
            str(t): fit_growth(pts, args.model).to_dict()
            for t, pts in depth_points.items() if len(pts) >= 2
        }
    _emit(report, args.out)


def cmd_poisson(args):
    out = {"command": "poisson"}
    if args.instance:
        inst = read_instance(args.instance)
        sol = solve_exact(inst, keep_table=True)
        diag = build_cost_diagonal(inst)
        res = optimize_depth_ladder(diag, args.depth, OptimizerConfig(n_random_starts=args.starts),
                                    seed=args.seed)[-1]
        probs = level_distribution(evolve(diag, res.schedule), sol)[: args.max_level + 1]
        mu = mean_level_index(probs)
        out.update(instance=str(args.instance), p=args.depth, ratio=res.ratio,
                   level_probabilities=probs.tolist())
    elif args.mean is not None:
        mu = args.mean
    else:
        raise argparse.ArgumentTypeError("poisson needs --mean or --instance")
    out.update(mean_index=mu, max_level=args.max_level,
               poisson=poisson_reference(mu, args.max_level).tolist())
    _emit(out, args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxkxor", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample random Max-kXOR instances")
    g.add_argument("--n-vars", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--ratio", type=float, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scheme", choices=["subset", "signed"], default="subset",
                   help="subset: each k-subset kept with probability rN/C(N,k); "
                        "signed: each of the 2 C(N,k) signed clauses drawn with it")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("exact", help="brute-force spectrum summary")
    e.add_argument("instance")
    e.add_argument("--cap", type=int, default=DEFAULT_CAP)
    e.set_defaults(func=cmd_exact)

    q = sub.add_parser("qaoa", help="optimize or evaluate QAOA angles")
    q.add_argument("instance")
    q.add_argument("--depth", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--starts", type=int, default=1000)
    q.add_argument("--cutoff", type=int, default=3)
    q.add_argument("--tol", type=float, default=1e-6)
    q.add_argument("--max-evals", type=int, default=5000)
    q.add_argument("--angles", help="JSON schedule file; skips optimization")
    q.add_argument("--out")
    q.set_defaults(func=cmd_qaoa)

    m = sub.add_parser("mf", help="run the mean-field algorithm")
    m.add_argument("instance")
    m.add_argument("--sigma", type=float)
    m.add_argument("--catalysts", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--t-final", type=float, default=2.0**15)
    m.add_argument("--rtol", type=float, default=1e-6)
    m.add_argument("--atol", type=float, default=1e-8)
    m.add_argument("--dump", help="write a spin trajectory table (single catalyst)")
    m.add_argument("--dump-every", type=float)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mf)

    s = sub.add_parser("sweep", help="run an ensemble sweep from a YAML/JSON config")
    s.add_argument("config")
    s.add_argument("--out", required=True, help="records CSV (resumed if it exists)")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--n-vars", type=int)
    s.add_argument("--seed", dest="base_seed", type=int)
    s.add_argument("--ensemble", type=int)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="log fits and depth extrapolation from sweep records")
    f.add_argument("records")
    f.add_argument("--model", choices=["log", "exponential", "power"], default="log")
    f.add_argument("--exclude-first", action="store_true")
    f.add_argument("--target", type=float, nargs="*", default=[0.99])
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    po = sub.add_parser("poisson", help="Poisson reference for excited-level populations")
    po.add_argument("--mean", type=float)
    po.add_argument("--instance")
    po.add_argument("--depth", type=int, default=1)
    po.add_argument("--starts", type=int, default=20)
    po.add_argument("--seed", type=int, default=0)
    po.add_argument("--max-level", type=int, default=8)
    po.add_argument("--out")
    po.set_defaults(func=cmd_poisson)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - every failure maps to one parsable line
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
