"""Command-line interface.

Subcommands cover the full pipeline: graph sampling and verification, code
export, Monte Carlo simulation (single code and cascade), calibration, and
CSV summarization.  Exit codes: 0 success, 1 validation or parse error,
2 infeasible parameters, 3 internal assertion.
"""

from __future__ import annotations

import argparse
import sys

from .errors import InternalError, ParameterError, ParseError, SamplingError, ShapeError, ValidationError


def _add_common(sp, config=True, seed=True, trials=False, out=False, threads=False):
    if config:
        sp.add_argument("--config", help="key = value configuration file")
    if seed:
        sp.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    if trials:
        sp.add_argument("--trials", type=int, default=None, help="number of Monte Carlo trials")
    if out:
        sp.add_argument("--out", help="output path")
    if threads:
        sp.add_argument("--threads", type=int, default=1, help="worker processes for trials")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zqec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-graph", help="sample a Z-graph and write it to a file")
    _add_common(sp, out=True)
    for flag in ("n", "m", "delta1", "delta2"):
        sp.add_argument(f"--{flag}", type=int)

    sp = sub.add_parser("verify-graph", help="certify or refute a graph's expansion")
    _add_common(sp, trials=True)
    sp.add_argument("--in", dest="infile", required=True, help="zgraph file")
    sp.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    sp.add_argument("--budget", type=int, default=10_000_000)
    for flag in ("eta1", "eta2", "eps1", "eps2"):
        sp.add_argument(f"--{flag}", type=float)

    sp = sub.add_parser("build-code", help="build the CSS code of a graph and export it")
    _add_common(sp, seed=False, out=True)
    sp.add_argument("--in", dest="infile", required=True, help="zgraph file")

    sp = sub.add_parser("simulate-qerc", help="Monte Carlo error-reduction trials on one code")
    _add_common(sp, trials=True, out=True, threads=True)

    sp = sub.add_parser("build-cascade", help="assemble a cascade and write its descriptor")
    _add_common(sp, seed=False, out=True)

    sp = sub.add_parser("simulate-cascade", help="end-to-end decode trials on a cascade")
    _add_common(sp, trials=True, out=True, threads=True)
    sp.add_argument("--descriptor", help="load the cascade from a descriptor file")

    sp = sub.add_parser("calibrate", help="find decoder operating points")
    _add_common(sp, trials=True, out=True)
    sp.add_argument("--target", choices=("sequential", "parallel", "cascade"), default="parallel")

    sp = sub.add_parser("report", help="summarize an experiment CSV")
    sp.add_argument("--in", dest="infile", required=True)
    return ap


def _cmd_gen_graph(args) -> int:
    from .config import graph_params_from, read_config
    from .zgraph import sample_random_zgraph, save_zgraph

    if args.config:
        params = graph_params_from(read_config(args.config), args.config)
    else:
        from .zgraph import ZGraphParams

        missing = [f for f in ("n", "m", "delta1", "delta2") if getattr(args, f) is None]
        if missing:
            raise ParameterError(f"missing --{missing[0]} (or use --config)")
        params = ZGraphParams(n=args.n, m=args.m, delta1=args.delta1, delta2=args.delta2)
    g = sample_random_zgraph(params, args.seed)
    if not args.out:
        raise ParameterError("gen-graph needs --out")
    save_zgraph(g, args.out)
    print(f"wrote {args.out}: n={params.n} m={params.m} "
          f"delta1={params.delta1} delta2={params.delta2} seed={args.seed}")
    return 0


def _cmd_verify_graph(args) -> int:
    from .zgraph import load_zgraph, verify_expansion_exact, verify_expansion_sampled

    g = load_zgraph(args.infile)
    overrides = {k: getattr(args, k) for k in ("eta1", "eta2", "eps1", "eps2")
                 if getattr(args, k) is not None}
    if overrides:
        g = type(g)(g.params.with_verification(**overrides), g.A, g.B, g.D)
    if args.mode == "exact":
        reports = verify_expansion_exact(g, budget=args.budget)
    else:
        reports = verify_expansion_sampled(g, trials=args.trials or 1000, seed=args.seed)
    for name, rep in zip(("L1+L2->R2", "R1+R2->L2"), reports):
        line = (f"{name}: {rep.certified} worst_slack={rep.worst_slack:.4f} "
                f"tested={rep.tested_count}")
        if rep.counterexample is not None:
            line += f" counterexample={rep.counterexample}"
        print(line)
    return 0


def _cmd_build_code(args) -> int:
    from .qerc import build_code, logical_qubit_count, save_qerc_text
    from .zgraph import load_zgraph

    g = load_zgraph(args.infile)
    code = build_code(g)
    k = logical_qubit_count(code)
    print(f"code: [[{code.n_qubits}, {k}]] checks {code.mx}+{code.mz} "
          f"encoder gates {2 * g.params.n * g.params.delta1 + g.params.m * g.params.delta2}")
    if args.out:
        save_qerc_text(code, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_simulate_qerc(args) -> int:
    from .config import graph_params_from, noise_model_from, read_config, run_options_from
    from .experiments import run_qerc_experiment
    from .qerc import build_code
    from .zgraph import sample_random_zgraph

    if not args.config:
        raise ParameterError("simulate-qerc needs --config")
    cp = read_config(args.config)
    params = graph_params_from(cp, args.config)
    noise = noise_model_from(cp, args.config)
    run = run_options_from(cp, args.config)
    trials = args.trials if args.trials is not None else run["trials"]
    seed = args.seed if args.seed else run["master_seed"]
    g = sample_random_zgraph(params, seed)
    code = build_code(g)
    _, summary = run_qerc_experiment(g, code, noise, trials, seed,
                                     reducers=run["reducers"], out=args.out,
                                     threads=args.threads)
    for key in sorted(summary):
        print(f"{key} = {summary[key]}")
    return 0


def _cmd_build_cascade(args) -> int:
    from .cascade import build_cascade, encode_cascade_stats, save_cascade
    from .config import cascade_params_from, read_config

    if not args.config:
        raise ParameterError("build-cascade needs --config")
    params, template = cascade_params_from(read_config(args.config), args.config)
    cc = build_cascade(params, template)
    gates, depth = encode_cascade_stats(cc)
    print(f"cascade k={params.k}: block {cc.block_length}, messages {cc.message_count}, "
          f"rate {cc.message_count}/{cc.block_length}, encoder gates {gates} depth {depth}, "
          f"base delta0 {cc.base.delta0}")
    if args.out:
        save_cascade(cc, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_simulate_cascade(args) -> int:
    from .cascade import build_cascade, load_cascade
    from .config import cascade_params_from, noise_model_from, read_config, run_options_from
    from .experiments import run_cascade_experiment

    if not args.config:
        raise ParameterError("simulate-cascade needs --config")
    cp = read_config(args.config)
    noise = noise_model_from(cp, args.config)
    run = run_options_from(cp, args.config)
    if args.descriptor:
        cc = load_cascade(args.descriptor)
    else:
        params, template = cascade_params_from(cp, args.config)
        cc = build_cascade(params, template)
    trials = args.trials if args.trials is not None else run["trials"]
    seed = args.seed if args.seed else run["master_seed"]
    pipelines = tuple("sequential" if r == "sequential" else "parallel" for r in run["reducers"])
    _, summary = run_cascade_experiment(cc, noise, trials, seed, pipelines=pipelines,
                                        out=args.out, threads=args.threads)
    for key in sorted(summary):
        print(f"{key} = {summary[key]}")
    return 0


def _cmd_calibrate(args) -> int:
    from .calibrate import calibrate, calibrate_cascade_rate, save_calibration
    from .config import cascade_params_from, graph_params_from, read_config

    if not args.config:
        raise ParameterError("calibrate needs --config")
    cp = read_config(args.config)
    budget = args.trials if args.trials is not None else 100
    if args.target == "cascade":
        from .cascade import build_cascade

        params, template = cascade_params_from(cp, args.config)
        cc = build_cascade(params, template)
        p_star = calibrate_cascade_rate(cc, budget=max(budget, 20), master_seed=args.seed)
        print(f"p_star = {p_star}")
        points = {"cascade": {
            "r1": str(params.r1), "r2": str(params.r2), "n0": params.n0, "k": params.k,
            "master_seed": params.master_seed, "delta1": template.delta1,
            "delta2": template.delta2, "p_star": p_star, "budget": budget,
        }}
    else:
        params = graph_params_from(cp, args.config)
        point = calibrate(params, args.target, budget=max(budget, 100), master_seed=args.seed)
        print(f"alpha = {point.alpha}\nbeta = {point.beta}\ngamma = {point.gamma}\n"
              f"eps_x = {point.eps_x}\neps_z = {point.eps_z}")
        points = {f"qerc_{args.target}": {
            "n": params.n, "m": params.m, "delta1": params.delta1, "delta2": params.delta2,
            "alpha": point.alpha, "beta": point.beta, "gamma": point.gamma,
            "eps_x": point.eps_x, "eps_z": point.eps_z, "budget": point.trials,
        }}
    if args.out:
        save_calibration(args.out, points)
        print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    with open(args.infile, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# zqec-"):
        raise ParseError("not a zqec experiment CSV", args.infile, 1)
    print(lines[0][2:])
    header = lines[1].split(",")
    rows = [ln.split(",") for ln in lines[2:] if ln]
    data = [r for r in rows if r[0] != "summary"]
    summaries = [r for r in rows if r[0] == "summary"]
    print(f"trials: {len(data)}")
    for srow in summaries:
        for key, val in zip(header, srow):
            if val not in ("", "summary"):
                print(f"  {key} = {val}")
    return 0


_COMMANDS = {
    "gen-graph": _cmd_gen_graph,
    "verify-graph": _cmd_verify_graph,
    "build-code": _cmd_build_code,
    "simulate-qerc": _cmd_simulate_qerc,
    "build-cascade": _cmd_build_cascade,
    "simulate-cascade": _cmd_simulate_cascade,
    "calibrate": _cmd_calibrate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValidationError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, SamplingError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (InternalError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
