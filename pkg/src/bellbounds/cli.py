"""Batch command line: ``bellbounds <command> [options]``.

Every command prints one JSON report on stdout (sorted keys) that embeds the
parameters it ran with.  Exit codes: 0 ok, 1 internal error, 2 budget refusal,
3 invalid input.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import config
from . import io as bio
from .construction import (SPACES, ConstructionParams, chevet_monte_carlo, construct, gaussian_lemma_statistic,
                           lemma_epsilon_monitor, lemma_min_monitor, pipeline, positive_sum_identity, quartiles)
from .errors import BudgetExceeded, ValidationError
from .local import check_equivalence, classical_bound, epsilon_norm, nu_of_behavior, pi_robustness
from .model import chsh_functional, chsh_tsirelson_behavior, mix_detector_noise, pr_box, validate
from .parallel import pmap
from .quantum import (SeesawConfig, dimension_witness_report, upper_bound_monitor, violation_report)
from .solvers.rng import RngStream

log = logging.getLogger("bellbounds")

EXIT_OK, EXIT_INTERNAL, EXIT_BUDGET, EXIT_INVALID = 0, 1, 2, 3

# names accepted in place of a path
BUILTINS = {
    "chsh": chsh_functional,
    "chsh-tsirelson": chsh_tsirelson_behavior,
    "pr-box": pr_box,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _load(spec: str, kind: str):
    if spec in BUILTINS:
        obj = BUILTINS[spec]()
        if bio.to_dict(obj)["kind"] != kind:
            raise ValidationError(f"builtin {spec!r} is not a {kind}")
        return obj
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"{spec}: no such file (builtins: {', '.join(sorted(BUILTINS))})")
    try:
        return bio.load(path, expect=kind)
    except ValidationError as e:
        raise ValidationError(f"{spec}: {e}") from e


def _csv_ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed_range(text: str) -> list:
    """``5`` -> [5]; ``0..19`` -> [0, ..., 19]; ``1,4,9`` -> [1, 4, 9]."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed range {text!r}")
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return _csv_ints(text)


def _seesaw_cfg(args, d_a=None, d_b=None, stream_id=1) -> SeesawConfig:
    d = getattr(args, "dim", 2)
    return SeesawConfig(d_a or d, d_b or d, args.restarts, args.max_sweeps, stream=RngStream(args.seed, stream_id),
                        complete=getattr(args, "complete", False), jobs=args.jobs)


# ---------------------------------------------------------------------------
# commands; each returns (report, side_output or None)


def cmd_construct(args):
    params = ConstructionParams(args.n, args.q, args.m, args.sigma, args.seed)
    con = construct(params)
    report = {"params": params.as_dict(), "k": con.subspace.k, "observed_delta": con.subspace.observed_delta,
              "singular_values": con.subspace.singular_values.tolist(), "prefactors": con.prefactors,
              "scenario": bio.scenario_to_dict(con.functional.scenario)}
    return report, con.functional


def cmd_classical(args):
    m = _load(args.functional, "functional")
    rep = classical_bound(m, args.mode, restarts=args.restarts, stream=RngStream(args.seed, 2))
    out = {"classical": rep.as_dict(), "mode": args.mode,
           "witness": {k: list(map(int, v)) for k, v in rep.witness.items()}}
    if args.epsilon:
        out["epsilon_norm"] = epsilon_norm(m).as_dict()
    return out, None


def cmd_quantum(args):
    m = _load(args.functional, "functional")
    cfg = _seesaw_cfg(args)
    vr = violation_report(m, cfg, args.mode)
    out = vr.as_dict()
    out["seesaw"] = cfg.as_dict()
    side = None
    if args.behavior_out:
        from .model import behavior_from_quantum
        side = behavior_from_quantum(vr.model, m.scenario)
    return out, side


def cmd_nu(args):
    p = _load(args.behavior, "behavior")
    res = nu_of_behavior(p)
    out = {"nu": res.nu, "lp_gap": res.lp_gap, "reconstruction_residual": res.reconstruction_residual,
           "iterations": res.iterations, "support": len(res.decomposition.weights),
           "validation": validate(p).as_dict()}
    if args.dim is not None:
        out["monitor"] = upper_bound_monitor(p, args.dim, p.scenario.outputs, res.nu).as_dict()
    return out, {"decomposition": res.as_dict()["decomposition"], "nu": res.nu}


def cmd_pi(args):
    p = _load(args.behavior, "behavior")
    if args.equivalence:
        eq = check_equivalence(p)
        out = eq.as_dict()
        out["pi_detail"] = eq.pi.as_dict()
        return out, None
    return pi_robustness(p, args.pi_tol).as_dict(), None


def cmd_noise(args):
    p = _load(args.behavior, "behavior")
    q = mix_detector_noise(p, args.eta)
    return {"eta": args.eta, "scenario": bio.scenario_to_dict(q.scenario), "validation": validate(q).as_dict()}, q


def cmd_witness(args):
    m = _load(args.functional, "functional")
    cfg = _seesaw_cfg(args)
    rep = dimension_witness_report(m, args.dims, cfg, args.noise_tol)
    out = rep.as_dict()
    out["seesaw"] = cfg.as_dict()
    return out, None


def cmd_verify(args):
    which = args.lemma
    if which == "chevet":
        pair = tuple(args.pair.split(","))
        if len(pair) != 2 or any(s not in SPACES for s in pair):
            raise ValidationError(f"--pair must be two of {SPACES}, got {args.pair!r}")
        return chevet_monte_carlo(pair, args.n, args.m, args.trials, RngStream(args.seed, 3)), None
    if which == "gaussian":
        seeds = range(args.seed, args.seed + args.trials)
        return gaussian_lemma_statistic(args.n, args.m, seeds, args.delta, args.threshold), None
    params = ConstructionParams(args.n, args.q, args.m, seed=args.seed)
    if which == "epsilon":
        return lemma_epsilon_monitor(params, args.trials), None
    if which == "min":
        return lemma_min_monitor(params, args.trials), None
    # positive: random PSD families
    gen = RngStream(args.seed, 4).generator()
    rows = []
    for _ in range(args.trials):
        ts = []
        for _ in range(3):
            a = gen.standard_normal((args.n, args.n))
            ts.append(a @ a.T)
        rows.append(positive_sum_identity(ts)["residual"])
    return {"dim": args.n, "trials": args.trials, "residual": quartiles(rows),
            "pass": bool(max(rows) <= 1e-9 * max(1.0, args.n))}, None


def _pipeline_one(job):
    params, restarts, max_sweeps, mode, padded = job
    cfg = SeesawConfig(params.n, params.n, restarts, max_sweeps, stream=RngStream(params.seed, 1))
    return pipeline(params, cfg, mode, padded)


def cmd_pipeline(args):
    seeds = args.seeds if args.seeds is not None else [args.seed]
    jobs = [(ConstructionParams(args.n, args.q, args.m, args.sigma, s), args.restarts, args.max_sweeps,
             args.mode, args.padded) for s in seeds]
    runs = pmap(_pipeline_one, jobs, args.jobs)
    for r in runs:
        log.info("seed %d: k=%d LV=%.12g D_hat=%.6g", r["params"]["seed"], r["k"], r["LV"], r["D_hat"])
    summary = {"LV": quartiles([r["LV"] for r in runs]), "D_hat": quartiles([r["D_hat"] for r in runs]),
               "k": quartiles([r["k"] for r in runs]),
               "all_exact": all(r["certificates"]["classical"]["certificate"] == "exact" for r in runs),
               "all_symmetric": all(r["symmetric"] for r in runs)}
    return {"seeds": seeds, "runs": runs, "summary": summary}, None


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None, help="strategy-enumeration budget")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    common.add_argument("--out", default=None, help="file for the command's data output")
    common.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--no-meta", action="store_true", help="omit version/timestamp block")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bellbounds", description="Bounds and constructions for Bell functionals.")
    sub = p.add_subparsers(dest="command", required=True)

    def seesaw_opts(sp):
        sp.add_argument("--dim", type=int, default=2, help="local Hilbert dimension (both parties)")
        sp.add_argument("--restarts", type=int, default=20)
        sp.add_argument("--max-sweeps", type=int, default=500)
        sp.add_argument("--complete", action="store_true", help="use complete POVMs")

    sp = sub.add_parser("construct", parents=[common], help="build the Gaussian construction")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("classical", parents=[common], help="classical bound B_C")
    sp.add_argument("--functional", required=True)
    sp.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--epsilon", action="store_true", help="also report the signed-strategy norm")
    sp.set_defaults(func=cmd_classical)

    sp = sub.add_parser("quantum", parents=[common], help="see-saw lower bound and LV ratio")
    sp.add_argument("--functional", required=True)
    sp.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    sp.add_argument("--behavior-out", action="store_true", help="write the optimal behavior to --out")
    seesaw_opts(sp)
    sp.set_defaults(func=cmd_quantum)

    sp = sub.add_parser("nu", parents=[common], help="largest violation nu(P) by LP")
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--dim", type=int, default=None, help="run the upper-bound monitor at this dimension")
    sp.set_defaults(func=cmd_nu)

    sp = sub.add_parser("pi", parents=[common], help="noise robustness pi(P)")
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--pi-tol", type=float, default=1e-7)
    sp.add_argument("--equivalence", action="store_true", help="also compare with nu")
    sp.set_defaults(func=cmd_pi)

    sp = sub.add_parser("noise", parents=[common], help="mix in detector inefficiency")
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--eta", type=float, required=True)
    sp.set_defaults(func=cmd_noise)

    sp = sub.add_parser("witness", parents=[common], help="see-saw value per local dimension")
    sp.add_argument("--functional", required=True)
    sp.add_argument("--dims", type=_csv_ints, default=[1, 2, 3])
    sp.add_argument("--noise-tol", type=float, default=1e-6)
    seesaw_opts(sp)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("verify", parents=[common], help="Monte Carlo lemma verifiers")
    sp.add_argument("lemma", choices=("chevet", "gaussian", "epsilon", "min", "positive"))
    sp.add_argument("--pair", default="l2,l2")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--q", type=float, default=4.0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("pipeline", parents=[common], help="construct, bound and report LV / D-hat")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--seeds", type=_seed_range, default=None, help="e.g. 0..19; overrides --seed")
    sp.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--max-sweeps", type=int, default=500)
    sp.add_argument("--padded", action="store_true")
    sp.set_defaults(func=cmd_pipeline)
    return p


def _parameters(args) -> dict:
    skip = {"func", "no_meta", "verbose", "report"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_side(side, path):
    if isinstance(side, dict):
        Path(path).write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")
    else:
        bio.dump(side, path)


def _default_json(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; that code is reserved for budget refusals here
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config.configure(args.tol, args.budget)
        report, side = args.func(args)
        if side is not None and args.out:
            _write_side(side, args.out)
            report["output"] = args.out
        report = {"command": args.command, "parameters": _parameters(args), "result": report}
        if not args.no_meta:
            report["meta"] = {"version": _version(),
                              "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
        text = json.dumps(report, sort_keys=True, indent=1, default=_default_json) + "\n"
        if args.report:
            Path(args.report).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except BudgetExceeded as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except ValidationError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - last-resort mapping to exit 1
        log.exception("internal error")
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        config.reset()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
