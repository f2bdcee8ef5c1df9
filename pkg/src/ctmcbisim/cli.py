"""Command-line front end.

Loads models (and optionally relations) from JSON, runs the analyses, and
emits JSON reports or CSV curves.  Exit codes: 0 success / related,
1 negative verdict, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import errors as err
from .bisim import PairRelation, epsilon_delta_bisim, is_bisimulation, load_relation, relation_to_dict
from .curves import BoundCurve, time_grid
from .erlang import (
    erlang_N_bound,
    exact_diff_series,
    markov_bound,
    pareto_region,
    uniformization_bound,
)
from .model import Ctmc, direct_sum, load_model, model_to_dict, normalize_goal, prune_unreachable
from .pairuniform import uniformize_pair
from .rewards import eliminate_zero_reward_states, hat_transform, reward_bound, reward_reach
from .spectral import (
    acyclic_exact,
    decompose,
    diag_bound,
    is_embedded_acyclic,
    jordan_bound,
    pn_diag,
    pn_jordan,
    spectral_report,
)
from .transient import hit_exact_steps, simulate_paths

_VERDICT_ERRORS = (err.NotBisimilar, err.PairNotRelated, err.NotTransitive, err.NotZeroDeltaBisim)
_NUMERICAL_ERRORS = (
    err.ModulusOneNotOne,
    err.DecompositionUnstable,
    err.SpectralGapZero,
    err.AcyclicChain,
    np.linalg.LinAlgError,
)

_BOUND_NAMES = ("exact", "unif", "erlangN", "markov", "spectral", "combined")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json(obj, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", out)


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_check_bisim(args) -> int:
    A = load_model(args.model)
    if args.model_b is not None:
        B = load_model(args.model_b)
        chain = direct_sum(A, B)
        init_pair = (A.initial, A.n + B.initial)
    else:
        chain = A
        init_pair = (A.initial, A.initial)
    R = epsilon_delta_bisim(chain, args.eps, args.delta)
    related = init_pair in R
    report = {
        "related": related,
        "initial_pair": [chain.ids[init_pair[0]], chain.ids[init_pair[1]]],
        **relation_to_dict(R, chain),
    }
    if args.explain and not related:
        probe = PairRelation.from_off_diagonal(
            list(R.off_diagonal()) + [init_pair], chain.n, args.eps, args.delta
        )
        chk = is_bisimulation(chain, probe)
        report["explain"] = {
            "pair": [chain.ids[chk.pair[0]], chain.ids[chk.pair[1]]] if chk.pair else None,
            "condition": chk.condition,
            "detail": chk.detail,
        }
    _json(report, args.out)
    return 0 if related else 1


def _spectral_curve(Mn: Ctmc, delta: float, grid, tol: float) -> np.ndarray:
    if is_embedded_acyclic(Mn):
        return np.array([acyclic_exact(Mn, delta, float(t)) for t in grid])
    sd = decompose(Mn.P, tol=tol)
    if sd.kind == "diag":
        return diag_bound(Mn, delta, grid, tol=tol)
    return jordan_bound(Mn, delta, grid, tol=tol)


def cmd_bounds(args) -> int:
    M = load_model(args.model)
    Mn = normalize_goal(prune_unreachable(M))
    grid = time_grid(args.tmax, args.steps)
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    unknown = [w for w in which if w not in _BOUND_NAMES]
    if unknown:
        raise ValueError(f"unknown bound column(s) {unknown}; choose from {_BOUND_NAMES}")
    q = float(Mn.max_rate())
    curve = BoundCurve(times=grid)
    for name in which:
        try:
            if name == "exact":
                col = [exact_diff_series(Mn, args.delta, float(t), args.tol) for t in grid]
            elif name == "unif":
                col = [uniformization_bound(args.eps, args.delta, q, float(t)) for t in grid]
            elif name == "erlangN":
                col = [erlang_N_bound(q * float(t), args.delta) for t in grid]
            elif name == "markov":
                col = [markov_bound(Mn, args.delta, float(t), args.tol) for t in grid]
            elif name == "spectral":
                col = _spectral_curve(Mn, args.delta, grid, args.tol)
            else:
                from .spectral import combined_bound

                col = combined_bound(Mn, args.delta, grid, tol=args.tol)
        except (err.NotApplicable, *_NUMERICAL_ERRORS) as e:
            print(f"note: column {name!r} not applicable: {e}", file=sys.stderr)
            col = np.full(len(grid), np.nan)
        curve.add(name, col)
    if args.format == "json":
        _json(curve.to_json_dict(), args.out)
    else:
        _emit(curve.to_csv(), args.out)
    return 0


def cmd_pareto(args) -> int:
    region = pareto_region(args.theta, args.q, args.t)
    points = region.frontier(args.samples) if args.theta > 0.0 else [(0.0, 0.0)]
    rows = []
    for eps, delta in points:
        bound = uniformization_bound(eps, delta, args.q, args.t)
        rows.append((eps, delta, bound, bound <= args.theta + 1e-12))
    if args.format == "json":
        _json(
            [
                {"eps": e, "delta": d, "bound": b, "within": ok}
                for e, d, b, ok in rows
            ],
            args.out,
        )
    else:
        lines = ["eps,delta,bound,within"]
        lines += [f"{_g17(e)},{_g17(d)},{_g17(b)},{int(ok)}" for e, d, b, ok in rows]
        _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(ok for *_, ok in rows) else 1


def cmd_reward_reach(args) -> int:
    M = load_model(args.model)
    value = reward_reach(M, args.state, args.bound, args.tol)
    report = {"budget": args.bound, "value": value}
    if args.eps is not None or args.delta is not None:
        eps = args.eps or 0.0
        delta = args.delta or 0.0
        q_hat = float(hat_transform(eliminate_zero_reward_states(M)).max_rate())
        report["q_hat"] = q_hat
        report["bound"] = reward_bound(eps, delta, q_hat, args.bound)
    _json(report, args.out)
    return 0


def cmd_pair_uniformize(args) -> int:
    A = load_model(args.model)
    B = load_model(args.model_b)
    joint = direct_sum(A, B)
    if args.relation is not None:
        R = load_relation(args.relation, joint)
        R = PairRelation.from_off_diagonal(R.off_diagonal(), joint.n, 0.0, args.delta)
    else:
        R = epsilon_delta_bisim(joint, 0.0, args.delta)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = uniformize_pair(A, B, R, args.delta)
    notes = [str(w.message) for w in caught if issubclass(w.category, err.OrderingAssumptionViolated)]
    report = {
        "q_m": res.q_m,
        "q_n": res.q_n,
        "rate_ratio": res.q_n / res.q_m,
        "model_a": model_to_dict(res.m_uniform),
        "model_b": model_to_dict(res.n_uniform),
        "relation": relation_to_dict(res.relation, joint),
    }
    if notes:
        report["ordering_warning"] = notes[0]
    _json(report, args.out)
    return 0


def cmd_spectral_report(args) -> int:
    M = load_model(args.model)
    _json(spectral_report(M), args.out)
    return 0


def cmd_pn(args) -> int:
    M = load_model(args.model)
    Mn = normalize_goal(prune_unreachable(M))
    sd = decompose(Mn.P, tol=args.tol)
    fn = pn_diag if sd.kind == "diag" else pn_jordan
    oracle = hit_exact_steps(Mn, args.steps).probs
    rows = [(k, float(fn(sd, k)), float(oracle[k - 1])) for k in range(1, args.steps + 1)]
    if args.format == "json":
        _json(
            [{"n": k, "formula": f, "oracle": o, "abs_err": abs(f - o)} for k, f, o in rows],
            args.out,
        )
    else:
        lines = ["n,formula,oracle,abs_err"]
        lines += [f"{k},{_g17(f)},{_g17(o)},{_g17(abs(f - o))}" for k, f, o in rows]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    M = load_model(args.model)
    Mn = normalize_goal(prune_unreachable(M))
    res = simulate_paths(Mn, args.paths, args.t, args.seed, confidence=args.confidence)
    _json(
        {
            "estimate": res.estimate,
            "ci_low": res.ci_low,
            "ci_high": res.ci_high,
            "hits": res.hits,
            "paths": res.paths,
            "confidence": res.confidence,
            "horizon": args.t,
            "seed": args.seed,
        },
        args.out,
    )
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ctmcbisim",
        description="Approximate bisimulation and reachability error bounds for CTMCs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_model(sp, required=True):
        sp.add_argument("--model", "-m", "--model-a", dest="model", required=required,
                        help="model JSON file")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--tol", type=float, default=1e-9)

    sp = sub.add_parser("check-bisim", help="compute the relation and check the initial states")
    add_model(sp)
    sp.add_argument("--model-b", default=None, help="second model (relation on the direct sum)")
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--explain", action="store_true", help="report why the initial pair fails")
    sp.set_defaults(fn=cmd_check_bisim)

    sp = sub.add_parser("bounds", help="error-bound curves against the exact difference")
    add_model(sp)
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--tmax", type=float, default=30.0)
    sp.add_argument("--steps", type=int, default=60)
    sp.add_argument("--which", default="exact,erlangN,spectral",
                    help=f"comma-separated columns from {_BOUND_NAMES}")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("pareto", help="sample the (eps, delta) frontier for a bound budget")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--samples", type=int, default=33)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_pareto)

    sp = sub.add_parser("reward-reach", help="reward-bounded reachability probability")
    add_model(sp)
    sp.add_argument("--bound", type=float, required=True, help="reward budget r")
    sp.add_argument("--state", default=None, help="start state id (default: initial)")
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--delta", type=float, default=None)
    sp.set_defaults(fn=cmd_reward_reach)

    sp = sub.add_parser("pair-uniformize", help="flatten a (0,delta)-related pair to uniform rates")
    add_model(sp)
    sp.add_argument("--model-b", required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--relation", default=None,
                    help="relation JSON over the direct sum (default: greatest (0,delta) relation)")
    sp.set_defaults(fn=cmd_pair_uniformize)

    sp = sub.add_parser("spectral-report", help="eigenstructure of the goal-normalized jump matrix")
    add_model(sp)
    sp.set_defaults(fn=cmd_spectral_report)

    sp = sub.add_parser("pn", help="hitting-step formula vs. matrix-power oracle")
    add_model(sp)
    sp.add_argument("--steps", type=int, default=30)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(fn=cmd_pn)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo time-bounded reachability")
    add_model(sp)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--confidence", type=float, default=0.95)
    sp.set_defaults(fn=cmd_simulate)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _VERDICT_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except (err.CtmcError, OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
