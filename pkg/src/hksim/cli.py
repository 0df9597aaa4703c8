"""Command line front end.

Exit codes: 0 on success, 1 for configuration or usage errors, 2 for runtime
failures. Flags given on the command line override the matching config keys.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import continuum as cont
from . import experiments as exp
from .clusters import certify_equilibrium, detect_clusters
from .config import ConfigError, initial_state, parse_config
from .core import SimParams, run_to_fixed_point, simulate
from .io import emit_json, emit_perturbations, emit_sweep, emit_trajectory, ensure_dir
from .stability import classify, empirical_stability


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser):
    parser.add_argument("--config", help="JSON run configuration file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out-dir", help="override the output directory")
    parser.add_argument("--max-steps", type=int, help="override params.max_steps")
    parser.add_argument("--tol", type=float, help="override params.fixed_point_tol")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hksim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one profile to a fixed point")
    _add_common(p)

    p = sub.add_parser("sweep", help="bifurcation sweep over profile lengths")
    _add_common(p)
    p.add_argument("--l-min", type=float, required=True)
    p.add_argument("--l-max", type=float, required=True)
    p.add_argument("--l-step", type=float, default=0.1)
    p.add_argument("--agents-per-unit", type=int, default=1000)

    p = sub.add_parser("stability", help="classify the equilibrium of a profile")
    _add_common(p)
    p.add_argument("--analytic-only", action="store_true", help="skip perturbation runs")
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument(
        "--deltas", default="1e-2,1e-3,1e-4", help="comma-separated perturbation masses"
    )

    p = sub.add_parser("continuum", help="density diagnostics for a sampled profile")
    _add_common(p)
    p.add_argument(
        "--refine", default="", help="comma-separated sample sizes for refinement comparison"
    )
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--window", type=float, default=0.5)

    p = sub.add_parser("preset", help="run a named demonstration scenario")
    p.add_argument("name", choices=exp.PRESET_NAMES)
    _add_common(p)

    return parser


def _load(args, require_config=True):
    """Build a RunConfig from --config plus CLI overrides."""
    if args.config is None:
        if require_config:
            raise ConfigError("", "--config is required for this command")
        doc = {"preset": args.name} if getattr(args, "name", None) else {}
    else:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError("", f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON in {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("", "expected an object")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.max_steps is not None or args.tol is not None:
        params = dict(doc.get("params", {}))
        if args.max_steps is not None:
            params["max_steps"] = args.max_steps
        if args.tol is not None:
            params["fixed_point_tol"] = args.tol
        doc["params"] = params
    if args.out_dir is not None:
        outputs = dict(doc.get("outputs", {}))
        outputs["out_dir"] = args.out_dir
        doc["outputs"] = outputs
    return parse_config(doc)


def _params_from_args(args) -> SimParams:
    kwargs = {}
    if args.max_steps is not None:
        kwargs["max_steps"] = args.max_steps
    if args.tol is not None:
        kwargs["fixed_point_tol"] = args.tol
    return SimParams(**kwargs)


def _cluster_rows(clusters):
    return [
        {"position": c.position, "weight": c.weight, "size": int(c.members.size)}
        for c in clusters
    ]


def _cmd_simulate(args) -> int:
    config = _load(args)
    if config.kind == "preset":
        raise ConfigError("preset", "use the 'preset' subcommand for preset configs")
    state = initial_state(config)
    result, traj = simulate(state, config.params)
    out_dir = ensure_dir(config.outputs.out_dir)
    if config.outputs.trajectory:
        emit_trajectory(traj, f"{out_dir}/trajectory.csv")
    if config.outputs.summary:
        clusters = detect_clusters(result.final_state)
        emit_json(
            {
                "n": state.n,
                "total_weight": state.total_weight,
                "converged": result.converged,
                "convergence_time": result.convergence_time,
                "termination": result.termination.value,
                "steps": traj.steps,
                "clusters": _cluster_rows(clusters),
                "final_potential": cont.potential(result.final_state),
            },
            f"{out_dir}/summary.json",
        )
    print(f"converged={result.converged} t={result.convergence_time} out={out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    if args.config is not None:
        raise ConfigError("", "sweep takes its range from flags, not a config file")
    rows = exp.bifurcation_sweep(
        args.l_min,
        args.l_max,
        l_step=args.l_step,
        agents_per_unit=args.agents_per_unit,
        params=_params_from_args(args) if (args.max_steps or args.tol) else None,
    )
    out_dir = ensure_dir(args.out_dir or ".")
    emit_sweep(rows, f"{out_dir}/sweep.csv")
    emit_json(
        {
            "l_min": args.l_min,
            "l_max": args.l_max,
            "l_step": args.l_step,
            "agents_per_unit": args.agents_per_unit,
            "cluster_counts": {repr(r.L): r.n_clusters for r in rows},
        },
        f"{out_dir}/sweep.json",
    )
    print(f"rows={len(rows)} out={out_dir}")
    return 0


def _cmd_stability(args) -> int:
    config = _load(args)
    if config.kind == "preset":
        raise ConfigError("preset", "use the 'preset' subcommand for preset configs")
    state = initial_state(config)
    result = run_to_fixed_point(state, config.params)
    eq = certify_equilibrium(result)
    verdict = classify(eq)
    doc = {
        "clusters": _cluster_rows(eq.clusters),
        "analytic": {
            "status": verdict.status.value,
            "pairs": [
                {
                    "i": c.i,
                    "j": c.j,
                    "distance": c.distance,
                    "bound": c.bound,
                    "verdict": c.verdict.value,
                }
                for c in verdict.checks
            ],
        },
        "empirical": None,
    }
    out_dir = ensure_dir(config.outputs.out_dir)
    if not args.analytic_only:
        deltas = tuple(float(s) for s in args.deltas.split(","))
        report = empirical_stability(eq, deltas=deltas, grid_step=args.grid_step)
        doc["empirical"] = {
            "verdict": report.verdict.value,
            "deltas": list(report.deltas),
            "sups": list(report.sups),
            "sup_locations": list(report.sup_locations),
        }
        emit_perturbations(report, f"{out_dir}/perturbations.csv")
    emit_json(doc, f"{out_dir}/stability.json")
    print(f"analytic={verdict.status.value} out={out_dir}")
    return 0


def _cmd_continuum(args) -> int:
    config = _load(args)
    if config.kind != "density":
        raise ConfigError("", "the continuum command needs a 'density' config")
    state = initial_state(config)
    deg = cont.degree(state)
    mu = cont.distance_to_F(state)
    doc = {
        "n": state.n,
        "sampling": config.sampling,
        "degree_min": float(deg.min()),
        "degree_max": float(deg.max()),
        "potential": cont.potential(state),
        "distance_to_F": {
            "epsilon": mu.epsilon,
            "witness": [{"position": p, "mass": m} for p, m in mu.witness],
        },
        "regularity": None,
        "refine": None,
    }
    if state.span > args.window:
        rb = cont.regularity_bounds(state, args.window)
        doc["regularity"] = {
            "window": rb.window,
            "m_hat": rb.m_hat,
            "M_hat": rb.M_hat,
            "ratio": rb.ratio,
        }
    if args.refine:
        ns = tuple(int(s) for s in args.refine.split(","))
        rep = cont.refine_compare(config.density, ns, args.horizon)
        doc["refine"] = {
            "ns": list(rep.ns),
            "horizon": rep.horizon,
            "applicable": rep.applicable,
            "errors": list(rep.errors),
        }
    out_dir = ensure_dir(config.outputs.out_dir)
    emit_json(doc, f"{out_dir}/continuum.json")
    print(f"epsilon={mu.epsilon} out={out_dir}")
    return 0


def _preset_summary(name, res):
    if name == "fig4_stable_lt2":
        return {
            "name": name,
            "converged": res.result.converged,
            "convergence_time": res.result.convergence_time,
            "positions": res.cluster_positions,
            "weights": res.cluster_weights,
            "distance": res.distance,
            "status": res.verdict.status.value,
        }
    if name == "fig5_conjecture":
        return {
            "name": name,
            "master_seed": res.master_seed,
            "n_small": res.n_small,
            "n_large": res.n_large,
            "small_stable_fraction": res.small_stable_fraction,
            "large_stable_fraction": res.large_stable_fraction,
            "rows": [
                {"seed": r.seed_index, "n": r.n, "status": r.status, "clusters": r.n_clusters}
                for r in res.rows
            ],
        }
    if name == "metastable":
        return {
            "name": name,
            "L": res.L,
            "n": res.n,
            "converged": res.result.converged,
            "convergence_time": res.result.convergence_time,
            "final_cluster_count": res.final_cluster_count,
            "phases": [
                {"start": p.start, "end": p.end, "gap": p.gap} for p in res.phases
            ],
        }
    return {
        "name": name,
        "rows": [
            {
                "n": r.n,
                "convergence_time": r.convergence_time,
                "cluster_count": r.cluster_count,
                "cluster_position": r.cluster_position,
            }
            for r in res.rows
        ],
    }


def _cmd_preset(args) -> int:
    params = _params_from_args(args) if (args.max_steps or args.tol) else None
    res = exp.preset(args.name, seed=args.seed if args.seed is not None else 0, params=params)
    out_dir = ensure_dir(args.out_dir or ".")
    emit_json(_preset_summary(args.name, res), f"{out_dir}/preset_{args.name}.json")
    print(f"preset={args.name} out={out_dir}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "stability": _cmd_stability,
    "continuum": _cmd_continuum,
    "preset": _cmd_preset,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
