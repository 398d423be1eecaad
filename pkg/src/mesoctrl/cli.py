"""Command-line front end: synthesize | simulate | analyze.

One JSON config fully specifies a run (plant, cost, locality, horizon,
scenario); re-running a command on the same config reproduces its outputs
bit-identically. Outputs land in <out>/<mode>/ for synthesize and simulate,
and in <out>/ for analyze, which consumes the per-mode synthesis outputs.

Exit codes: 0 success, 1 usage or missing input, 2 infeasible synthesis.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as mio
from .constraints import LocalityRule, SupportSpec, locality_support, rule_from_config
from .lqr import closed_loop_fir, lqr_cost, solve_dare
from .meso import build_mesocircuit, census, memory_report, simulate_distributed
from .plant import LinearSystem, system_from_config
from .simulate import simulate_mdesign, simulate_sls, simulate_static
from .spectral import CAUSAL, STRICTLY_CAUSAL, CostSpec, FIRPair
from .synthesis import (MDESIGN, SLS, SynthesisProblem, feasibility_residual,
                        synthesize)

_TAU0 = 1e-9   # zero threshold for sparsity renderings


class UsageError(Exception):
    """Bad input or missing file; maps to exit code 1."""


@dataclass
class RunConfig:
    plant: dict
    cost: dict = field(default_factory=dict)
    locality: dict = field(default_factory=lambda: {"d": 2})
    horizon: int = 20
    closure: bool = False
    modes: dict = field(default_factory=dict)      # per-mode overrides
    circuit: dict | None = None                    # wiring for census/distributed
    scenario: dict = field(default_factory=lambda: {"impulse": {"node": 1}, "steps": 30})
    seed: int = 0

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if "plant" not in raw:
            raise UsageError("config must have a 'plant' section")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def system(self) -> LinearSystem:
        return system_from_config(self.plant)

    def cost_spec(self, n: int) -> CostSpec:
        eps = float(self.cost.get("eps", 1e-6))
        Q = np.array(self.cost["Q"], dtype=float) if "Q" in self.cost else np.eye(n)
        return CostSpec(Q, eps)

    def locality_for(self, mode: str) -> LocalityRule:
        override = self.modes.get(mode, {})
        return rule_from_config(override.get("locality", self.locality))

    def horizon_for(self, mode: str) -> int:
        return int(self.modes.get(mode, {}).get("horizon", self.horizon))

    def resolved(self, mode: str, horizon: int) -> dict:
        rule = self.locality_for(mode)
        return {
            "plant": self.plant,
            "cost": {"eps": float(self.cost.get("eps", 1e-6)),
                     **({"Q": self.cost["Q"]} if "Q" in self.cost else {})},
            "locality": {"d": rule.d, "comm_delay": rule.comm_delay,
                         "self_delay": rule.self_delay},
            "horizon": horizon,
            "closure": self.closure,
            "mode": mode,
            "scenario": self.scenario,
            "seed": self.seed,
        }


def _support_for(config: RunConfig, sys: LinearSystem, mode: str,
                 horizon: int) -> SupportSpec:
    causality = STRICTLY_CAUSAL if mode == SLS else CAUSAL
    return locality_support(sys, config.locality_for(mode), horizon, causality)


def cmd_synthesize(config: RunConfig, mode: str, out: Path,
                   horizon: int | None = None) -> int:
    sys_ = config.system()
    cost = config.cost_spec(sys_.n)
    horizon = horizon or config.horizon_for(mode)
    mode_dir = out / mode
    lqr_sol = solve_dare(sys_, cost)
    baseline = lqr_cost(sys_, lqr_sol.K, cost)
    baseline_state = lqr_cost(sys_, lqr_sol.K, CostSpec(cost.Q, 0.0))

    if mode == "lqr":
        mio.atomic_write_text(mode_dir / "K.csv", mio.matrix_csv(lqr_sol.K))
        mio.atomic_write_text(mode_dir / "P.csv", mio.matrix_csv(lqr_sol.P))
        mio.write_json(mode_dir / "status.json", {
            "mode": "lqr",
            "feasible": True,
            "objective": baseline,
            "state_objective": baseline_state,
            "normalized_cost": 1.0,
            "dare_residual": lqr_sol.residual,
            "dare_iterations": lqr_sol.iterations,
            "plant_spectral_radius": sys_.spectral_radius(),
        })
        mio.write_json(mode_dir / "resolved_config.json", config.resolved(mode, horizon))
        return 0

    support = _support_for(config, sys_, mode, horizon)
    problem = SynthesisProblem(sys=sys_, cost=cost, support=support,
                               horizon=horizon, mode=mode, closure=config.closure)
    result = synthesize(problem)
    mio.atomic_write_text(mode_dir / "R.csv",
                          mio.elements_csv(result.pair, "R"))
    mio.atomic_write_text(mode_dir / "M.csv",
                          mio.elements_csv(result.pair, "M", sys_.actuated))
    mio.write_json(mode_dir / "spectral.json", mio.pair_to_json(result.pair))
    status = {
        "mode": mode,
        "feasible": result.feasible,
        "objective": result.objective,
        "state_objective": result.state_objective,
        "baseline_lqr_cost": baseline,
        "baseline_lqr_state_cost": baseline_state,
        "normalized_cost": result.objective / baseline,
        "normalized_state_cost": result.state_objective / baseline_state,
        "closure": result.closure,
        "closure_gap": result.closure_gap,
        "feasibility_residual": feasibility_residual(result.pair, sys_,
                                                     closure=result.closure),
        "per_column": [{
            "column": s.column, "feasible": s.feasible, "residual": s.residual,
            "kkt_condition": s.kkt_condition,
            **({"reason": s.reason} if s.reason else {}),
        } for s in result.per_column_status],
        "solver_stats": result.solver_stats,
    }
    mio.write_json(mode_dir / "status.json", status)
    mio.write_json(mode_dir / "resolved_config.json", config.resolved(mode, horizon))
    if not result.feasible:
        bad = result.solver_stats["infeasible_columns"]
        print(f"synthesis infeasible for disturbance columns {bad}", file=sys.stderr)
        return 2
    return 0


def _scenario_disturbance(config: RunConfig, sys_: LinearSystem,
                          impulse: str | None) -> tuple[np.ndarray, int]:
    scenario = dict(config.scenario)
    if impulse is not None:
        parts = impulse.split(",")
        node = int(parts[0])
        time = int(parts[1]) if len(parts) > 1 else 0
        scenario = {"impulse": {"node": node, "time": time},
                    "steps": scenario.get("steps", 30)}
    steps = int(scenario.get("steps", 30))
    if "impulse" in scenario:
        node = int(scenario["impulse"]["node"])
        time = int(scenario["impulse"].get("time", 0))
        if not 1 <= node <= sys_.n:
            raise UsageError(f"impulse node {node} out of range 1..{sys_.n}")
        if not 0 <= time < steps:
            raise UsageError(f"impulse time {time} outside 0..{steps - 1}")
        w = np.zeros((steps, sys_.n))
        w[time, node - 1] = 1.0
        return w, steps
    if "disturbance_file" in scenario:
        path = Path(scenario["disturbance_file"])
        if not path.exists():
            raise UsageError(f"disturbance file not found: {path}")
        w = np.loadtxt(path, delimiter=",", ndmin=2)
        if w.shape[1] != sys_.n:
            raise UsageError(f"disturbance file has {w.shape[1]} columns, "
                             f"expected {sys_.n}")
        return w, int(scenario.get("steps", w.shape[0]))
    if "random" in scenario:
        rng = np.random.default_rng(config.seed)
        scale = float(scenario["random"].get("scale", 1.0))
        w = scale * rng.standard_normal((steps, sys_.n))
        return w, steps
    raise UsageError("scenario must specify 'impulse', 'disturbance_file', or 'random'")


def _load_pair(mode_dir: Path) -> FIRPair:
    spectral = mode_dir / "spectral.json"
    if not spectral.exists():
        raise UsageError(f"missing synthesis output {spectral}; "
                         "run the synthesize command first")
    return mio.pair_from_json(json.loads(spectral.read_text()))


def cmd_simulate(config: RunConfig, mode: str, out: Path,
                 distributed: bool = False, impulse: str | None = None) -> int:
    sys_ = config.system()
    w, steps = _scenario_disturbance(config, sys_, impulse)
    mode_dir = out / mode

    if mode == "lqr":
        kfile = mode_dir / "K.csv"
        if not kfile.exists():
            raise UsageError(f"missing synthesis output {kfile}; "
                             "run the synthesize command first")
        K = np.loadtxt(kfile, delimiter=",", ndmin=2)
        traj = simulate_static(sys_, K, w, steps)
        mio.atomic_write_text(mode_dir / "trajectory.csv",
                              mio.trajectory_csv(traj, sys_.actuated))
        return 0

    pair = _load_pair(mode_dir)
    if distributed:
        if mode != SLS:
            raise UsageError("--distributed requires --mode sls")
        # wire the circuit from the pair's own synthesis locality; the
        # config's `circuit` section shapes the census analysis only
        rule = config.locality_for(mode)
        support = locality_support(sys_, rule, pair.horizon, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(sys_, pair, support)
        traj, log = simulate_distributed(circuits, sys_, w, steps)
        mio.atomic_write_text(mode_dir / "messages.csv", mio.messages_csv(log))
    elif mode == SLS:
        traj = simulate_sls(sys_, pair, w, steps)
    else:
        traj = simulate_mdesign(sys_, pair, w, steps)
    mio.atomic_write_text(mode_dir / "trajectory.csv",
                          mio.trajectory_csv(traj, sys_.actuated))
    return 0


def cmd_analyze(config: RunConfig, out: Path) -> int:
    sys_ = config.system()
    statuses = {}
    for mode in ("lqr", MDESIGN, SLS):
        status_file = out / mode / "status.json"
        if not status_file.exists():
            raise UsageError(f"missing synthesis output {status_file}; "
                             f"run synthesize --mode {mode} first")
        statuses[mode] = json.loads(status_file.read_text())

    # cost table
    lines = ["method,objective,state_objective,normalized_cost,normalized_state_cost"]
    for mode in ("lqr", MDESIGN, SLS):
        s = statuses[mode]
        lines.append(",".join([
            mode, repr(s["objective"]), repr(s["state_objective"]),
            repr(s.get("normalized_cost", 1.0)),
            repr(s.get("normalized_state_cost", 1.0))]))
    mio.atomic_write_text(out / "costs.csv", "\n".join(lines) + "\n")

    # sparsity renderings: M(1) for every method, R(2) for the dynamic ones
    pairs = {}
    K = np.loadtxt(out / "lqr" / "K.csv", delimiter=",", ndmin=2)
    pairs["lqr"] = closed_loop_fir(sys_, K, config.horizon)
    for mode in (MDESIGN, SLS):
        pairs[mode] = _load_pair(out / mode)
    for mode, pair in pairs.items():
        for name, mat in (("M1", pair.M(1)), ("R2", pair.R(2))):
            mio.atomic_write_text(out / f"sparsity_{mode}_{name}.txt",
                                  mio.sparsity_grid(mat, _TAU0))
            mio.atomic_write_text(out / f"sparsity_{mode}_{name}.svg",
                                  mio.sparsity_svg(mat, _TAU0))

    # pathway census and memory accounting for the configured circuit wiring
    circuit_cfg = config.circuit or {"locality": config.locality}
    rule = rule_from_config(circuit_cfg)
    horizon = int(circuit_cfg.get("horizon", config.horizon))
    support = locality_support(sys_, rule, horizon, STRICTLY_CAUSAL)
    circuits = build_mesocircuit(
        sys_, FIRPair.identity(sys_.n, sys_.m, horizon), support)
    mio.write_json(out / "census.json", mio.census_json(census(circuits)))
    mio.write_json(out / "memory.json", mio.memory_json(memory_report(circuits)))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesoctrl",
        description="Localized controller synthesis, simulation, and "
                    "distributed-circuit analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default="runs", help="output directory")

    p_syn = sub.add_parser("synthesize", help="solve a design problem")
    common(p_syn)
    p_syn.add_argument("--mode", choices=["lqr", MDESIGN, SLS], required=True)
    p_syn.add_argument("--horizon", type=int, default=None,
                       help="override the config horizon")

    p_sim = sub.add_parser("simulate", help="run a closed-loop scenario")
    common(p_sim)
    p_sim.add_argument("--mode", choices=["lqr", MDESIGN, SLS], required=True)
    p_sim.add_argument("--distributed", action="store_true",
                       help="route through the node-level distributed realization")
    p_sim.add_argument("--impulse", default=None, metavar="NODE[,T]",
                       help="override the scenario with a unit impulse")

    p_ana = sub.add_parser("analyze", help="census, memory, sparsity, cost table")
    common(p_ana)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        config = RunConfig.load(args.config)
        out = Path(args.out)
        if args.command == "synthesize":
            return cmd_synthesize(config, args.mode, out, horizon=args.horizon)
        if args.command == "simulate":
            return cmd_simulate(config, args.mode, out,
                                distributed=args.distributed, impulse=args.impulse)
        return cmd_analyze(config, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
