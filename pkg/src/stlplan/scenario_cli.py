"""Scenario configuration, the end-to-end pipeline, and the CLI.

A scenario JSON bundles the workspace, the task formula, the vehicle,
and tuning for the planner and solver.  The pipeline decomposes the
formula, plans timed waypoints, builds the corridor, solves the
trajectory optimization, writes all artifacts, and then verifies the
trajectory the way a consumer would see it: re-loaded from traj.csv and
checked against the brute-force oracle plus collision and input-bound
scans.

Exit codes: 0 task satisfied, 2 pipeline completed but the trajectory
does not satisfy the task, 3 a stage failed, 4 configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .corridor import construct_safe_corridor
from .decomposer import decompose
from .optimizer import (InfeasibleConstraintError, SolverTolerances,
                        build_nlp, evaluate_solution, initial_guess,
                        solve_nlp, unicycle_model)
from .st_planner import PlannerParams, plan_global
from .stl_core import (Box, PointSequence, Region, StlError, Workspace,
                       oracle_satisfies_formula, parse_formula, snap_index)

BUILTIN_SCENARIOS = ("scenario1", "scenario2", "scenario3")
_REPLAN_LIMIT = 3
_SEED_STRIDE = 10 ** 9


class ConfigError(StlError):
    pass


@dataclass
class Scenario:
    name: str
    tau: float
    workspace: Workspace
    formula_text: str
    formula: object
    x0: np.ndarray
    model: object
    planner: PlannerParams
    tolerances: SolverTolerances
    q_weights: tuple
    r_weights: tuple
    corridor_step: float
    seed: int
    notes: str = ""
    source: str = ""

    @property
    def horizon_steps(self):
        k = snap_index(self.formula.horizon, self.tau)
        if k is None:
            raise ConfigError("horizon is not a grid multiple")
        return k


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _box_from_json(spec, what):
    _require(isinstance(spec, list) and len(spec) == 2
             and all(isinstance(r, list) and len(r) == 2 for r in spec),
             f"{what} must be [[xlo, xhi], [ylo, yhi]]")
    (xlo, xhi), (ylo, yhi) = spec
    _require(xlo < xhi and ylo < yhi, f"{what} must have positive extent")
    return Box((xlo, ylo), (xhi, yhi))


def _box_inside(box, bounds):
    return all(bl <= l and h <= bh for l, h, bl, bh in
               zip(box.lo, box.hi, bounds.lo, bounds.hi))


_PLANNER_KEYS = {"goal_bias", "step", "time_step", "time_overshoot",
                 "max_iters_per_tree", "max_restarts"}
_SOLVER_KEYS = {"eps_feas", "eps_opt", "max_outer", "max_inner",
                "q_weights", "r_weights"}


def load_scenario(source):
    """Load and validate a scenario from a path or a built-in name."""
    path = Path(source)
    if path.exists():
        text = path.read_text()
    else:
        stem = str(source).removesuffix(".json")
        if stem not in BUILTIN_SCENARIOS:
            raise ConfigError(f"no such scenario file or built-in: {source}")
        text = (resources.files("stlplan") / "scenarios"
                / f"{stem}.json").read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON: {err}") from None

    _require(isinstance(data, dict), "scenario must be a JSON object")
    for key in ("name", "tau", "workspace", "formula", "x0", "dynamics"):
        _require(key in data, f"missing required field {key!r}")
    tau = data["tau"]
    _require(isinstance(tau, (int, float)) and tau > 0,
             "tau must be a positive number")
    tau = float(tau)

    wsd = data["workspace"]
    bounds = _box_from_json(wsd.get("bounds"), "workspace bounds")
    obstacles = []
    for i, ob in enumerate(wsd.get("obstacles", [])):
        box = _box_from_json(ob, f"obstacle {i}")
        _require(_box_inside(box, bounds), f"obstacle {i} leaves the "
                 f"workspace bounds")
        obstacles.append(box)
    regions = []
    for name, spec in wsd.get("regions", {}).items():
        box = _box_from_json(spec, f"region {name!r}")
        _require(_box_inside(box, bounds), f"region {name!r} leaves the "
                 f"workspace bounds")
        _require(name not in ("F", "G", "U"),
                 f"region name {name!r} collides with an operator")
        regions.append(Region(name, box))
    ws = Workspace(bounds, tuple(obstacles), tuple(regions))

    dyn = data["dynamics"]
    _require(isinstance(dyn, dict) and dyn.get("model") == "unicycle",
             "dynamics.model must be 'unicycle'")
    v = dyn.get("v", (-4.0, 4.0))
    omega = dyn.get("omega", (-math.pi / 3, math.pi / 3))
    _require(len(v) == 2 and v[0] < v[1], "dynamics.v must be [lo, hi]")
    _require(len(omega) == 2 and omega[0] < omega[1],
             "dynamics.omega must be [lo, hi]")
    model = unicycle_model(tau, tuple(v), tuple(omega))

    x0 = np.asarray(data["x0"], dtype=float)
    _require(x0.shape == (model.state_dim,),
             f"x0 must have {model.state_dim} entries")
    _require(ws.point_free(x0[:2]), "x0 position must be in free space")

    formula = parse_formula(data["formula"], ws, tau=tau)

    pd = dict(data.get("planner", {}))
    unknown = set(pd) - _PLANNER_KEYS
    _require(not unknown, f"unknown planner keys: {sorted(unknown)}")
    planner = PlannerParams(
        goal_bias=float(pd.get("goal_bias", 0.3)),
        step=float(pd.get("step", 0.5)),
        time_step=(None if pd.get("time_step") is None
                   else float(pd["time_step"])),
        time_overshoot=(None if pd.get("time_overshoot") is None
                        else float(pd["time_overshoot"])),
        max_iters_per_tree=int(pd.get("max_iters_per_tree", 5000)),
        max_restarts=int(pd.get("max_restarts", 50)))
    _require(0.0 <= planner.goal_bias <= 1.0,
             "planner.goal_bias must lie in [0, 1]")
    _require(planner.step > 0, "planner.step must be positive")

    sd = dict(data.get("solver", {}))
    unknown = set(sd) - _SOLVER_KEYS
    _require(not unknown, f"unknown solver keys: {sorted(unknown)}")
    tolerances = SolverTolerances(
        eps_feas=float(sd.get("eps_feas", 1e-4)),
        eps_opt=float(sd.get("eps_opt", 1e-3)),
        max_outer=int(sd.get("max_outer", 50)),
        max_inner=int(sd.get("max_inner", 500)))
    q_weights = tuple(float(w) for w in sd.get("q_weights",
                                               [1.0] * model.input_dim))
    r_weights = tuple(float(w) for w in sd.get("r_weights", [1.0, 1.0, 0.1]))
    _require(len(q_weights) == model.input_dim,
             "solver.q_weights length must match the input dimension")
    _require(len(r_weights) == model.state_dim,
             "solver.r_weights length must match the state dimension")

    corridor_step = float(data.get("corridor", {}).get("step", 0.05))
    _require(corridor_step > 0, "corridor.step must be positive")

    return Scenario(
        name=str(data["name"]), tau=tau, workspace=ws,
        formula_text=data["formula"], formula=formula, x0=x0, model=model,
        planner=planner, tolerances=tolerances, q_weights=q_weights,
        r_weights=r_weights, corridor_step=corridor_step,
        seed=int(data.get("seed", 0)), notes=str(data.get("notes", "")),
        source=str(source))


# ---------------------------------------------------------------------------
# artifact serialization

def _f(v):
    return repr(float(v))


def plan_csv_text(plan):
    lines = ["k,t,x,y"]
    tau = plan.waypoints.tau
    for j, p in enumerate(plan.waypoints.positions):
        k = plan.waypoints.k0 + j
        lines.append(f"{k},{_f(k * tau)},{_f(p[0])},{_f(p[1])}")
    return "\n".join(lines) + "\n"


def pairs_csv_text(plan):
    lines = ["k,t,region"]
    tau = plan.waypoints.tau
    for pair in plan.pairs:
        lines.append(f"{pair.k},{_f(pair.k * tau)},{pair.label}")
    return "\n".join(lines) + "\n"


def corridor_csv_text(cor):
    lines = ["k,xmin,xmax,ymin,ymax"]
    for k, box in enumerate(cor.boxes):
        lines.append(f"{k},{_f(box.lo[0])},{_f(box.hi[0])},"
                     f"{_f(box.lo[1])},{_f(box.hi[1])}")
    return "\n".join(lines) + "\n"


def traj_csv_text(solution, tau):
    lines = ["k,t,x,y,theta,v,omega"]
    K = len(solution.states) - 1
    for k, s in enumerate(solution.states):
        theta = math.remainder(float(s[2]), 2.0 * math.pi)
        if k < K:
            u = solution.inputs[k]
            tail = f"{_f(u[0])},{_f(u[1])}"
        else:
            tail = ","
        lines.append(f"{k},{_f(k * tau)},{_f(s[0])},{_f(s[1])},"
                     f"{_f(theta)},{tail}")
    return "\n".join(lines) + "\n"


def read_traj_csv(path):
    """Parse a trajectory CSV into (positions, headings, inputs)."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header[:5] != ["k", "t", "x", "y", "theta"]:
        raise ConfigError(f"{path} is not a trajectory CSV")
    positions, headings, inputs = [], [], []
    for line in lines[1:]:
        cells = line.split(",")
        positions.append((float(cells[2]), float(cells[3])))
        headings.append(float(cells[4]))
        if cells[5] != "":
            inputs.append((float(cells[5]), float(cells[6])))
    return (np.array(positions), np.array(headings),
            np.array(inputs) if inputs else np.zeros((0, 2)))


def emit_svg(scenario, plan=None, cor=None, traj=None):
    """Deterministic SVG picture of the scenario and any artifacts."""
    ws = scenario.workspace
    scale = 80.0
    pad = 24.0
    (xlo, ylo), (xhi, yhi) = ws.bounds.lo, ws.bounds.hi

    def sx(x):
        return pad + (x - xlo) * scale

    def sy(y):
        return pad + (yhi - y) * scale

    def rect(box, style):
        x, y = sx(box.lo[0]), sy(box.hi[1])
        w = (box.hi[0] - box.lo[0]) * scale
        h = (box.hi[1] - box.lo[1]) * scale
        return (f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" '
                f'height="{h:.2f}" {style}/>')

    width = 2 * pad + (xhi - xlo) * scale
    height = 2 * pad + (yhi - ylo) * scale
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{width:.0f}" height="{height:.0f}" '
             f'viewBox="0 0 {width:.0f} {height:.0f}">',
             rect(ws.bounds, 'fill="#ffffff" stroke="#000000"')]
    for o in ws.obstacles:
        parts.append(rect(o, 'fill="#9a9a9a" stroke="#6f6f6f"'))
    for r in ws.regions:
        parts.append(rect(r.box, 'fill="#d6e9f8" stroke="#3c7fb5" '
                                 'fill-opacity="0.7"'))
        cx, cy = sx(r.box.center[0]), sy(r.box.center[1])
        parts.append(f'<text x="{cx:.2f}" y="{cy:.2f}" font-size="11" '
                     f'text-anchor="middle" fill="#1d4f75">{r.name}</text>')
    if cor is not None:
        for box in cor.distinct():
            parts.append(rect(box, 'fill="none" stroke="#d98e8e" '
                                   'stroke-dasharray="4 3"'))
    if plan is not None:
        pts = " ".join(f"{sx(p[0]):.2f},{sy(p[1]):.2f}"
                       for p in plan.waypoints.positions)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="#7f7f7f" stroke-width="1"/>')
        for pair in plan.pairs:
            p = plan.waypoints.at_index(pair.k)
            parts.append(f'<circle cx="{sx(p[0]):.2f}" cy="{sy(p[1]):.2f}" '
                         f'r="3" fill="#2a62b8"/>')
    if traj is not None:
        pts = " ".join(f"{sx(p[0]):.2f},{sy(p[1]):.2f}" for p in traj)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="#c0392b" stroke-width="2"/>')
    p0 = scenario.x0[:2]
    parts.append(f'<circle cx="{sx(p0[0]):.2f}" cy="{sy(p0[1]):.2f}" r="4" '
                 f'fill="#1f9d44"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class RunReport:
    scenario: Scenario
    seed: int
    status: str = "failed:init"
    stage_log: list = field(default_factory=list)
    decomposition: object = None
    plan: object = None
    corridor: object = None
    solution: object = None
    metrics: dict = field(default_factory=dict)
    out_dir: str = ""
    error: str = ""

    @property
    def satisfied(self):
        return self.status == "satisfied"

    def exit_code(self):
        if self.status == "satisfied":
            return 0
        if self.status == "unsatisfied":
            return 2
        return 3


def _polyline_length(points):
    return float(np.linalg.norm(np.diff(np.asarray(points), axis=0),
                                axis=1).sum())


def run_pipeline(scenario, seed=None, out_dir=None):
    """Run decompose / plan / corridor / optimize / verify and write all
    artifacts.  Verification re-reads traj.csv from disk.  Partial
    artifacts are still written when a stage fails."""
    if out_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="stlplan-")
        out = Path(tmp.name)
    else:
        tmp = None
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    seed = scenario.seed if seed is None else int(seed)
    report = RunReport(scenario=scenario, seed=seed, out_dir=str(out))
    try:
        _run_stages(scenario, seed, out, report)
    finally:
        _write_report_text(out, report)
        if tmp is not None:
            tmp.cleanup()
            report.out_dir = ""
    return report


def _run_stages(scenario, seed, out, report):
    ws = scenario.workspace
    tau = scenario.tau
    t0 = time.perf_counter()
    try:
        dec = decompose(scenario.formula, tau)
    except StlError as err:
        report.status = "failed:decompose"
        report.error = str(err)
        return
    report.decomposition = dec
    report.stage_log.append(
        ("decompose", f"{len(dec.cuts)} cut times, "
                      f"{len(dec.local_tasks)} local tasks, "
                      f"{len(dec.disjunctive_sets)} disjunctive sets"))
    report.metrics["decompose_seconds"] = time.perf_counter() - t0

    attempts = []
    for attempt in range(1 + _REPLAN_LIMIT):
        outcome = _attempt_stages(scenario, seed + _SEED_STRIDE * attempt,
                                  dec, out, report)
        attempts.append(outcome)
        if outcome == "satisfied" or outcome.startswith("failed:plan"):
            break
    report.metrics["attempts"] = len(attempts)
    report.metrics["attempt_outcomes"] = attempts
    report.status = attempts[-1]
    if report.status not in ("satisfied", "unsatisfied") :
        return
    report.stage_log.append(("verify", report.metrics.get("verify_detail",
                                                          "")))


def _attempt_stages(scenario, rng_seed, dec, out, report):
    ws = scenario.workspace
    tau = scenario.tau
    model = scenario.model
    K = scenario.horizon_steps

    t0 = time.perf_counter()
    params = replace(scenario.planner, rng_seed=rng_seed)
    try:
        plan = plan_global(dec, scenario.x0[:2], ws, params, tau=tau,
                           v_max=model.speed_limit)
        plan.validate(ws, model.speed_limit, expected_len=K + 1)
    except StlError as err:
        report.error = str(err)
        return "failed:plan"
    report.plan = plan
    report.metrics["plan_seconds"] = time.perf_counter() - t0
    report.metrics["plan_length"] = _polyline_length(
        plan.waypoints.positions)
    report.metrics["pair_count"] = len(plan.pairs)
    _write(out / "plan.csv", plan_csv_text(plan))
    _write(out / "pairs.csv", pairs_csv_text(plan))
    _log_once(report, "plan", f"{len(plan.waypoints)} waypoints, "
                              f"{len(plan.pairs)} pairs")

    t0 = time.perf_counter()
    try:
        cor = construct_safe_corridor(plan.waypoints, ws,
                                      scenario.corridor_step)
        cor.validate(ws, plan.waypoints.positions)
    except StlError as err:
        report.error = str(err)
        return "failed:corridor"
    report.corridor = cor
    report.metrics["corridor_seconds"] = time.perf_counter() - t0
    report.metrics["corridor_distinct_boxes"] = len(cor.distinct())
    _write(out / "corridor.csv", corridor_csv_text(cor))
    _log_once(report, "corridor", f"{len(cor.distinct())} distinct boxes")

    t0 = time.perf_counter()
    try:
        problem = build_nlp(plan, cor, ws, model, scenario.x0,
                            q_weights=scenario.q_weights,
                            r_weights=scenario.r_weights)
        init = initial_guess(problem, plan.waypoints.positions)
        solution = solve_nlp(problem, init, scenario.tolerances)
    except InfeasibleConstraintError as err:
        report.error = str(err)
        return "failed:optimize-infeasible"
    except StlError as err:
        report.error = str(err)
        return "failed:optimize"
    report.solution = solution
    report.metrics["solve_seconds"] = time.perf_counter() - t0
    report.metrics["solver_outer_iterations"] = solution.outer_iterations
    report.metrics["solver_violation"] = solution.max_violation
    report.metrics["solver_cost"] = solution.cost
    report.metrics["traj_length"] = _polyline_length(solution.states[:, :2])
    _write(out / "traj.csv", traj_csv_text(solution, tau))
    _write(out / "figure.svg",
           emit_svg(scenario, plan, cor, solution.states[:, :2]))
    _log_once(report, "optimize",
              f"{solution.message} after {solution.outer_iterations} outer "
              f"iterations, violation {solution.max_violation:.2e}")
    if not solution.converged:
        report.error = f"solver did not converge: {solution.message}"
        return "failed:optimize"

    positions, headings, inputs = read_traj_csv(out / "traj.csv")
    seq = PointSequence(0, tau, positions)
    satisfied = oracle_satisfies_formula(seq, scenario.formula)
    collision_free = not any(
        ws.segment_collides(positions[i], positions[i + 1])
        for i in range(len(positions) - 1))
    inputs_ok = bool(len(inputs) == K
                     and np.all(inputs >= np.array(model.input_lo) - 1e-9)
                     and np.all(inputs <= np.array(model.input_hi) + 1e-9))
    checks = evaluate_solution(problem, solution.states, solution.inputs)
    report.metrics["satisfied"] = bool(satisfied)
    report.metrics["collision_free"] = bool(collision_free)
    report.metrics["inputs_within_bounds"] = inputs_ok
    report.metrics["dynamics_violation"] = checks["dynamics_violation"]
    report.metrics["bound_violation"] = checks["bound_violation"]
    report.metrics["verify_detail"] = (
        f"oracle satisfied={satisfied}, collision_free={collision_free}, "
        f"inputs_within_bounds={inputs_ok} (re-read from traj.csv)")
    if satisfied and collision_free and inputs_ok:
        return "satisfied"
    report.error = report.metrics["verify_detail"]
    return "unsatisfied"


def _log_once(report, stage, detail):
    report.stage_log = [(s, d) for (s, d) in report.stage_log if s != stage]
    report.stage_log.append((stage, detail))


def _write(path, text):
    Path(path).write_text(text)


def _write_report_text(out, report):
    lines = [f"scenario: {report.scenario.name} (seed {report.seed})",
             f"formula: {report.scenario.formula_text}",
             f"status: {report.status}"]
    if report.error:
        lines.append(f"last error: {report.error}")
    if report.decomposition is not None:
        lines.append("-- decomposition --")
        lines.append(report.decomposition.explain())
    lines.append("-- stages --")
    for stage, detail in report.stage_log:
        lines.append(f"{stage}: {detail}")
    lines.append("-- metrics --")
    for key in sorted(report.metrics):
        lines.append(f"{key}: {report.metrics[key]}")
    _write(Path(out) / "report.txt", "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# CLI

def _cmd_validate(args):
    scenario = load_scenario(args.scenario)
    dec = decompose(scenario.formula, scenario.tau)
    print(f"{scenario.name}: valid "
          f"({len(scenario.workspace.regions)} regions, "
          f"{len(scenario.workspace.obstacles)} obstacles, "
          f"horizon {scenario.formula.horizon:g} s, "
          f"{len(dec.local_tasks)} local tasks)")
    return 0


def _cmd_decompose(args):
    scenario = load_scenario(args.scenario)
    dec = decompose(scenario.formula, scenario.tau)
    if args.explain:
        print(dec.explain())
    else:
        cuts = ", ".join(f"{c:g}" for c in dec.cuts)
        print(f"cut times: ({cuts})")
        for task in dec.local_tasks:
            print(f"local task {task.index} over {task.window}: "
                  f"{len(task.subtasks)} sub-tasks")
        print(f"disjunctive sets: {len(dec.disjunctive_sets)}")
    return 0


def _cmd_plan(args):
    scenario = load_scenario(args.scenario)
    dec = decompose(scenario.formula, scenario.tau)
    seed = scenario.seed if args.seed is None else args.seed
    params = replace(scenario.planner, rng_seed=seed)
    try:
        plan = plan_global(dec, scenario.x0[:2], scenario.workspace, params,
                           tau=scenario.tau,
                           v_max=scenario.model.speed_limit)
    except StlError as err:
        print(f"planning failed: {err}", file=sys.stderr)
        return 3
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "plan.csv", plan_csv_text(plan))
    _write(out / "pairs.csv", pairs_csv_text(plan))
    print(f"{scenario.name} seed {seed}: {len(plan.waypoints)} waypoints, "
          f"{len(plan.pairs)} pairs -> {out}/plan.csv")
    return 0


def _run_one(source, seed, out_dir):
    scenario = load_scenario(source)
    report = run_pipeline(scenario, seed=seed, out_dir=out_dir)
    return seed, report.status, report.metrics.get("traj_length"), \
        report.exit_code()


def _cmd_run(args):
    scenario = load_scenario(args.scenario)
    seed = scenario.seed if args.seed is None else args.seed
    if args.repeat <= 1:
        report = run_pipeline(scenario, seed=seed, out_dir=args.out)
        for stage, detail in report.stage_log:
            print(f"{stage}: {detail}")
        print(f"status: {report.status}")
        if report.error and not report.satisfied:
            print(f"error: {report.error}", file=sys.stderr)
        return report.exit_code()
    out = Path(args.out)
    jobs = [(args.scenario, seed + i, str(out / f"seed{seed + i}"))
            for i in range(args.repeat)]
    results = []
    with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(args.repeat, 8)) as pool:
        futures = [pool.submit(_run_one, *job) for job in jobs]
        for fut in futures:
            results.append(fut.result())
    worst = 0
    for run_seed, status, length, code in results:
        extra = f", length {length:.2f} m" if length else ""
        print(f"seed {run_seed}: {status}{extra}")
        if code == 3:
            worst = 3
        elif code == 2 and worst == 0:
            worst = 2
    return worst


def _cmd_check(args):
    scenario = load_scenario(args.scenario)
    positions, _, _ = read_traj_csv(args.traj)
    seq = PointSequence(0, scenario.tau, positions)
    ok = oracle_satisfies_formula(seq, scenario.formula)
    print(f"{args.traj}: {'satisfies' if ok else 'does not satisfy'} "
          f"{scenario.name}")
    return 0 if ok else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stlplan",
        description="Plan and optimize trajectories for temporal-logic "
                    "tasks over box workspaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("decompose", help="show the timeline decomposition")
    p.add_argument("scenario")
    p.add_argument("--explain", action="store_true",
                   help="print the full per-window report")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("plan", help="plan waypoints only")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--repeat", type=int, default=1,
                   help="run this many consecutive seeds in parallel")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("check", help="verify a trajectory CSV")
    p.add_argument("traj")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StlError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
