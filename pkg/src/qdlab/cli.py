"""Command-line front end: ``qdlab {discord,dynamics,witness,tomo,prepare}``.

Exit codes: 0 ok, 2 configuration error, 3 non-physical input, 4 optimizer
did not converge within its budget.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    ChannelError,
    RelaxationParams,
    classify_regime,
    nmr_trajectory,
    pd_trajectory,
    readout_grid,
    sudden_change_point,
    sudden_change_time,
)
from .correlations import (
    BIT,
    DEVIATION_UNIT,
    BellDiagonalParams,
    OptimizerConfig,
    bell_diagonal_analytic,
    deviation_correlations,
    symmetric_discord,
)
from .nmrsim import (
    PREPARATIONS,
    SETTING_LABELS,
    TomographyError,
    records_from_csv,
    records_to_csv,
    simulate_tomography,
    tomography_reconstruct,
)
from .qcore import (
    DensityMatrix,
    DeviationMatrix,
    InvalidStateError,
    matrix_from_json,
    matrix_to_json,
    random_traceless_hermitian,
)
from .witness import DEFAULT_CUTOFF, random_directions, table_states, witness_circuit, witness_direct, witness_dynamics

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_OPTIMIZER = 0, 2, 3, 4


class ConfigError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class StateSpec:
    """Initial state: Bell-diagonal triple or matrix file, exact or deviation."""

    bell: BellDiagonalParams | None = None
    matrix: np.ndarray | None = None
    deviation: bool = False
    epsilon: float = 1e-5

    def build(self):
        if self.bell is not None:
            return self.bell.deviation(self.epsilon) if self.deviation else self.bell.state()
        if self.deviation:
            return DeviationMatrix(self.matrix, self.epsilon)
        return DensityMatrix(self.matrix)


def _parse_triple(text: str, problems: list):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        problems.append(f"--bell expects three comma-separated numbers, got {text!r}")
        return None
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        problems.append(f"--bell expects three finite numbers, got {text!r}")
        return None
    return vals


def _state_spec(args, problems: list, required: bool = True) -> StateSpec | None:
    """Collects problems instead of raising, so every bad flag is reported at once."""
    spec = StateSpec(deviation=getattr(args, "deviation", False), epsilon=getattr(args, "epsilon", 1e-5))
    if not 0 < spec.epsilon < 0.25:
        problems.append(f"--epsilon must lie in (0, 0.25), got {spec.epsilon}")
    bell, path = getattr(args, "bell", None), getattr(args, "file", None)
    if bell is not None and path is not None:
        problems.append("--bell and --file are mutually exclusive")
        return None
    if bell is not None:
        vals = _parse_triple(bell, problems)
        if vals is not None:
            # physicality is checked later so it maps to the physics exit code
            spec.bell = vals
        return spec
    if path is not None:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
            spec.matrix = matrix_from_json(obj.get("matrix", obj))
        except (OSError, ValueError, AttributeError) as exc:
            problems.append(f"cannot read state file {path}: {exc}")
        return spec
    if required:
        problems.append("a state is required (--bell c1,c2,c3 or --file state.json)")
    return None


def _finish_spec(spec: StateSpec):
    if isinstance(spec.bell, list):
        spec.bell = BellDiagonalParams(*spec.bell)
    return spec.build()


def _optimizer(args, problems: list) -> OptimizerConfig:
    try:
        return OptimizerConfig(grid=args.grid, maxfev=args.maxfev, seed=args.opt_seed)
    except ValueError as exc:
        problems.append(str(exc))
        return OptimizerConfig()


def _check(problems: list):
    if problems:
        raise ConfigError(problems)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _write(text: str, out: str | None, stdout):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _report_json(report) -> dict:
    d = report.to_dict()
    d["unit"] = report.unit
    d["converged"] = bool(report.converged)
    return d


# --- subcommands ------------------------------------------------------------


def cmd_discord(args, stdout) -> int:
    problems: list = []
    spec = _state_spec(args, problems)
    opt = _optimizer(args, problems)
    if args.analytic and (spec is None or spec.bell is None):
        problems.append("--analytic needs a Bell-diagonal state (--bell)")
    if args.analytic and spec is not None and spec.deviation:
        problems.append("--analytic reports exact-state bits; drop --deviation")
    _check(problems)
    state = _finish_spec(spec)
    if args.analytic:
        report = bell_diagonal_analytic(spec.bell)
    elif isinstance(state, DeviationMatrix):
        report = deviation_correlations(state, opt)
    else:
        report = symmetric_discord(state, opt)
    stdout.write(_dump(_report_json(report)) + "\n")
    return EXIT_OK if report.converged else EXIT_OPTIMIZER


def cmd_dynamics(args, stdout) -> int:
    problems: list = []
    spec = _state_spec(args, problems)
    opt = _optimizer(args, problems)
    if args.mode == "pd" and spec is not None and spec.bell is None:
        problems.append("pd mode uses the closed form and needs --bell")
    if args.p_steps < 1:
        problems.append("--p-steps must be at least 1")
    if args.m_max < 0:
        problems.append("--m-max must be non-negative")
    params = None
    if args.mode == "nmr":
        try:
            params = RelaxationParams(args.t1a, args.t1b, args.t2a, args.t2b, spec.epsilon if spec else 1e-5)
        except ValueError as exc:
            problems.append(str(exc))
    _check(problems)
    state = _finish_spec(spec)
    c = spec.bell
    summary = {}
    if args.mode == "pd":
        traj = pd_trajectory(c, np.linspace(0.0, 1.0, args.p_steps + 1))
        summary = {"regime": traj.regime, "p_sc": traj.meta["p_sc"]}
    else:
        regime = classify_regime(c).value if c is not None else ""
        grid = readout_grid(args.m_max, args.j_hz)
        traj = nmr_trajectory(state, params, grid, opt, amplitude=not args.no_amplitude, regime=regime)
        summary = {"regime": regime or None, "p_sc": None, "t_sc": None}
        if c is not None:
            summary["p_sc"] = sudden_change_point(c)
            summary["t_sc"] = sudden_change_time(c, params)
        summary["unit"] = DEVIATION_UNIT if spec.deviation else BIT
    text = traj.to_csv()
    lines = "".join(f"{k}: {'none' if v is None else (f'{v:.6g}' if isinstance(v, float) else v)}\n" for k, v in summary.items())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        stdout.write(lines)
    else:
        stdout.write(text)
        sys.stderr.write(lines)
    converged = all(r.converged for r in traj.reports)
    return EXIT_OK if converged else EXIT_OPTIMIZER


def _witness_table(cutoff: float, dirs, opt: OptimizerConfig) -> str:
    states = table_states()
    cols = list(states)
    rows = {"Witness": [], "Quantum Discord": [], "Classical Correlation": []}
    for name in cols:
        delta = states[name]
        rep = deviation_correlations(delta, opt)
        rows["Witness"].append(witness_direct(delta, dirs, cutoff).value)
        rows["Quantum Discord"].append(rep.symmetric_discord)
        rows["Classical Correlation"].append(rep.classical_correlation)
    width = max(len(k) for k in rows)
    out = [f"{'':<{width}}  " + "  ".join(f"{c:>10}" for c in cols)]
    for k, vals in rows.items():
        out.append(f"{k:<{width}}  " + "  ".join(f"{(0.0 if abs(v) < 1e-12 else v):>10.4f}" for v in vals))
    out.append(f"(units: eps^2 for the witness, {DEVIATION_UNIT} for correlations; cutoff {cutoff:g})")
    return "\n".join(out) + "\n"


def cmd_witness(args, stdout) -> int:
    problems: list = []
    spec = _state_spec(args, problems, required=not args.table)
    opt = _optimizer(args, problems)
    if args.cutoff < 0:
        problems.append("--cutoff must be non-negative")
    if args.steps is not None and (args.steps < 1 or args.dt is None or args.dt <= 0):
        problems.append("--steps needs a positive --dt")
    params = None
    try:
        params = RelaxationParams(args.t1a, args.t1b, args.t2a, args.t2b, spec.epsilon if spec else 1e-5)
    except ValueError as exc:
        problems.append(str(exc))
    _check(problems)
    dirs = random_directions(args.seed)
    if args.table:
        _write(_witness_table(args.cutoff, dirs, opt), args.out, stdout)
        return EXIT_OK
    state = _finish_spec(spec)
    if args.steps is None:
        route = witness_circuit if args.route == "circuit" else witness_direct
        _write(_dump(route(state, dirs, args.cutoff).to_dict()) + "\n", args.out, stdout)
        return EXIT_OK
    reports = witness_dynamics(state, params, args.steps, args.dt, dirs, args.cutoff)
    lines = ["n,t,w_value,o1,o2,o3,o4,verdict"]
    for n, r in enumerate(reports):
        o = r.expectations
        lines.append(
            f"{n},{n * args.dt:.12g},{r.value:.12g},{o[0]:.12g},{o[1]:.12g},{o[2]:.12g},{o[3]:.12g},{r.verdict}"
        )
    _write("\n".join(lines) + "\n", args.out, stdout)
    return EXIT_OK


def cmd_tomo(args, stdout) -> int:
    problems: list = []
    spec = _state_spec(args, problems, required=False)
    if args.noise < 0:
        problems.append("--noise must be non-negative")
    records = None
    if args.replay:
        try:
            records = records_from_csv(Path(args.replay).read_text(encoding="utf-8"))
        except OSError as exc:
            problems.append(f"cannot read records {args.replay}: {exc}")
        except TomographyError as exc:
            problems.append(str(exc))
        if records is not None:
            missing = [s for s in SETTING_LABELS if s not in {r.setting.label for r in records}]
            if missing:
                problems.append(f"replay records miss settings: {', '.join(missing)}")
    _check(problems)
    epsilon = spec.epsilon if spec else args.epsilon
    truth = None
    if spec is not None:
        if isinstance(spec.bell, list):
            spec.bell = BellDiagonalParams(*spec.bell)
        truth = np.asarray(spec.bell.correlation_part() if spec.bell is not None else spec.matrix, dtype=complex)
        if spec.bell is None and not spec.deviation:
            # a density-matrix file is converted to its deviation
            truth = (truth - np.eye(truth.shape[0]) * np.trace(truth).real / truth.shape[0]) / epsilon
        truth = np.asarray(DeviationMatrix(truth, epsilon))
    elif records is None:
        rng = np.random.default_rng(args.seed)
        truth = random_traceless_hermitian(4, rng)
    if records is None:
        rng = np.random.default_rng(args.seed + 1)
        records = simulate_tomography(truth, args.noise, rng)
        if args.out:
            Path(args.out).write_text(records_to_csv(records), encoding="utf-8")
    rec = tomography_reconstruct(records, epsilon)
    result = {
        "settings": len({r.setting.label for r in records}),
        "noise_sigma": float(args.noise),
        "max_error": None if truth is None else float(np.max(np.abs(np.asarray(rec) - truth))),
        "deviation": matrix_to_json(rec),
    }
    stdout.write(_dump(result) + "\n")
    return EXIT_OK


def cmd_prepare(args, stdout) -> int:
    problems: list = []
    if args.sequence not in PREPARATIONS:
        problems.append(f"unknown sequence {args.sequence!r}; known: {', '.join(sorted(PREPARATIONS))}")
    if not 0 < args.epsilon < 0.25:
        problems.append(f"--epsilon must lie in (0, 0.25), got {args.epsilon}")
    _check(problems)
    full, dev = PREPARATIONS[args.sequence]
    rho, delta = full(args.epsilon), np.asarray(dev(args.epsilon))
    result = {
        "sequence": args.sequence,
        "epsilon": args.epsilon,
        "matrix": matrix_to_json(rho),
        "deviation_re": [float(x) for x in delta.real.ravel()],
        "deviation_im": [float(x) for x in delta.imag.ravel()],
    }
    stdout.write(_dump(result) + "\n")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _add_state(p, deviation: bool = True):
    p.add_argument("--bell", metavar="C1,C2,C3", help="Bell-diagonal correlation coefficients")
    p.add_argument("--file", metavar="PATH", help="matrix JSON {dim, re, im}")
    if deviation:
        p.add_argument("--deviation", action="store_true", help="treat the state as a deviation matrix")
    p.add_argument("--epsilon", type=float, default=1e-5)


def _add_optimizer(p):
    p.add_argument("--grid", type=int, default=24, help="grid points per angle")
    p.add_argument("--maxfev", type=int, default=400, help="Nelder-Mead evaluation budget")
    p.add_argument("--opt-seed", type=int, default=0)


def _add_relaxation(p):
    d = RelaxationParams()
    p.add_argument("--t1a", type=float, default=d.t1_a)
    p.add_argument("--t1b", type=float, default=d.t1_b)
    p.add_argument("--t2a", type=float, default=d.t2_a)
    p.add_argument("--t2b", type=float, default=d.t2_b)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discord", help="mutual information, classical correlation and symmetric discord")
    _add_state(p)
    _add_optimizer(p)
    p.add_argument("--analytic", action="store_true", help="closed form for Bell-diagonal states")
    p.set_defaults(func=cmd_discord)

    p = sub.add_parser("dynamics", help="correlation trajectories under local noise")
    _add_state(p)
    _add_optimizer(p)
    _add_relaxation(p)
    p.add_argument("--mode", choices=("pd", "nmr"), default="pd")
    p.add_argument("--p-steps", type=int, default=100, help="pd mode: p grid 0..1 in this many steps")
    p.add_argument("--m-max", type=int, default=250, help="nmr mode: readout times m/(4J), m = 0..m_max")
    p.add_argument("--j-hz", type=float, default=215.1)
    p.add_argument("--no-amplitude", action="store_true", help="nmr mode: phase noise only")
    p.add_argument("--out", metavar="CSV")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("witness", help="nonlinear classicality witness")
    _add_state(p)
    _add_optimizer(p)
    _add_relaxation(p)
    p.add_argument("--seed", type=int, default=0, help="seed for the local witness directions")
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.add_argument("--route", choices=("direct", "circuit"), default="direct")
    p.add_argument("--steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--table", action="store_true", help="witness and correlations of the three reference states")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("tomo", help="simulate nine-setting tomography and reconstruct")
    _add_state(p)
    p.add_argument("--random", action="store_true", help="random deviation matrix (default without a state)")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian sigma on each line intensity")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="CSV", help="write the simulated records")
    p.add_argument("--replay", metavar="CSV", help="reconstruct from stored records")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("prepare", help="run a state-preparation sequence")
    p.add_argument("sequence")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.set_defaults(func=cmd_prepare)
    return ap


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, stdout)
    except ConfigError as exc:
        sys.stderr.write("configuration error:\n" + "".join(f"  - {p}\n" for p in exc.problems))
        return EXIT_CONFIG
    except (InvalidStateError, ChannelError) as exc:
        sys.stderr.write(f"non-physical input: {exc}\n")
        return EXIT_PHYSICS
    except TomographyError as exc:
        sys.stderr.write(f"tomography failed: {exc}\n")
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
