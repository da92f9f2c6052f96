"""Command-line experiment runner.

    runn --experiment weak_smooth_lsadam --seed 0 --out runs/ws0

Each run writes plot-ready CSVs and a manifest.json into ``--out``. An
optional ``--config`` JSON file overrides the built-in schedules::

    {
      "phases": [{"epochs": 200, "learning_rate": 1e-3, "n_points": 900,
                  "width": 30, "depth": 1}, ...],
      "n_phases": 2,              # truncate the schedule
      "error_every": 10,          # relative-error logging stride (epochs)
      "linlab": {"m": 10, "cond": 2.0, "iters": 200, "mode": "worst_case"},
      "quadrature": {"reps": 2000, "K": [4, 8, 16, 32, 64]}
    }

Exit status: 0 on success, 1 on a runtime failure (partial artifacts are
kept), 2 on a usage error.
"""

import argparse
import copy
import csv
import json
import logging
import os
import platform
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy
import scipy.linalg as sla

from . import _backend, __version__
from . import formulations as fm
from . import linlab, quadrature, uzawa
from .diffnet import NetworkSpec
from .trainer import TrainConfig

log = logging.getLogger("runn")

EXPERIMENTS = (
    "weak_smooth_adam",
    "weak_smooth_lsadam",
    "weak_highfreq",
    "ultraweak_dirac_prime",
    "linlab_sweep",
    "quadrature_variance",
)

SOLUTION_POINTS = 2001
ULTRAWEAK_U0_WIDTH = 30


def _phase(width, epochs, lr, n_points, depth=1, fourier=True, activation="tanh", mode="lsadam"):
    return {
        "width": width, "depth": depth, "fourier": fourier, "activation": activation,
        "epochs": epochs, "learning_rate": lr, "n_points": n_points, "mode": mode,
    }


# Built-in per-phase defaults: phase 0 trains u⁰ (or v with u⁰ = -v''), later phases the corrections.
SCHEDULES = {
    "weak_smooth_adam": [
        _phase(30, 1000, 9e-3, 9000, mode="adam"),
        _phase(30, 2000, 1e-4, 9000, mode="adam"),
        _phase(30, 3000, 1e-5, 9000, mode="adam"),
    ],
    "weak_smooth_lsadam": [
        _phase(30, 1000, 1e-2, 9000),
        _phase(30, 1000, 1e-3, 9000),
        _phase(30, 1000, 1e-3, 9000),
    ],
    "weak_highfreq": [
        _phase(30, 300, 1e-3, 9000, depth=2),
        _phase(30, 1000, 1e-3, 9000, depth=2),
        _phase(30, 1000, 1e-3, 9000, depth=2),
    ],
    "ultraweak_dirac_prime": [
        _phase(ULTRAWEAK_U0_WIDTH, 100, 8e-5, 3000, fourier=False, activation="relu_cubed"),
        _phase(30, 2500, 8e-5, 4500, depth=2, activation="relu_cubed"),
        _phase(30, 2500, 8e-5, 6000, depth=2, activation="relu_cubed"),
    ],
}


def problem_for(experiment):
    if experiment.startswith("weak_smooth"):
        return fm.sine_problem(np.pi, "weak")
    if experiment == "weak_highfreq":
        return fm.sine_problem(40 * np.pi, "weak")
    if experiment == "ultraweak_dirac_prime":
        return fm.dirac_prime_problem()
    raise ValueError(f"{experiment!r} is not a training experiment")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    output_dir: str = "."
    overrides: dict = field(default_factory=dict)
    alpha: float = 0.05

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")


def resolve_schedule(config):
    """Per-phase dictionaries after applying overrides."""
    phases = copy.deepcopy(SCHEDULES[config.experiment])
    ov = config.overrides
    for i, patch in enumerate(ov.get("phases", [])[: len(phases)]):
        unknown = set(patch) - set(phases[i])
        if unknown:
            raise ValueError(f"unknown phase keys {sorted(unknown)}")
        phases[i].update(patch)
    if "n_phases" in ov:
        phases = phases[: int(ov["n_phases"])]
    return phases


def build_schedule(phases):
    out = []
    for p in phases:
        spec = NetworkSpec(width=p["width"], depth=p["depth"], fourier=p["fourier"], activation=p["activation"])
        cfg = TrainConfig(epochs=p["epochs"], learning_rate=p["learning_rate"], n_points=p["n_points"], mode=p["mode"])
        out.append(uzawa.PhaseConfig(spec, cfg))
    return out


# ------------------------------------------------------------------ writers


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _num(v):
    return repr(float(v))


def write_convergence(path, trace):
    fh, w = _writer(path)
    with fh:
        w.writerow(["phase", "epoch", "loss", "relative_error"])
        for phase, epoch, loss, rel in trace:
            w.writerow([phase, epoch, _num(loss), _num(rel)])


def write_solution(path, state, exact):
    x = np.linspace(-1.0, 1.0, SOLUTION_POINTS)
    u = state.evaluate(x, 0)[0]
    ue = exact.evaluate(x, 0)[0]
    fh, w = _writer(path)
    with fh:
        w.writerow(["x", "u", "u_exact", "error"])
        for row in zip(x, u, ue, u - ue):
            w.writerow([_num(v) for v in row])


def environment():
    return {
        "runn": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "backend": _backend.BACKEND,
    }


def write_manifest(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -------------------------------------------------------------- experiments


def _run_training(config, out):
    phases = resolve_schedule(config)
    problem = problem_for(config.experiment)
    every = int(config.overrides.get("error_every", 10))
    spectra = []

    def on_phase(k, plan, _state):
        if plan.curve is None:
            return
        path = os.path.join(out, f"spectrum_{k}.csv")
        plan.curve.to_csv(path)
        spectra.append(os.path.basename(path))

    state = uzawa.run_approach1(problem, build_schedule(phases), alpha=config.alpha, seed=config.seed,
                                error_every=every, on_phase=on_phase)
    write_convergence(os.path.join(out, "convergence.csv"), state.trace)
    write_solution(os.path.join(out, "solution.csv"), state, problem.exact)
    uzawa.save_state(state, os.path.join(out, "state"))
    result = {
        "phases": phases,
        "history": state.history,
        "spectra": spectra,
        "failed": state.failed,
        "message": state.message,
    }
    return (1 if state.failed else 0), result


def _run_linlab(config, out):
    opts = {"m": 10, "cond": 2.0, "iters": 200, "mode": "worst_case"}
    opts.update(config.overrides.get("linlab", {}))
    problem = linlab.random_problem(int(opts["m"]), cond=float(opts["cond"]), seed=config.seed)
    rho, rate = linlab.optimal_rho(problem)
    result = {"linlab": opts, "rho_star": rho, "exact_rate": rate, "files": {}}
    for approach in (1, 2):
        rows = linlab.epsilon_sweep(problem, approach, rho=rho, iters=int(opts["iters"]),
                                    mode=opts["mode"], seed=config.seed)
        name = f"linlab_sweep_approach{approach}.csv"
        linlab.write_sweep(os.path.join(out, name), rows)
        result["files"][name] = {"epsilon_max": linlab.tolerance_bound(problem, rho, approach)}
    return 0, result


def _run_quadrature(config, out):
    opts = {"reps": 2000, "K": [4, 8, 16, 32, 64]}
    opts.update(config.overrides.get("quadrature", {}))
    fh, w = _writer(os.path.join(out, "quadrature_variance.csv"))
    slopes = {}
    with fh:
        w.writerow(["rule", "K", "N_K", "variance"])
        for rule in ("p3", "vanilla"):
            table = quadrature.variance_probe(np.exp, rule, opts["K"], int(opts["reps"]), seed=config.seed)
            slopes[rule] = table.slope
            for K, N, v in zip(table.K, table.n_points, table.variance):
                w.writerow([rule, int(K), int(N), _num(v)])
    return 0, {"quadrature": opts, "slopes": slopes}


def run_experiment(config):
    """Run one experiment and write its artifacts; returns the exit status."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    manifest = {"config": asdict(config), "environment": environment()}
    manifest["config"].pop("output_dir")
    status = 1
    try:
        if config.experiment == "linlab_sweep":
            status, result = _run_linlab(config, out)
        elif config.experiment == "quadrature_variance":
            status, result = _run_quadrature(config, out)
        else:
            status, result = _run_training(config, out)
        manifest["result"] = result
    except Exception as exc:  # noqa: BLE001 - reported through the exit status
        log.exception("experiment failed")
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        status = 1
    manifest["status"] = status
    write_manifest(os.path.join(out, "manifest.json"), _jsonable(manifest))
    return status


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# ------------------------------------------------------------ FD reference


@dataclass
class ReferenceResult:
    x: np.ndarray
    u: np.ndarray
    l2_error: float
    max_error: float


def reference_check(problem, cells=100_000):
    """Second-order finite differences for -u'' = f with zero boundary values.

    Errors are measured against ``problem.exact``. The δ' problem has no
    pointwise source, so its exact solution is returned unchanged.
    """
    a, b = problem.domain
    x = np.linspace(a, b, cells + 1)
    if problem.dirac:
        u = problem.exact.evaluate(x, 0)[0]
        return ReferenceResult(x, u, 0.0, 0.0)
    h = (b - a) / cells
    n = cells - 1
    ab = np.empty((3, n))
    ab[0], ab[1], ab[2] = -1.0, 2.0, -1.0
    rhs = h * h * problem.f(x[1:-1])
    u = np.zeros(cells + 1)
    u[1:-1] = sla.solve_banded((1, 1), ab, rhs)
    err = u - problem.exact.evaluate(x, 0)[0]
    w = np.full(x.size, h)
    w[[0, -1]] *= 0.5
    return ReferenceResult(x, u, float(np.sqrt(w @ (err * err))), float(np.abs(err).max()))


# --------------------------------------------------------------------- main


def parser():
    p = argparse.ArgumentParser(prog="runn", description="Run a numerical experiment and write CSV artifacts.")
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file with overrides")
    p.add_argument("--alpha", type=float, default=0.05, help="spectral band quantile")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    p = parser()
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            p.error(f"cannot read config: {exc}")
    try:
        config = ExperimentConfig(args.experiment, args.seed, args.out, overrides, args.alpha)
        if config.experiment in SCHEDULES:
            resolve_schedule(config)
    except ValueError as exc:
        p.error(str(exc))
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())
