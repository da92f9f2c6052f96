"""Approach-1 Uzawa driver: the solution is u⁰ plus a sum of trained corrections.

    weak       u^{k+1} = u^k + ρ r^k
    strong     u^{k+1} = u^k + ρ δ^k
    ultraweak  u^{k+1} = u^k - ρ (r^k)''      (u⁰ = -v'' from the adjoint Ritz problem)

With graph inner products the optimal step is ρ = 1 in all three cases.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import formulations as fm
from .diffnet import NetworkParams, NetworkSpec, build_network
from .spectral import (
    DEFAULT_GRID,
    DegenerateSpectrumError,
    InitPlan,
    PhaseDescriptor,
    init_plan_for_phase,
    strategy,
    uniform_grid,
)
from .trainer import TrainConfig, train_phase

log = logging.getLogger(__name__)

ROLES = ("initial_u0", "weak_residual", "strong_correction", "ultraweak_test")


@dataclass
class Component:
    params: NetworkParams
    spec: NetworkSpec
    role: str
    scale: float = 1.0
    # "value": the network itself; "neg_second_derivative": -v''
    kind: str = "value"

    def handle(self):
        if self.kind == "value":
            return fm.NetworkHandle(self.params, self.spec)
        return fm.NegSecondDerivative(self.params, self.spec)

    def evaluate(self, x, order=0):
        return [self.scale * v for v in self.handle().evaluate(x, order)]


@dataclass
class UzawaState:
    formulation: str
    components: list = field(default_factory=list)
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    failed: bool = False
    message: str = ""

    def evaluate(self, x, order=0):
        if self.formulation == "ultraweak" and order > 0:
            raise fm.Unsupported("ultraweak iterates are only in L²; no derivatives")
        x = np.asarray(x, dtype=float)
        out = [np.zeros_like(x) for _ in range(order + 1)]
        for comp in self.components:
            for acc, v in zip(out, comp.evaluate(x, order)):
                acc += v
        return out

    def with_component(self, comp):
        return UzawaState(self.formulation, self.components + [comp])


@dataclass(frozen=True)
class PhaseConfig:
    spec: NetworkSpec
    train: TrainConfig


def evaluate_solution(state, points, order=0):
    return state.evaluate(points, order)


def _trapezoid_weights(x):
    w = np.empty_like(x)
    dx = np.diff(x)
    w[0], w[-1] = 0.5 * dx[0], 0.5 * dx[-1]
    w[1:-1] = 0.5 * (dx[:-1] + dx[1:])
    return w


def error_grid(exact, grid_size, domain=(-1.0, 1.0)):
    """Trapezoid grid; for a jump at 0 an even point count keeps 0 off the nodes."""
    if getattr(exact, "jump_at", None) is not None and grid_size % 2:
        grid_size += 1
    return np.linspace(domain[0], domain[1], grid_size)


def error_report(state, exact, norm="l2", grid_size=20_000):
    """Relative error ‖u - u*‖ / ‖u*‖ in the L² norm or the H¹ seminorm (absolute if u* = 0)."""
    if norm not in ("l2", "h1_semi"):
        raise ValueError(f"unknown norm {norm!r}")
    order = 1 if norm == "h1_semi" else 0
    if norm == "h1_semi" and getattr(state, "formulation", None) == "ultraweak":
        raise fm.Unsupported("H¹ seminorm is undefined for ultraweak iterates")
    x = error_grid(exact, grid_size)
    wq = _trapezoid_weights(x)
    u = state.evaluate(x, order)[order]
    ue = exact.evaluate(x, order)[order]
    num = np.sqrt(wq @ ((u - ue) ** 2))
    den = np.sqrt(wq @ (ue * ue))
    # a zero exact solution has no relative scale; report the absolute error
    return float(num / den) if den > 0 else float(num)


def norm_for(problem):
    return "l2" if problem.formulation == "ultraweak" else "h1_semi"


def _role(formulation, phase):
    if phase == 0:
        return "initial_u0"
    return {"weak": "weak_residual", "strong": "strong_correction", "ultraweak": "ultraweak_test"}[formulation]


def phase_artifacts(problem, state, phase, grid):
    """Grid signals the spectral initializer may need for ``phase``."""
    if phase == 0:
        src = fm.dirac_prime_proxy(grid) if problem.dirac else problem.f(grid)
        return {"source_term": src}
    if phase == 1:
        return {"strong_residual": fm.strong_residual_grid(problem, state, grid)}
    last = state.components[-1]
    vals = last.evaluate(grid, 0)[0]
    if problem.formulation == "weak":
        return {"prior_weak_residual": vals}
    return {"prior_correction_proxy": vals}


def _plan(problem, state, phase, grid, alpha):
    desc = PhaseDescriptor(problem.formulation, phase)
    try:
        return init_plan_for_phase(desc, phase_artifacts(problem, state, phase, grid),
                                   alpha=alpha, domain=problem.domain)
    except DegenerateSpectrumError:
        # nothing to match (e.g. f = 0): use the lowest resolvable frequency
        s, tag = strategy(desc)
        w1 = 2 * np.pi / (problem.domain[1] - problem.domain[0])
        log.warning("phase %d: %s is identically zero; using the band [%g, %g]", phase, tag, w1, w1)
        return InitPlan(w1, w1, alpha, s, tag)


def run_approach1(problem, schedule, alpha=0.05, seed=0, rho=1.0, grid_size=DEFAULT_GRID,
                  error_every=0, error_grid_size=4001, on_phase=None):
    """Run u⁰ followed by ``len(schedule) - 1`` corrections.

    ``error_every > 0`` records the running relative error every that many
    epochs in ``state.trace`` as (phase, epoch, loss, relative_error).
    ``on_phase(phase, plan, state)`` is called after each phase.
    """
    state = UzawaState(problem.formulation)
    grid = uniform_grid(grid_size, problem.domain)
    norm = norm_for(problem)
    exact = problem.exact
    for phase, pc in enumerate(schedule):
        # the band is recorded even when the network has no Fourier layer to use it
        plan = _plan(problem, state, phase, grid, alpha)
        net = build_network(pc.spec, plan if pc.spec.fourier else None,
                            np.random.default_rng([seed, phase, 0]))
        kind = "neg_second_derivative" if problem.formulation == "ultraweak" else "value"
        scale = 1.0 if phase == 0 else rho
        role = _role(problem.formulation, phase)

        def callback(epoch, params, loss, _phase=phase, _spec=pc.spec):
            rel = float("nan")
            last = epoch == pc.train.epochs - 1
            if exact is not None and error_every and (epoch % error_every == 0 or last):
                trial = state.with_component(Component(params, _spec, role, scale, kind))
                rel = error_report(trial, exact, norm, error_grid_size)
            state.trace.append((_phase, epoch, loss, rel))

        res = train_phase(problem, net, pc.spec, state if phase else None, pc.train,
                          seed=[seed, phase, 1], callback=callback)
        state.components.append(Component(res.params, pc.spec, role, scale, kind))
        record = {
            "phase": phase,
            "role": role,
            "epochs": len(res.losses),
            "final_loss": res.final_loss,
            "omega_min": plan.omega_min,
            "omega_max": plan.omega_max,
            "s_used": plan.s_used,
            "source_tag": plan.source_tag,
            "relative_error": error_report(state, exact, norm) if exact is not None else float("nan"),
        }
        state.history.append(record)
        log.info("phase %d: %s", phase, record)
        if on_phase is not None:
            on_phase(phase, plan, state)
        if res.failed:
            state.failed, state.message = True, f"phase {phase}: {res.message}"
            break
    return state


def run_deep_ritz_baseline(problem, spec, cfg, seed=0, alpha=0.05, **kwargs):
    """Single-phase minimization of ½ b(u, u) - ℓ(u) (weak form only)."""
    if problem.formulation != "weak":
        raise fm.ConfigurationError("the Ritz baseline needs the weak formulation")
    return run_approach1(problem, [PhaseConfig(spec, cfg)], alpha=alpha, seed=seed, **kwargs)


# ------------------------------------------------------------ serialization


def save_state(state, directory):
    """Write manifest.json, one .npz per component, and history.csv."""
    os.makedirs(directory, exist_ok=True)
    comps = []
    for i, comp in enumerate(state.components):
        fname = f"component_{i:02d}.npz"
        np.savez(os.path.join(directory, fname), **comp.params.to_arrays())
        comps.append({
            "file": fname,
            "role": comp.role,
            "scale": comp.scale,
            "kind": comp.kind,
            "spec": comp.spec.to_dict(),
        })
    manifest = {"formulation": state.formulation, "components": comps,
                "failed": state.failed, "message": state.message}
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_history(state, os.path.join(directory, "history.csv"))


def load_state(directory):
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    state = UzawaState(manifest["formulation"], failed=manifest["failed"], message=manifest["message"])
    for c in manifest["components"]:
        with np.load(os.path.join(directory, c["file"])) as data:
            params = NetworkParams.from_arrays(dict(data))
        state.components.append(Component(params, NetworkSpec(**c["spec"]), c["role"], c["scale"], c["kind"]))
    return state


HISTORY_FIELDS = ("phase", "role", "epochs", "final_loss", "omega_min", "omega_max",
                  "s_used", "source_tag", "relative_error")


def write_history(state, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_FIELDS)
        for rec in state.history:
            writer.writerow([_fmt(rec[k]) for k in HISTORY_FIELDS])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)
