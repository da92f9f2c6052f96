"""Hybrid least-squares / Adam training of one network phase.

Each epoch draws a fresh quadrature sample, solves for the output weights
through a diagonally scaled, Tikhonov-regularized normal system, and then
takes one Adam step on the hidden parameters using the exact gradient of the
discretized loss at the new output weights.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import formulations as fm
from .diffnet import ContractViolation, backprop, evaluate
from .quadrature import make_sample

log = logging.getLogger(__name__)


class NumericError(FloatingPointError):
    pass


class SolverError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    learning_rate: float = 1e-3
    n_points: int = 9000
    lam: float = 1e-8
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    resample_each_epoch: bool = True
    rule: str = "p3"
    mode: str = "lsadam"  # or "adam"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0 or self.lam < 0:
            raise ValueError("learning rate must be positive and lambda nonnegative")
        if self.rule == "p3" and self.n_points % 3:
            raise ValueError("p3 quadrature needs n_points divisible by 3")
        if self.mode not in ("lsadam", "adam"):
            raise ValueError(f"unknown training mode {self.mode!r}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size), np.zeros(size), 0)


def ls_step(qf, lam=1e-8):
    """Output weights minimizing the scaled, regularized quadratic.

    Solves (S⁻¹HS⁻¹ + λI) w̃ = S⁻¹f with S = diag(√H_jj) and returns S⁻¹w̃.
    Vanishing diagonal entries are floored at 1e-12·max H_jj.
    """
    H, f = np.asarray(qf.H, dtype=float), np.asarray(qf.f, dtype=float)
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(f))):
        raise NumericError("non-finite entries in the least-squares system")
    s = scaling(H)
    Ht = H / np.outer(s, s)
    Ht[np.diag_indices_from(Ht)] += lam
    try:
        wt = sla.solve(Ht, f / s, assume_a="sym", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(str(exc)) from exc
    if not np.all(np.isfinite(wt)):
        raise SolverError("singular scaled system")
    return wt / s


def scaling(H):
    d = np.diag(H).copy()
    dmax = d.max() if d.size else 0.0
    floor = 1e-12 * dmax if dmax > 0 else 1e-30
    return np.sqrt(np.maximum(d, floor))


def adam_step(theta, grads, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """One bias-corrected Adam update; returns (new_theta, new_state)."""
    g = np.asarray(grads, dtype=float)
    if g.shape != state.m.shape:
        raise ContractViolation("gradient does not match the optimizer state")
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient")
    b1, b2 = betas
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    mhat = m / (1.0 - b1**t)
    vhat = v / (1.0 - b2**t)
    return theta - lr * mhat / (np.sqrt(vhat) + eps), AdamState(m, v, t)


# ---------------------------------------------------------------- one epoch


def _dirac_batch(problem, params, spec):
    if not problem.dirac:
        return None
    return evaluate(params, spec, np.array([0.0]), 1)


def _forward(problem, params, spec, ctx):
    batch = evaluate(params, spec, ctx.nodes, fm.required_order(problem))
    zb = _dirac_batch(problem, params, spec)
    return batch, zb


def _outputs(batch, w):
    return [batch.phi @ w, batch.dphi @ w if batch.dphi is not None else None,
            batch.d2phi @ w if batch.d2phi is not None else None]


def loss_and_hidden_gradient(problem, params, spec, ctx, batch=None, zb=None):
    """Discretized loss and its gradient in θ_H at the current output weights."""
    if batch is None:
        batch, zb = _forward(problem, params, spec, ctx)
    w = params.w_out
    u = _outputs(batch, w)
    val = float(ctx.weights @ fm.integrand(problem, ctx, u))
    g = [None if a is None else np.outer(a, w) for a in fm.point_adjoints(problem, ctx, u)]
    grad = backprop(params, spec, batch, *g)
    if zb is not None:
        val += float(zb.dphi[0] @ w)
        grad = grad + backprop(params, spec, zb, None, np.outer([1.0], w))
    return val, grad


def discretized_loss(problem, params, spec, ctx):
    batch, zb = _forward(problem, params, spec, ctx)
    u = _outputs(batch, params.w_out)
    val = float(ctx.weights @ fm.integrand(problem, ctx, u))
    if zb is not None:
        val += float(zb.dphi[0] @ params.w_out)
    return val


def dense_loss(problem, u_prev, params, spec, grid_size=10_000):
    """Loss on a deterministic trapezoid grid, independent of training samples."""
    x = np.linspace(problem.domain[0], problem.domain[1], grid_size)
    wq = np.full(grid_size, x[1] - x[0])
    wq[[0, -1]] *= 0.5

    class _S:
        nodes, weights = x, wq

    return fm.loss_value(problem, u_prev, fm.NetworkHandle(params, spec), _S)


@dataclass
class PhaseResult:
    params: object
    losses: list = field(default_factory=list)
    final_loss: float = float("nan")
    failed: bool = False
    message: str = ""


def train_phase(problem, net, spec, u_prev, cfg, seed=0, callback=None):
    """Train one network against the frozen iterate ``u_prev``.

    ``callback(epoch, params, loss)`` runs after each epoch. Returns a
    :class:`PhaseResult`; a non-finite loss stops training early with
    ``failed=True`` and the last finite parameters.
    """
    rng = np.random.default_rng(seed)
    params = net
    result = PhaseResult(params=params)
    if cfg.epochs == 0:
        return result
    ls = cfg.mode == "lsadam"
    theta = params.hidden_vector()
    if not ls:
        theta = np.concatenate([theta, params.w_out])
    state = AdamState.zeros(theta.size)
    nh = params.n_hidden
    sample = None
    for epoch in range(cfg.epochs):
        if sample is None or cfg.resample_each_epoch:
            sample = make_sample(cfg.rule, cfg.n_points, problem.domain, rng)
            ctx = fm.prepare(problem, u_prev, sample)
        try:
            batch, zb = _forward(problem, params, spec, ctx)
            if ls:
                qf = fm.assemble_from(problem, ctx, batch, None if zb is None else zb.dphi[0])
                params = params.with_output(ls_step(qf, cfg.lam))
            _, grad = loss_and_hidden_gradient(problem, params, spec, ctx, batch, zb)
            if not ls:
                qf = fm.assemble_from(problem, ctx, batch, None if zb is None else zb.dphi[0])
                grad = np.concatenate([grad, qf.gradient(params.w_out)])
            theta, state = adam_step(theta, grad, state, cfg.learning_rate, cfg.betas, cfg.eps)
            new = params.with_hidden_vector(theta[:nh])
            if not ls:
                new = new.with_output(theta[nh:])
            val = discretized_loss(problem, new, spec, ctx)
        except (NumericError, SolverError, FloatingPointError) as exc:
            result.failed, result.message = True, f"epoch {epoch}: {exc}"
            log.warning("training aborted at epoch %d: %s", epoch, exc)
            break
        if not np.isfinite(val):
            result.failed, result.message = True, f"epoch {epoch}: non-finite loss"
            break
        params = new
        result.losses.append(val)
        if callback is not None:
            callback(epoch, params, val)
    result.params = params
    result.final_loss = dense_loss(problem, u_prev, params, spec)
    return result


def write_loss_history(path, losses, final_loss):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "exact_grid_loss"])
        for i, v in enumerate(losses):
            last = i == len(losses) - 1
            writer.writerow([i, repr(float(v)), repr(float(final_loss)) if last else ""])


def gradient_variance(problem, params, spec, u_prev, rule="vanilla", n_points=300, reps=200, seed=0):
    """Total variance (trace of covariance) of the stochastic θ_H gradient over resamples."""
    rng = np.random.default_rng(seed)
    grads = []
    for _ in range(reps):
        ctx = fm.prepare(problem, u_prev, make_sample(rule, n_points, problem.domain, rng))
        grads.append(loss_and_hidden_gradient(problem, params, spec, ctx)[1])
    G = np.array(grads)
    return float(G.var(axis=0, ddof=1).sum()), G.mean(axis=0)
