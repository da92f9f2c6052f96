"""Matrix-level Uzawa iterations for checking step sizes, rates and tolerance bounds.

With Euclidean inner products on both sides the iteration for B u = f is

    r^k = f - B u^k,   δ^k = Bᵀ r^k,   u^{k+1} = u^k + ρ δ^k,

so the error obeys e^{k+1} = (I - ρBᵀB) e^k. The inexact variants replace
r^k and δ^k by approximations with relative error at most ε (and, for the
second approach, also perturb the updated iterate by at most ε‖ρδ_ε‖).
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .diffnet import ConfigurationError


class SingularOperatorError(np.linalg.LinAlgError):
    pass


@dataclass
class LinearProblem:
    B: np.ndarray
    f: np.ndarray = None
    u_star: np.ndarray = None
    norm_B: float = field(init=False)
    inv_norm: float = field(init=False)

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape[0] != B.shape[1]:
            raise ConfigurationError("B must be square")
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] <= 0 or not np.isfinite(sv[0] / sv[-1]) or sv[0] / sv[-1] > 1e12:
            raise SingularOperatorError("B is singular or numerically singular")
        self.B = B
        self.sigmas = sv
        self.norm_B = float(sv[0])
        self.inv_norm = float(1.0 / sv[-1])
        if self.u_star is None:
            if self.f is None:
                self.u_star = np.ones(B.shape[0])
            else:
                self.u_star = np.linalg.solve(B, np.asarray(self.f, dtype=float))
        self.u_star = np.asarray(self.u_star, dtype=float)
        if self.f is None:
            self.f = B @ self.u_star
        self.f = np.asarray(self.f, dtype=float)
        res = np.linalg.norm(B @ self.u_star - self.f)
        if res > 1e-10 * max(1.0, np.linalg.norm(self.f)):
            raise ConfigurationError("u_star does not solve B u = f")

    @property
    def size(self):
        return self.B.shape[0]

    @property
    def sigma_min(self):
        return 1.0 / self.inv_norm


@dataclass(frozen=True)
class PerturbationModel:
    epsilon: float = 0.0
    mode: str = "worst_case"

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigurationError("epsilon must be nonnegative")
        if self.mode not in ("worst_case", "random_sphere"):
            raise ConfigurationError(f"unknown perturbation mode {self.mode!r}")


def _orthogonal(m, rng):
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


def problem_from_singular_values(sigmas, seed=None):
    """B = U diag(σ) Vᵀ with Haar-random orthogonal U, V."""
    rng = np.random.default_rng(seed)
    s = np.asarray(sigmas, dtype=float)
    m = s.size
    B = _orthogonal(m, rng) @ np.diag(s) @ _orthogonal(m, rng).T
    return LinearProblem(B, u_star=rng.standard_normal(m))


def random_problem(m=10, cond=None, seed=None, max_cond=50.0, gap=0.05):
    """Random well-conditioned problem with σ_min = 1 and σ_max = cond.

    Interior singular values are kept a fraction ``gap`` of the spread away
    from both ends, so the two extreme modes dominate the asymptotic rate.
    """
    rng = np.random.default_rng(seed)
    if cond is None:
        cond = float(np.exp(rng.uniform(np.log(1.5), np.log(min(20.0, max_cond)))))
    if not 1.0 <= cond <= max_cond:
        raise ConfigurationError(f"condition number must lie in [1, {max_cond}]")
    spread = cond - 1.0
    inner = rng.uniform(1.0 + gap * spread, cond - gap * spread, max(m - 2, 0))
    sig = np.sort(np.concatenate([[1.0, cond], inner]))[::-1]
    return problem_from_singular_values(sig, rng)


def certification_ensemble(n=50, m=10, max_cond=1.2, seed=0):
    """``n`` random problems with condition numbers drawn from [1, max_cond].

    At ε = 0.9·ε_max the worst-case one-step factor is roughly
    0.885 + 0.115‖I - ρ*BᵀB‖, so a 10⁻⁸ reduction in 200 adversarial steps
    needs a condition number of about 1.25 or less.
    """
    rng = np.random.default_rng(seed)
    conds = rng.uniform(1.0, max_cond, n)
    return [random_problem(m, cond=float(c), seed=rng) for c in conds]


def iteration_norm(problem, rho):
    """‖I - ρBᵀB‖₂ = max_σ |1 - ρσ²|."""
    return float(np.max(np.abs(1.0 - rho * problem.sigmas**2)))


def optimal_rho(problem):
    """(ρ*, rate) = (2/(σ_max² + σ_min²), (σ_max² - σ_min²)/(σ_max² + σ_min²))."""
    a, b = problem.norm_B**2, problem.sigma_min**2
    return 2.0 / (a + b), (a - b) / (a + b)


@dataclass
class UzawaRun:
    errors: np.ndarray
    factors: np.ndarray
    residual_norms: np.ndarray
    correction_norms: np.ndarray
    bound_factor: float = float("nan")

    def measured_rate(self, tail=0.5):
        """Geometric-mean contraction over the last ``tail`` fraction of steps."""
        n = len(self.factors)
        k0 = min(int(n * (1.0 - tail)), n - 1)
        e0, e1 = self.errors[k0], self.errors[-1]
        if e1 == 0.0 or e0 == 0.0:
            return 0.0
        return float((e1 / e0) ** (1.0 / (n - k0)))


def _start(problem, u0):
    return np.zeros(problem.size) if u0 is None else np.asarray(u0, dtype=float).copy()


def run_exact_uzawa(problem, rho, iters, u0=None):
    """Exact iteration; returns the error, residual and correction norm histories.

    The recursion is carried out on e = u* - u (using r = f - Bu = Be), which
    is algebraically the same iteration but keeps tiny errors free of
    cancellation.
    """
    if iters < 1:
        raise ConfigurationError("iters must be >= 1")
    B = problem.B
    e = problem.u_star - _start(problem, u0)
    errs, rs, ds = [np.linalg.norm(e)], [], []
    for _ in range(iters):
        r = B @ e
        d = B.T @ r
        rs.append(np.linalg.norm(r))
        ds.append(np.linalg.norm(d))
        e = e - rho * d
        errs.append(np.linalg.norm(e))
    errs = np.array(errs)
    return UzawaRun(errs, _ratios(errs), np.array(rs), np.array(ds), iteration_norm(problem, rho))


def _ratios(errs):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = errs[1:] / errs[:-1]
    return np.where(errs[:-1] > 0, out, 0.0)


def asymptotic_rate(problem, rho, iters=2000, seed=None):
    """‖e^{k+1}‖/‖e^k‖ after ``iters`` normalized exact steps from a random e⁰."""
    rng = np.random.default_rng(seed)
    M = np.eye(problem.size) - rho * problem.B.T @ problem.B
    e = rng.standard_normal(problem.size)
    e /= np.linalg.norm(e)
    ratio = 0.0
    for _ in range(iters):
        e = M @ e
        ratio = np.linalg.norm(e)
        if ratio == 0.0:
            return 0.0
        e /= ratio
    return float(ratio)


def tolerance_bound(problem, rho, approach=1):
    """Largest ε for which the inexact approach is guaranteed to contract."""
    if not 0.0 < rho < 2.0 / problem.norm_B**2:
        raise ConfigurationError("rho must lie in (0, 2/‖B‖²)")
    c = (1.0 - iteration_norm(problem, rho)) / (rho * problem.norm_B**2)
    if approach == 1:
        return float(np.sqrt(1.0 + c) - 1.0)
    if approach == 2:
        return float(np.cbrt(1.0 + c) - 1.0)
    raise ConfigurationError("approach must be 1 or 2")


def bound_factor(problem, rho, epsilon, approach=1):
    """Per-step contraction bound for the inexact approaches."""
    e = epsilon
    poly = e * e + 2 * e if approach == 1 else e**3 + 3 * e * e + 3 * e
    return iteration_norm(problem, rho) + rho * poly * problem.norm_B**2


def _unit(v, rng):
    n = np.linalg.norm(v)
    if n > 0:
        return v / n
    v = rng.standard_normal(v.size)
    return v / np.linalg.norm(v)


def run_inexact_uzawa(problem, rho, perturb, approach=1, iters=200, seed=None, u0=None):
    """Inexact iteration with perturbations of exactly the allowed relative size.

    ``worst_case`` aligns every perturbation with the direction that grows the
    next error the most (one power-iteration step on the amplification map);
    ``random_sphere`` draws it uniformly from the sphere of that radius.
    """
    if approach not in (1, 2):
        raise ConfigurationError("approach must be 1 or 2")
    rng = np.random.default_rng(seed)
    B = problem.B
    eps = perturb.epsilon
    worst = perturb.mode == "worst_case"
    e = problem.u_star - _start(problem, u0)
    errs, rs, ds = [np.linalg.norm(e)], [], []

    def direction(target):
        return _unit(target, rng) if worst else _unit(rng.standard_normal(e.size), rng)

    for _ in range(iters):
        r = B @ e
        rs.append(np.linalg.norm(r))
        # Δr enters the error as -ρBᵀΔr, which grows it most when Δr ∝ -B(e - ρBᵀr)
        r_eps = r + eps * rs[-1] * direction(-(B @ (e - rho * (B.T @ r))))
        d = B.T @ r_eps
        d_eps = d + eps * np.linalg.norm(d) * direction(-(e - rho * d))
        ds.append(np.linalg.norm(d_eps))
        e = e - rho * d_eps
        if approach == 2:
            # u^{k+1}_ε = u^{k+1} + Δu, so the error moves by -Δu
            e = e - eps * rho * ds[-1] * direction(-e)
        errs.append(np.linalg.norm(e))
    errs = np.array(errs)
    return UzawaRun(errs, _ratios(errs), np.array(rs), np.array(ds),
                    bound_factor(problem, rho, eps, approach))


SWEEP_FACTORS = (0.0, 0.25, 0.5, 0.75, 0.9, 1.1)
SWEEP_FIELDS = ("epsilon", "rho", "measured_rate", "bound_rate", "converged")


@dataclass
class SweepRow:
    epsilon: float
    rho: float
    measured_rate: float
    bound_rate: float
    converged: bool


def epsilon_sweep(problem, approach=1, factors=SWEEP_FACTORS, rho=None, iters=200,
                  mode="worst_case", seed=0, tol=1e-8):
    """Run the inexact scheme at ε = factor·ε_max for each factor."""
    if rho is None:
        rho = optimal_rho(problem)[0]
    eps_max = tolerance_bound(problem, rho, approach)
    rows = []
    for i, fac in enumerate(factors):
        eps = fac * eps_max
        run = run_inexact_uzawa(problem, rho, PerturbationModel(eps, mode), approach, iters, seed=[seed, i])
        rows.append(SweepRow(
            epsilon=float(eps),
            rho=float(rho),
            measured_rate=run.measured_rate(),
            bound_rate=float(run.bound_factor),
            converged=bool(run.errors[-1] < tol * run.errors[0]),
        ))
    return rows


def write_sweep(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_FIELDS)
        for r in rows:
            writer.writerow([repr(r.epsilon), repr(r.rho), repr(r.measured_rate),
                             repr(r.bound_rate), str(r.converged).lower()])
