"""Loss functionals for -u'' = f on (-1, 1) with homogeneous Dirichlet data.

Every correction loss is quadratic in the output weights of the candidate
network, L(w) = ½ wᵀHw - fᵀw + q, with (for a quadrature rule (x_i, ω_i)
and frozen iterate u^k):

    weak       H = Σ ω φ'φ'ᵀ    f = Σ ω [f φ - (u^k)' φ']
    strong     H = Σ ω φ''φ''ᵀ  f = -Σ ω φ'' (f + (u^k)'')      q = ½ Σ ω (f + (u^k)'')²
    ultraweak  H = Σ ω φ''φ''ᵀ  f = Σ ω u^k φ'' + ℓ(φ)

For the δ' source ℓ(φ) = ⟨δ', φ⟩ = -φ'(0) is evaluated exactly, outside the
quadrature sum. The operator convention is B u = -u'' throughout, so the
ultraweak bilinear form is b(u, v) = (u, -v'') and the correction energy is
½‖r''‖² + b(u^k, r) - ℓ(r).
"""

from dataclasses import dataclass

import numpy as np

from .diffnet import ConfigurationError, ContractViolation, evaluate

FORMULATIONS = ("weak", "strong", "ultraweak")
DIRAC_PRIME = "dirac_prime"


class Unsupported(ContractViolation):
    """Derivative or norm not available for this representation."""


# --- evaluation handles: objects with evaluate(x, order) -> [u, u', u''][:order+1]


class Zero:
    def evaluate(self, x, order=0):
        x = np.asarray(x, dtype=float)
        return [np.zeros_like(x) for _ in range(order + 1)]


class SineMode:
    """u(x) = amplitude · sin(freq · x)."""

    def __init__(self, freq, amplitude=1.0):
        self.freq = float(freq)
        self.amplitude = float(amplitude)

    def evaluate(self, x, order=0):
        x = np.asarray(x, dtype=float)
        c, a = self.freq, self.amplitude
        s = np.sin(c * x)
        out = [a * s]
        if order >= 1:
            out.append(a * c * np.cos(c * x))
        if order >= 2:
            out.append(-a * c * c * s)
        return out

    def h1_seminorm(self):
        # ∫_{-1}^{1} (a c cos cx)² dx
        c, a = self.freq, self.amplitude
        return np.sqrt(a * a * c * c * (1.0 + np.sin(2 * c) / (2 * c)))

    def __repr__(self):
        return f"SineMode({self.freq!r}, {self.amplitude!r})"


class StepSolution:
    """u(x) = ½(x + 1) - H(x), the solution of -u'' = δ' with zero boundary values."""

    jump_at = 0.0

    def evaluate(self, x, order=0):
        if order > 0:
            raise Unsupported("the step solution has no classical derivative at 0")
        x = np.asarray(x, dtype=float)
        return [0.5 * (x + 1.0) - (x > 0.0)]

    def l2_norm(self):
        return np.sqrt(1.0 / 6.0)


class Scaled:
    def __init__(self, handle, factor):
        self.handle, self.factor = handle, float(factor)

    def evaluate(self, x, order=0):
        return [self.factor * v for v in self.handle.evaluate(x, order)]


class NetworkHandle:
    """Wrap (params, spec) as an evaluation handle."""

    def __init__(self, params, spec):
        self.params, self.spec = params, spec

    def evaluate(self, x, order=0):
        b = evaluate(self.params, self.spec, x, order)
        return [b.output, b.doutput, b.d2output][: order + 1]


class NegSecondDerivative:
    """The function -v'' for a network v (order-0 evaluation only)."""

    def __init__(self, params, spec):
        self.params, self.spec = params, spec

    def evaluate(self, x, order=0):
        if order > 0:
            raise Unsupported("derivatives of -v'' would need fourth-order network derivatives")
        return [-evaluate(self.params, self.spec, x, 2).d2output]


@dataclass(frozen=True)
class ProblemSpec:
    formulation: str
    source: object
    exact: object = None
    domain: tuple = (-1.0, 1.0)
    name: str = ""

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError(f"unknown formulation {self.formulation!r}")
        if self.source == DIRAC_PRIME and self.formulation != "ultraweak":
            raise ConfigurationError("the δ' source is only admissible in the ultraweak form")

    @property
    def dirac(self):
        return isinstance(self.source, str) and self.source == DIRAC_PRIME

    def f(self, x):
        if self.dirac:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.asarray(self.source(np.asarray(x, dtype=float)), dtype=float)


def sine_problem(freq, formulation="weak"):
    """Manufactured problem with u* = sin(freq·x) and f = freq² sin(freq·x)."""
    c = float(freq)
    return ProblemSpec(
        formulation=formulation,
        source=lambda x: c * c * np.sin(c * x),
        exact=SineMode(c),
        name=f"sine_{c:.6g}",
    )


def zero_problem(formulation="weak"):
    return ProblemSpec(formulation=formulation, source=lambda x: np.zeros_like(x), exact=Zero(), name="zero")


def dirac_prime_problem():
    return ProblemSpec(formulation="ultraweak", source=DIRAC_PRIME, exact=StepSolution(), name="dirac_prime")


@dataclass(frozen=True)
class QuadraticForm:
    H: np.ndarray
    f: np.ndarray
    q: float = 0.0

    def value(self, w):
        return 0.5 * w @ self.H @ w - self.f @ w + self.q

    def gradient(self, w):
        return self.H @ w - self.f


def required_order(problem):
    return 1 if problem.formulation == "weak" else 2


def prior_order(problem):
    return {"weak": 1, "strong": 2, "ultraweak": 0}[problem.formulation]


@dataclass
class SampleContext:
    """Per-sample data that does not depend on the candidate network."""

    nodes: np.ndarray
    weights: np.ndarray
    f: np.ndarray
    prior: list


def prepare(problem, u_prev, sample):
    u_prev = Zero() if u_prev is None else u_prev
    return SampleContext(
        nodes=sample.nodes,
        weights=sample.weights,
        f=problem.f(sample.nodes),
        prior=u_prev.evaluate(sample.nodes, prior_order(problem)),
    )


def _check(problem, batch, dphi0):
    if batch.order < required_order(problem):
        raise ContractViolation(
            f"{problem.formulation} needs generator derivatives of order {required_order(problem)}"
        )
    if problem.dirac and dphi0 is None:
        raise ContractViolation("the δ' pairing needs generator slopes at x = 0")


def assemble_from(problem, ctx, batch, dphi0=None):
    _check(problem, batch, dphi0)
    wq = ctx.weights
    form = problem.formulation
    if form == "weak":
        A = batch.dphi
        rhs = (wq * ctx.f) @ batch.phi - (wq * ctx.prior[1]) @ batch.dphi
        q = 0.0
    elif form == "strong":
        A = batch.d2phi
        target = ctx.f + ctx.prior[2]
        rhs = -(wq * target) @ batch.d2phi
        q = 0.5 * float(wq @ (target * target))
    else:
        A = batch.d2phi
        rhs = (wq * ctx.prior[0]) @ batch.d2phi
        if problem.dirac:
            rhs = rhs - dphi0
        else:
            rhs = rhs + (wq * ctx.f) @ batch.phi
        q = 0.0
    H = (A * wq[:, None]).T @ A
    H = 0.5 * (H + H.T)
    return QuadraticForm(H=H, f=rhs, q=q)


def assemble_quadratic(problem, u_prev, generators, sample, dphi0=None):
    """Quadratic form of the correction loss in the candidate's output weights.

    ``generators`` is an :class:`~runn.diffnet.EvalBatch` at ``sample.nodes``;
    ``dphi0`` holds the generator slopes φ_j'(0), needed only for the δ' source.
    """
    return assemble_from(problem, prepare(problem, u_prev, sample), generators, dphi0)


def point_adjoints(problem, ctx, u):
    """Per-node derivatives of the weighted integrand with respect to (u, u', u'').

    ``u`` is the candidate's [u, u', u''] at the nodes. The δ' term contributes
    +1 to ∂L/∂u'(0), which callers add separately.
    """
    wq = ctx.weights
    form = problem.formulation
    if form == "weak":
        return -wq * ctx.f, wq * (u[1] + ctx.prior[1]), None
    if form == "strong":
        return None, None, wq * (u[2] + ctx.prior[2] + ctx.f)
    g0 = None if problem.dirac else -wq * ctx.f
    return g0, None, wq * (u[2] - ctx.prior[0])


def integrand(problem, ctx, u):
    form = problem.formulation
    if form == "weak":
        return 0.5 * u[1] ** 2 + ctx.prior[1] * u[1] - ctx.f * u[0]
    if form == "strong":
        r = u[2] + ctx.prior[2] + ctx.f
        return 0.5 * r * r
    val = 0.5 * u[2] ** 2 - ctx.prior[0] * u[2]
    if not problem.dirac:
        val = val - ctx.f * u[0]
    return val


def duality_pairing_delta_prime(candidate):
    """⟨δ', v⟩ = -v'(0), from the candidate's analytic slope."""
    return -float(candidate.evaluate(np.array([0.0]), 1)[1][0])


def loss_value(problem, u_prev, candidate, sample):
    """Discretized correction loss of ``candidate`` (any evaluation handle)."""
    ctx = prepare(problem, u_prev, sample)
    u = candidate.evaluate(ctx.nodes, required_order(problem))
    val = float(ctx.weights @ integrand(problem, ctx, u))
    if problem.dirac:
        val -= duality_pairing_delta_prime(candidate)
    return val


def dirac_prime_proxy(grid):
    """Grid representation of δ': a dipole (+1/h², -1/h²) at the nodes -h and 0."""
    grid = np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    i0 = int(np.argmin(np.abs(grid)))
    g = np.zeros_like(grid)
    g[i0 - 1] = 1.0 / h**2
    g[i0] = -1.0 / h**2
    return g


def strong_residual_grid(problem, u_state, grid):
    """f + u'' on ``grid``, i.e. the residual f - Bu of -u'' = f.

    When ``u_state`` cannot supply second derivatives (e.g. u = -v''), u'' is
    taken from second differences of grid values. The δ' source is replaced by
    :func:`dirac_prime_proxy`.
    """
    grid = np.asarray(grid, dtype=float)
    try:
        upp = u_state.evaluate(grid, 2)[2]
    except Unsupported:
        h = grid[1] - grid[0]
        u = u_state.evaluate(grid, 0)[0]
        upp = np.gradient(np.gradient(u, h), h)
    f = dirac_prime_proxy(grid) if problem.dirac else problem.f(grid)
    return f + upp
