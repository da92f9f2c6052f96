"""Unbiased stochastic quadrature on an interval.

Two rules are provided: plain Monte Carlo with i.i.d. uniform nodes, and the
stratified three-point rule that is exact for cubics. On a reference element
(-1, 1) the latter draws x̂ with density 3x̂² on (0, 1) and uses

    ∫ L ≈ [L(x̂) - 2 L(0) + L(-x̂)] / (3 x̂²) + 2 L(0).
"""

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partition:
    a: float = -1.0
    b: float = 1.0
    K: int = 1

    def __post_init__(self):
        if self.K < 1 or not self.b > self.a:
            raise ValueError("partition needs K >= 1 and a < b")

    @property
    def h(self):
        return (self.b - self.a) / self.K

    @property
    def centers(self):
        return self.a + (np.arange(self.K) + 0.5) * self.h

    @property
    def length(self):
        return self.b - self.a


@dataclass(frozen=True)
class QuadratureSample:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str
    partition: Partition = None
    seed: object = None

    def __len__(self):
        return self.nodes.size


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def vanilla_sample(domain=(-1.0, 1.0), N=1, seed=None):
    if N < 1:
        raise ValueError("N must be >= 1")
    a, b = domain
    rng = _rng(seed)
    nodes = rng.uniform(a, b, N)
    return QuadratureSample(nodes=nodes, weights=np.full(N, (b - a) / N), rule="vanilla", seed=seed)


def p3_reference(u):
    """Map uniform draws u ∈ (0, 1] to reference abscissae x̂ = u^{1/3}."""
    return np.cbrt(u)


def p3_sample(partition, seed=None):
    """One draw of the stratified order-3 rule; 3K nodes in ascending order."""
    rng = _rng(seed)
    u = rng.uniform(size=partition.K)
    while np.any(u == 0.0):
        zero = u == 0.0
        u[zero] = rng.uniform(size=int(zero.sum()))
    xh = p3_reference(u)
    half = 0.5 * partition.h
    c = partition.centers
    side = half / (3.0 * xh * xh)
    mid = half * 2.0 - 2.0 * side
    nodes = np.column_stack([c - half * xh, c, c + half * xh]).ravel()
    weights = np.column_stack([side, mid, side]).ravel()
    return QuadratureSample(nodes=nodes, weights=weights, rule="p3", partition=partition, seed=seed)


def make_sample(rule, n_points, domain=(-1.0, 1.0), seed=None):
    """Draw ``n_points`` nodes with ``rule`` in {'p3', 'vanilla'}."""
    if rule == "p3":
        if n_points % 3:
            raise ValueError("p3 needs a multiple of 3 points")
        return p3_sample(Partition(domain[0], domain[1], n_points // 3), seed)
    if rule == "vanilla":
        return vanilla_sample(domain, n_points, seed)
    raise ValueError(f"unknown rule {rule!r}")


def estimate(sample, values):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != sample.nodes.size:
        raise ValueError("integrand values do not match the sample nodes")
    return sample.weights @ values


@dataclass
class VarianceTable:
    rule: str
    K: np.ndarray
    n_points: np.ndarray
    variance: np.ndarray
    slope: float

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rule", "K", "N_K", "variance"])
            for K, N, v in zip(self.K, self.n_points, self.variance):
                writer.writerow([self.rule, int(K), int(N), repr(float(v))])


def variance_probe(integrand, rule="p3", K_list=(4, 8, 16, 32, 64), reps=2000, seed=0,
                   domain=(-1.0, 1.0)):
    """Empirical estimator variance per K and the fitted log-log slope against N_K.

    The vanilla rule uses N_K = 3K nodes so both rules are compared at equal cost.
    A zero-variance integrand yields ``slope = nan``.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    root = np.random.SeedSequence(seed)
    Ks = np.asarray(K_list, dtype=int)
    Ns = 3 * Ks
    variances = np.empty(Ks.size)
    for i, (K, child) in enumerate(zip(Ks, root.spawn(Ks.size))):
        rng = np.random.default_rng(child)
        est = np.empty(reps)
        for r in range(reps):
            sample = make_sample(rule, 3 * K, domain, rng)
            est[r] = estimate(sample, integrand(sample.nodes))
        var = est.var(ddof=1)
        # spread at the level of floating-point round-off counts as zero
        floor = (64.0 * np.finfo(float).eps * max(np.abs(est).max(), 1e-300)) ** 2
        variances[i] = 0.0 if var <= floor else var
    if np.any(variances <= 0):
        slope = float("nan")
    else:
        slope = float(np.polyfit(np.log(Ns), np.log(variances), 1)[0])
    return VarianceTable(rule=rule, K=Ks, n_points=Ns, variance=variances, slope=slope)
