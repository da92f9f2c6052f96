"""Sobolev-weighted cumulative spectra and frequency-band initialization.

The normalized cumulative power spectral density of a grid signal g is

    NCPSD_s(g)(η) = Σ_{ω_m ≤ η} (1 + ω_m²)^s |ĝ_m|² / Σ_m (1 + ω_m²)^s |ĝ_m|²

over the one-sided DFT frequencies ω_m = 2πm / |Ω|. Its α and 1-α quantiles
give the band [ω_min, ω_max] from which Fourier-layer frequencies are drawn
log-uniformly.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .diffnet import ConfigurationError, ContractViolation

DEFAULT_GRID = 4096
SOURCE_TAGS = ("source_term", "strong_residual", "prior_weak_residual", "prior_correction_proxy")


class DegenerateSpectrumError(ValueError):
    pass


class SequencingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumCurve:
    omegas: np.ndarray
    power: np.ndarray
    ncpsd: np.ndarray
    s: int
    sample_count: int

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["omega", "power", "ncpsd"])
            for row in zip(self.omegas, self.power, self.ncpsd):
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class InitPlan:
    omega_min: float
    omega_max: float
    alpha: float = 0.05
    s_used: int = 0
    source_tag: str = "source_term"
    curve: SpectrumCurve = None

    def __post_init__(self):
        if not (0 < self.omega_min <= self.omega_max):
            raise ConfigurationError(
                f"invalid frequency band [{self.omega_min}, {self.omega_max}]"
            )
        if not (0 < self.alpha < 0.5):
            raise ConfigurationError("alpha must lie in (0, 0.5)")


@dataclass(frozen=True)
class PhaseDescriptor:
    """Which phase of an Uzawa run is being initialized.

    ``phase`` is 0 for the initial guess u⁰ and j ≥ 1 for the correction
    trained against u^{j-1} (r^{j-1} or δ^{j-1}).
    """

    formulation: str
    phase: int


def uniform_grid(M=DEFAULT_GRID, domain=(-1.0, 1.0)):
    """M uniformly spaced points on the periodic grid of ``domain`` (right end excluded)."""
    return np.linspace(domain[0], domain[1], M, endpoint=False)


def ncpsd(values, s, domain=(-1.0, 1.0), points=None):
    """Cumulative Sobolev-weighted spectrum of uniform-grid samples ``values``."""
    g = np.asarray(values, dtype=float).ravel()
    M = g.size
    if M < 16 or M % 2:
        raise ContractViolation("need an even number of at least 16 samples")
    length = domain[1] - domain[0]
    if points is not None:
        pts = np.asarray(points, dtype=float).ravel()
        steps = np.diff(pts)
        if pts.size != M or not np.allclose(steps, length / M, rtol=1e-9, atol=0.0):
            raise ContractViolation("samples must lie on a uniform grid of spacing |Ω|/M")
    if not np.any(g):
        raise DegenerateSpectrumError("all-zero signal has no spectrum")
    ghat = np.fft.rfft(g)
    omegas = 2.0 * np.pi * np.arange(ghat.size) / length
    power = (1.0 + omegas**2) ** s * np.abs(ghat) ** 2
    total = power.sum()
    if not np.isfinite(total) or total <= 0:
        raise DegenerateSpectrumError("spectrum has no finite positive power")
    cum = np.cumsum(power) / total
    cum[-1] = 1.0
    return SpectrumCurve(omegas=omegas, power=power, ncpsd=cum, s=int(s), sample_count=M)


def select_bandwidth(curve, alpha=0.05):
    """Return (ω_min, ω_max) at the α and 1-α quantiles of ``curve``.

    A zero lower edge is moved to the first positive bin so the band can be
    sampled log-uniformly.
    """
    if not (0 < alpha < 0.5):
        raise ConfigurationError("alpha must lie in (0, 0.5)")
    c = curve.ncpsd
    lo = curve.omegas[np.argmax(c >= alpha)]
    hi = curve.omegas[np.argmax(c >= 1.0 - alpha)]
    first_bin = curve.omegas[1]
    lo = max(lo, first_bin)
    hi = max(hi, lo)
    return float(lo), float(hi)


def sample_frequencies(omega_min, omega_max, n, seed=None):
    """Draw n frequencies with ln κ ~ U(ln ω_min, ln ω_max)."""
    if not (np.isfinite(omega_min) and np.isfinite(omega_max)) or omega_min <= 0:
        raise ConfigurationError("frequency bounds must be positive and finite")
    if omega_min > omega_max:
        raise ConfigurationError("omega_min must not exceed omega_max")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if omega_min == omega_max:
        # still consume draws so downstream sampling does not depend on the band shape
        rng.uniform(size=n)
        return np.full(n, float(omega_min))
    kappa = np.exp(rng.uniform(np.log(omega_min), np.log(omega_max), n))
    return np.clip(kappa, omega_min, omega_max)


# (formulation, phase class) -> (s, tag); phase class 0 = u⁰, 1 = first correction, 2 = later ones
_STRATEGY = {
    ("weak", 0): (-1, "source_term"),
    ("weak", 1): (-1, "strong_residual"),
    ("weak", 2): (1, "prior_weak_residual"),
    ("ultraweak", 0): (-2, "source_term"),
    ("ultraweak", 1): (-2, "strong_residual"),
    ("ultraweak", 2): (0, "prior_correction_proxy"),
    ("strong", 0): (0, "source_term"),
    ("strong", 1): (0, "strong_residual"),
    ("strong", 2): (2, "prior_correction_proxy"),
}


def strategy(phase):
    """Regularity index and analyzed signal for a phase."""
    key = (phase.formulation, min(phase.phase, 2))
    if key not in _STRATEGY:
        raise ConfigurationError(f"unknown formulation {phase.formulation!r}")
    return _STRATEGY[key]


def init_plan_for_phase(phase, artifacts, alpha=0.05, domain=(-1.0, 1.0)):
    """Build the frequency band for ``phase`` from grid signals in ``artifacts``.

    ``artifacts`` maps source tags to arrays sampled on :func:`uniform_grid`.
    """
    s, tag = strategy(phase)
    if tag not in artifacts or artifacts[tag] is None:
        if phase.phase >= 1:
            raise SequencingError(f"phase {phase.phase} needs the {tag!r} signal")
        raise ContractViolation(f"missing {tag!r} signal")
    curve = ncpsd(artifacts[tag], s, domain=domain)
    lo, hi = select_bandwidth(curve, alpha)
    return InitPlan(omega_min=lo, omega_max=hi, alpha=alpha, s_used=s, source_tag=tag, curve=curve)
