"""Small 1D network ansatz with exact spatial derivatives and parameter gradients.

A network maps x to n generator functions

    φ_j(x) = (z_L(x))_j · ξ(x),

where z_1 is either a sinusoidal Fourier layer sin(κ_j (w_j x + b_j)) or an
affine layer followed by the hidden activation, z_l = σ(W_l z_{l-1} + c_l)
for l ≥ 2, and ξ is an optional boundary cutoff. The network output is the
linear combination u(x) = Σ_j w_out_j φ_j(x).

Spatial derivatives up to second order are propagated forward layer by layer.
Gradients of a scalar loss with respect to the hidden parameters are obtained
by a hand-written reverse sweep through the same recurrences, and a forward
tangent (jvp) is provided for sensitivity tensors and cross-checks.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from ._kernels_py import RELU3, SIN, TANH

ACTIVATIONS = {"tanh": TANH, "relu_cubed": RELU3}
CUTOFFS = ("none", "one_minus_x_squared")
HIDDEN_GROUPS = ("w_spatial", "b_spatial", "hidden")


class ConfigurationError(ValueError):
    """Invalid network or initialization configuration."""


class ContractViolation(ValueError):
    """A caller broke a documented precondition."""


@dataclass(frozen=True)
class NetworkSpec:
    width: int
    depth: int = 1
    fourier: bool = True
    activation: str = "tanh"
    cutoff: str = "one_minus_x_squared"
    input_dim: int = 1

    def __post_init__(self):
        if self.width < 1 or self.depth < 1:
            raise ConfigurationError("width and depth must be >= 1")
        if self.input_dim != 1:
            raise ConfigurationError("only 1D inputs are supported")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.cutoff not in CUTOFFS:
            raise ConfigurationError(f"unknown cutoff {self.cutoff!r}")

    @property
    def first_activation(self):
        return SIN if self.fourier else ACTIVATIONS[self.activation]

    def to_dict(self):
        return {
            "width": self.width,
            "depth": self.depth,
            "fourier": self.fourier,
            "activation": self.activation,
            "cutoff": self.cutoff,
        }


@dataclass(frozen=True)
class NetworkParams:
    """Trainable state; ``kappa`` is fixed after initialization and not part of θ_H."""

    kappa: np.ndarray
    w: np.ndarray
    b: np.ndarray
    hidden: tuple = ()
    w_out: np.ndarray = None

    def __post_init__(self):
        n = self.kappa.shape[0]
        if not (np.all(np.isfinite(self.kappa)) and np.all(self.kappa > 0)):
            raise ConfigurationError("frequencies must be positive and finite")
        if self.w.shape != (n,) or self.b.shape != (n,):
            raise ConfigurationError("first-layer shapes inconsistent with width")
        for W, c in self.hidden:
            if W.shape != (n, n) or c.shape != (n,):
                raise ConfigurationError("hidden layer shapes inconsistent with width")
        if self.w_out is None:
            object.__setattr__(self, "w_out", np.zeros(n))
        elif self.w_out.shape != (n,):
            raise ConfigurationError("output weights inconsistent with width")

    @property
    def width(self):
        return self.kappa.shape[0]

    @property
    def n_hidden(self):
        n = self.width
        return 2 * n + len(self.hidden) * (n * n + n)

    def hidden_vector(self):
        parts = [self.w, self.b]
        for W, c in self.hidden:
            parts += [W.ravel(), c]
        return np.concatenate(parts)

    def with_hidden_vector(self, vec):
        n = self.width
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_hidden,):
            raise ContractViolation("hidden vector has the wrong length")
        w, b = vec[:n].copy(), vec[n:2 * n].copy()
        hidden, pos = [], 2 * n
        for _ in self.hidden:
            W = vec[pos:pos + n * n].reshape(n, n).copy()
            c = vec[pos + n * n:pos + n * n + n].copy()
            hidden.append((W, c))
            pos += n * n + n
        return replace(self, w=w, b=b, hidden=tuple(hidden))

    def with_output(self, w_out):
        return replace(self, w_out=np.array(w_out, dtype=float))

    def group_slices(self):
        """Map each θ_H group name to its slice in :meth:`hidden_vector`."""
        n = self.width
        return {
            "w_spatial": slice(0, n),
            "b_spatial": slice(n, 2 * n),
            "hidden": slice(2 * n, self.n_hidden),
        }

    def to_arrays(self):
        out = {"kappa": self.kappa, "w": self.w, "b": self.b, "w_out": self.w_out}
        for l, (W, c) in enumerate(self.hidden):
            out[f"W{l}"] = W
            out[f"c{l}"] = c
        return out

    @classmethod
    def from_arrays(cls, arrays):
        hidden = []
        l = 0
        while f"W{l}" in arrays:
            hidden.append((np.asarray(arrays[f"W{l}"]), np.asarray(arrays[f"c{l}"])))
            l += 1
        return cls(
            kappa=np.asarray(arrays["kappa"]),
            w=np.asarray(arrays["w"]),
            b=np.asarray(arrays["b"]),
            hidden=tuple(hidden),
            w_out=np.asarray(arrays["w_out"]),
        )


@dataclass
class EvalBatch:
    points: np.ndarray
    order: int
    phi: np.ndarray
    dphi: np.ndarray = None
    d2phi: np.ndarray = None
    output: np.ndarray = None
    doutput: np.ndarray = None
    d2output: np.ndarray = None
    cache: dict = field(default=None, repr=False)


def build_network(spec, init=None, seed=0):
    """Draw initial parameters for ``spec``.

    ``init`` is an :class:`~runn.spectral.InitPlan` (or anything with
    ``omega_min``/``omega_max``); it is required for Fourier networks.
    ``seed`` may be an int, a sequence of ints, or a numpy Generator.
    """
    from .spectral import sample_frequencies

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = spec.width
    if spec.fourier:
        if init is None:
            raise ConfigurationError("a Fourier network needs a frequency band")
        kappa = sample_frequencies(init.omega_min, init.omega_max, n, rng)
    else:
        kappa = np.ones(n)
    w = rng.uniform(-1.0, 1.0, n)
    b = rng.uniform(-np.pi, np.pi, n)
    hidden = []
    for _ in range(spec.depth - 1):
        if spec.activation == "tanh":
            limit = np.sqrt(6.0 / (n + n))
        else:
            limit = np.sqrt(6.0 / n)
        hidden.append((rng.uniform(-limit, limit, (n, n)), np.zeros(n)))
    return NetworkParams(kappa=kappa, w=w, b=b, hidden=tuple(hidden), w_out=np.zeros(n))


def _cutoff(spec, x):
    if spec.cutoff == "none":
        return None
    return 1.0 - x * x, -2.0 * x, np.full_like(x, -2.0)


def evaluate(params, spec, points, order=2, backend=None):
    """Evaluate generators and network output with analytic derivatives up to ``order``."""
    if order not in (0, 1, 2):
        raise ContractViolation(f"unsupported derivative order {order}")
    x = np.ascontiguousarray(points, dtype=float).ravel()
    stack, _ = _backend.kernels(backend)
    activation_stack = _backend.activation(backend)
    kappa, w = params.kappa, params.w
    D = stack(x, kappa, w, params.b, spec.first_activation)
    kw = kappa * w
    z = D[0]
    z1 = D[1] * kw if order >= 1 else None
    z2 = D[2] * (kw * kw) if order >= 2 else None
    layers = []
    act = ACTIVATIONS[spec.activation]
    for W, c in params.hidden:
        p = z @ W.T + c
        p1 = z1 @ W.T if order >= 1 else None
        p2 = z2 @ W.T if order >= 2 else None
        S = activation_stack(p, act)
        layers.append((z, z1, z2, p1, p2, S))
        z = S[0]
        if order >= 1:
            z1n = S[1] * p1
        if order >= 2:
            z2 = S[2] * p1 * p1 + S[1] * p2
        if order >= 1:
            z1 = z1n
    cut = _cutoff(spec, x)
    if cut is None:
        phi, dphi, d2phi = z, z1, z2
    else:
        xi, dxi, d2xi = cut
        phi = z * xi[:, None]
        dphi = z1 * xi[:, None] + z * dxi[:, None] if order >= 1 else None
        if order >= 2:
            d2phi = z2 * xi[:, None] + 2.0 * z1 * dxi[:, None] + z * d2xi[:, None]
        else:
            d2phi = None
    wo = params.w_out
    return EvalBatch(
        points=x,
        order=order,
        phi=phi,
        dphi=dphi,
        d2phi=d2phi,
        output=phi @ wo,
        doutput=dphi @ wo if dphi is not None else None,
        d2output=d2phi @ wo if d2phi is not None else None,
        cache={"D": D, "layers": layers, "last": (z, z1, z2), "cut": cut},
    )


def backprop(params, spec, batch, g0, g1=None, g2=None, backend=None):
    """Gradient of Σ (g0·φ + g1·φ' + g2·φ'') with respect to θ_H.

    ``g0``, ``g1``, ``g2`` are adjoint arrays with the shape of ``batch.phi``
    (None means zero). Returns a vector aligned with
    :meth:`NetworkParams.hidden_vector`.
    """
    if g2 is not None and batch.order < 2 or g1 is not None and batch.order < 1:
        raise ContractViolation("batch was evaluated at too low an order for these adjoints")
    _, vjp = _backend.kernels(backend)
    x = batch.points
    zeros = np.zeros_like(batch.phi)
    g0 = zeros if g0 is None else g0
    cut = batch.cache["cut"]
    if cut is None:
        zb0, zb1, zb2 = g0, g1, g2
    else:
        xi, dxi, d2xi = (c[:, None] for c in cut)
        zb0 = g0 * xi
        if g1 is not None:
            zb0 = zb0 + g1 * dxi
        if g2 is not None:
            zb0 = zb0 + g2 * d2xi
        zb1 = None
        if g1 is not None or g2 is not None:
            zb1 = (g1 * xi if g1 is not None else 0.0) + (2.0 * g2 * dxi if g2 is not None else 0.0)
        zb2 = g2 * xi if g2 is not None else None

    grads_hidden = []
    for W, c, (zp, zp1, zp2, p1, p2, S) in zip(
        reversed([h[0] for h in params.hidden]),
        reversed([h[1] for h in params.hidden]),
        reversed(batch.cache["layers"]),
    ):
        pb = zb0 * S[1]
        pb1 = pb2 = None
        if zb1 is not None:
            pb = pb + zb1 * S[2] * p1
            pb1 = zb1 * S[1]
        if zb2 is not None:
            pb = pb + zb2 * (S[3] * p1 * p1 + S[2] * p2)
            extra = zb2 * S[2] * 2.0 * p1
            pb1 = extra if pb1 is None else pb1 + extra
            pb2 = zb2 * S[1]
        gW = pb.T @ zp
        if pb1 is not None:
            gW += pb1.T @ zp1
        if pb2 is not None:
            gW += pb2.T @ zp2
        grads_hidden.append((gW, pb.sum(axis=0)))
        zb0 = pb @ W
        zb1 = pb1 @ W if pb1 is not None else None
        zb2 = pb2 @ W if pb2 is not None else None

    gw, gb = vjp(
        x,
        params.kappa,
        params.w,
        batch.cache["D"],
        np.ascontiguousarray(zb0),
        None if zb1 is None else np.ascontiguousarray(zb1),
        None if zb2 is None else np.ascontiguousarray(zb2),
    )
    parts = [gw, gb]
    for gW, gc in reversed(grads_hidden):
        parts += [gW.ravel(), gc]
    return np.concatenate(parts)


def jvp(params, spec, points, direction):
    """Forward tangent of (φ, φ', φ'') along a θ_H direction vector."""
    x = np.asarray(points, dtype=float).ravel()
    d = params.with_hidden_vector(direction)
    batch = evaluate(params, spec, x, order=2)
    D = batch.cache["D"]
    k, w = params.kappa, params.w
    kw = k * w
    da = k * (np.outer(x, d.w) + d.b)
    dkw = k * d.w
    t0 = D[1] * da
    t1 = D[2] * da * kw + D[1] * dkw
    t2 = D[3] * da * kw * kw + D[2] * 2.0 * kw * dkw
    for (W, c), (dW, dc), (zp, zp1, zp2, p1, p2, S) in zip(
        params.hidden, d.hidden, batch.cache["layers"]
    ):
        dp = zp @ dW.T + t0 @ W.T + dc
        dp1 = zp1 @ dW.T + t1 @ W.T
        dp2 = zp2 @ dW.T + t2 @ W.T
        t0, t1, t2 = (
            S[1] * dp,
            S[2] * dp * p1 + S[1] * dp1,
            S[3] * dp * p1 * p1 + S[2] * 2.0 * p1 * dp1 + S[2] * dp * p2 + S[1] * dp2,
        )
    cut = batch.cache["cut"]
    if cut is None:
        return t0, t1, t2
    xi, dxi, d2xi = (c[:, None] for c in cut)
    return t0 * xi, t1 * xi + t0 * dxi, t2 * xi + 2.0 * t1 * dxi + t0 * d2xi


def param_sensitivities(params, spec, points, wrt=HIDDEN_GROUPS):
    """Per-point derivatives of (φ, φ', φ'') with respect to selected θ_H groups.

    Returns a dict mapping each group name to an array of shape
    (3, n_points, width, group_size). ``w_out`` is not selectable: output
    weights are fitted by the least-squares step.
    """
    if isinstance(wrt, str):
        wrt = (wrt,)
    for name in wrt:
        if name == "w_out":
            raise ContractViolation("w_out sensitivities are not provided")
        if name not in HIDDEN_GROUPS:
            raise ContractViolation(f"unknown parameter group {name!r}")
    x = np.asarray(points, dtype=float).ravel()
    slices = params.group_slices()
    out = {}
    for name in wrt:
        sl = slices[name]
        size = sl.stop - sl.start
        sens = np.zeros((3, x.size, params.width, size))
        for col, idx in enumerate(range(sl.start, sl.stop)):
            e = np.zeros(params.n_hidden)
            e[idx] = 1.0
            for m, t in enumerate(jvp(params, spec, x, e)):
                sens[m, :, :, col] = t
        out[name] = sens
    return out
