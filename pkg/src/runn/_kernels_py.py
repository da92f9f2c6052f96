"""Pure numpy implementations of the hot first-layer kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""

import numpy as np

SIN, TANH, RELU3 = 0, 1, 2


def activation_stack(a, act):
    """Return σ, σ', σ'', σ''' evaluated at ``a`` as an array of shape (4, *a.shape)."""
    a = np.asarray(a, dtype=float)
    out = np.empty((4,) + a.shape)
    if act == SIN:
        np.sin(a, out=out[0])
        np.cos(a, out=out[1])
        np.negative(out[0], out=out[2])
        np.negative(out[1], out=out[3])
    elif act == TANH:
        t = np.tanh(a)
        s = 1.0 - t * t
        out[0] = t
        out[1] = s
        out[2] = -2.0 * t * s
        out[3] = s * (6.0 * t * t - 2.0)
    elif act == RELU3:
        r = np.maximum(a, 0.0)
        out[0] = r * r * r
        out[1] = 3.0 * r * r
        out[2] = 6.0 * r
        out[3] = 6.0 * (a > 0.0)
    else:
        raise ValueError(f"unknown activation code {act}")
    return out


def first_layer_stack(x, kappa, w, b, act):
    """Activation derivatives of the first layer at a = κ(w x + b), shape (4, N, n)."""
    a = kappa[None, :] * (np.outer(x, w) + b[None, :])
    return activation_stack(a, act)


def first_layer_vjp(x, kappa, w, D, zb0, zb1, zb2):
    """Pull adjoints of (z, z', z'') back onto the first-layer weights and biases.

    ``zb1``/``zb2`` may be None when the forward pass stopped at a lower order.
    Returns (grad_w, grad_b).
    """
    kx = np.outer(x, kappa)
    kw = kappa * w
    gw = np.einsum("ij,ij,ij->j", zb0, D[1], kx)
    gb = kappa * np.einsum("ij,ij->j", zb0, D[1])
    if zb1 is not None:
        gw += np.einsum("ij,ij->j", zb1, D[2] * kx * kw + D[1] * kappa)
        gb += kappa * kw * np.einsum("ij,ij->j", zb1, D[2])
    if zb2 is not None:
        gw += np.einsum("ij,ij->j", zb2, D[3] * kx * (kw * kw) + D[2] * (2.0 * kappa * kw))
        gb += kappa * kw * kw * np.einsum("ij,ij->j", zb2, D[3])
    return gw, gb
