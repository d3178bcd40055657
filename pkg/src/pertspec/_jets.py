"""Truncated Taylor arithmetic ("jets") for exact higher derivatives.

A jet of order K is an array ``c`` of shape ``(K + 1, ...)`` with
``c[k] = f^(k)(t) / k!``.  Only the handful of operations needed by the smooth
function constructors are provided.
"""

from __future__ import annotations

from math import factorial

import numpy as np


def variable(t, order: int, scale: float = 1.0, shift: float = 0.0):
    """Jet of ``shift + scale * t``."""
    t = np.asarray(t, dtype=float)
    c = np.zeros((order + 1,) + t.shape)
    c[0] = shift + scale * t
    if order >= 1:
        c[1] = scale
    return c


def mul(a, b):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(out.shape[0]):
        for j in range(k + 1):
            out[k] += a[j] * b[k - j]
    return out


def reciprocal(a):
    out = np.zeros_like(a)
    inv = 1.0 / a[0]
    out[0] = inv
    for k in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc += a[j] * out[k - j]
        out[k] = -inv * acc
    return out


def exp(a):
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc += j * a[j] * out[k - j]
        out[k] = acc / k
    return out


def to_derivatives(c):
    """Convert Taylor coefficients to derivative values (in place safe copy)."""
    out = np.array(c, copy=True)
    for k in range(out.shape[0]):
        out[k] *= factorial(k)
    return out


def const_minus(c0: float, a):
    """Jet of ``c0 - a``."""
    out = -a
    out[0] += c0
    return out
