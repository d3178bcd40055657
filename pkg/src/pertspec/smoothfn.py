"""Smooth test functions with exact derivatives through order 7.

Everything compactly supported is built from one transition function ``psi``
(1 on t <= 0, 0 on t >= 1) or from the standard bump exp(1 - 1/(1 - u^2)).
Derivatives come from truncated Taylor arithmetic, never finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Callable

import numpy as np

from . import _jets as J
from .errors import QuadratureError, ValidationError
from .quadrature import QuadratureSpec, gauss_legendre

ORDER = 7
# exp(-1/t) and its derivatives are below 1e-260 for t < 1/700
_FLAT = 1.0 / 700.0


@dataclass(frozen=True)
class SmoothFunction:
    """A test function together with its derivatives.

    ``jet(t, order)`` returns an array of shape ``(order + 1,) + t.shape`` whose
    k-th slice is the k-th derivative.  ``support`` is ``None`` for functions
    that are not compactly supported.
    """

    jet: Callable[[np.ndarray, int], np.ndarray]
    support: tuple[float, float] | None
    d7_sup: float
    name: str = ""

    def derivs(self, t, order: int = ORDER) -> np.ndarray:
        return self.jet(np.asarray(t, dtype=float), order)

    def __call__(self, t):
        return self.derivs(t, 0)[0]

    def deriv(self, k: int, t):
        return self.derivs(t, k)[k]

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        if self.support is None or other.support is None:
            support = None
        else:
            support = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        f, g = self.jet, other.jet
        return SmoothFunction(
            jet=lambda t, order: f(t, order) + g(t, order),
            support=support,
            d7_sup=self.d7_sup + other.d7_sup,
            name=f"({self.name})+({other.name})",
        )

    def scaled(self, c: float) -> "SmoothFunction":
        f = self.jet
        return SmoothFunction(lambda t, order: c * f(t, order), self.support, abs(c) * self.d7_sup, f"{c}*{self.name}")


def _flat_exp_recip(arg):
    """Jet of exp(-1/arg), set to zero where arg <= _FLAT."""
    live = arg[0] > _FLAT
    safe = arg.copy()
    safe[0] = np.where(live, arg[0], 1.0)
    out = J.exp(-J.reciprocal(safe))
    out[:, ~live] = 0.0
    return out


def _psi_taylor(arg):
    a = _flat_exp_recip(J.const_minus(1.0, arg))
    b = _flat_exp_recip(arg)
    out = J.mul(a, J.reciprocal(a + b))
    # value as 1/(1 + b/a): each step is monotone under correct rounding, so
    # psi stays non-increasing in floating point
    live = a[0] > 0.0
    out[0, live] = 1.0 / (1.0 + b[0, live] / a[0, live])
    # on the plateaus a/(a+b) is exactly constant; the jet quotient leaves
    # roundoff there that a steep window's chain rule would blow up
    one = b[0] == 0.0
    out[:, one] = 0.0
    out[0, one] = 1.0
    out[:, a[0] == 0.0] = 0.0
    return out


def _bump_taylor(arg):
    w = J.const_minus(1.0, J.mul(arg, arg))
    live = w[0] > _FLAT
    safe = w.copy()
    safe[0] = np.where(live, w[0], 1.0)
    out = J.exp(J.const_minus(1.0, J.reciprocal(safe)))
    out[:, ~live] = 0.0
    return out


def _affine_jet(builder, scale: float, shift: float):
    def jet(t, order):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        shape = t.shape
        c = builder(J.variable(t.ravel(), order, scale, shift))
        return J.to_derivatives(c).reshape((order + 1,) + shape)

    return jet


def _reshape_scalar(jet):
    def wrapped(t, order):
        t = np.asarray(t, dtype=float)
        out = jet(t, order)
        return out.reshape((order + 1,) + t.shape)

    return wrapped


def _sampled_bounds(builder, lo: float, hi: float, points: int = 200_001) -> np.ndarray:
    """Upper bounds on sup |g^(k)| over [lo, hi], k = 0..7.

    Grid maximum plus half a grid step times the grid maximum of the next
    derivative, inflated by 1%.
    """
    t = np.linspace(lo, hi, points)
    h = (hi - lo) / (points - 1)
    d = np.abs(J.to_derivatives(builder(J.variable(t, ORDER + 1))))
    m = d.max(axis=1)
    return 1.01 * (m[: ORDER + 1] + 0.5 * h * m[1: ORDER + 2])


@lru_cache(maxsize=None)
def psi_bounds() -> np.ndarray:
    return _sampled_bounds(_psi_taylor, 0.0, 1.0)


@lru_cache(maxsize=None)
def bump_bounds() -> np.ndarray:
    return _sampled_bounds(_bump_taylor, -1.0, 1.0)


def psi() -> SmoothFunction:
    """Smooth decreasing transition: 1 on (-inf, 0], 0 on [1, inf)."""
    return SmoothFunction(
        _reshape_scalar(_affine_jet(_psi_taylor, 1.0, 0.0)),
        support=None,
        d7_sup=float(psi_bounds()[7]),
        name="psi",
    )


def bump(a: float, b: float) -> SmoothFunction:
    """C-infinity bump, positive exactly on (a, b), equal to 1 at the midpoint."""
    a, b = float(a), float(b)
    if not a < b:
        raise ValidationError(f"bump needs a < b, got a={a}, b={b}")
    scale = 2.0 / (b - a)
    return SmoothFunction(
        _reshape_scalar(_affine_jet(_bump_taylor, scale, -(a + b) / (b - a))),
        support=(a, b),
        d7_sup=float(scale**7 * bump_bounds()[7]),
        name=f"bump:{a:g},{b:g}",
    )


def _window(c, alpha, omega, first, second, support, label):
    def builder_jet(t, order):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        shape = t.shape
        tv = t.ravel()
        f1 = _psi_taylor(J.variable(tv, order, *first))
        f2 = _psi_taylor(J.variable(tv, order, *second))
        return J.to_derivatives(J.mul(f1, f2)).reshape((order + 1,) + shape)

    m = psi_bounds()
    d7 = sum(comb(7, k) * m[k] * m[7 - k] for k in range(8)) / omega**7
    return SmoothFunction(_reshape_scalar(builder_jet), support, float(d7), label)


def _check_window(alpha, omega):
    if not alpha > omega > 0:
        raise ValidationError(f"window needs alpha > omega > 0, got alpha={alpha}, omega={omega}")


def window_minus(center: float, alpha: float, omega: float) -> SmoothFunction:
    """Smooth lower bound of the indicator of [c - alpha, c + alpha]."""
    _check_window(alpha, omega)
    c = float(center)
    return _window(
        c, alpha, omega,
        (1.0 / omega, 1.0 - (c + alpha) / omega),
        (-1.0 / omega, 1.0 + (c - alpha) / omega),
        (c - alpha, c + alpha),
        f"window-:{c:g},{alpha:g},{omega:g}",
    )


def window_plus(center: float, alpha: float, omega: float) -> SmoothFunction:
    """Smooth upper bound of the indicator of [c - alpha, c + alpha]."""
    _check_window(alpha, omega)
    c = float(center)
    return _window(
        c, alpha, omega,
        (1.0 / omega, -(c + alpha) / omega),
        (-1.0 / omega, (c - alpha) / omega),
        (c - alpha - omega, c + alpha + omega),
        f"window+:{c:g},{alpha:g},{omega:g}",
    )


def polynomial(coeffs) -> SmoothFunction:
    """Polynomial with coefficients in increasing degree."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    ders = [p]
    for _ in range(ORDER + 1):
        ders.append(ders[-1].deriv())

    def jet(t, order):
        t = np.asarray(t, dtype=float)
        return np.stack([ders[k](t) for k in range(order + 1)])

    deg = p.degree()
    d7 = 0.0 if deg < 7 else (abs(ders[7].coef[0]) if deg == 7 else np.inf)
    return SmoothFunction(jet, None, float(d7), f"poly:{','.join(f'{c:g}' for c in p.coef)}")


def affine(a: float, b: float) -> SmoothFunction:
    return polynomial([a, b])


def stieltjes(z: complex) -> SmoothFunction:
    """``t -> 1/(z - t)``; complex valued, derivatives k!/(z - t)^(k+1)."""
    z = complex(z)
    if z.imag == 0:
        raise ValidationError("stieltjes test function needs Im z != 0")

    def jet(t, order):
        t = np.asarray(t, dtype=float)
        base = 1.0 / (z - t)
        return np.stack([factorial(k) * base ** (k + 1) for k in range(order + 1)])

    return SmoothFunction(jet, None, factorial(7) / abs(z.imag) ** 8, f"stieltjes:{z}")


def parse_preset(spec: str) -> SmoothFunction:
    """Build a function from ``bump:a,b``, ``window-:c,alpha,omega``,
    ``window+:c,alpha,omega`` or ``affine:a,b``."""
    name, _, args = spec.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise ValidationError(f"bad preset arguments in {spec!r}") from exc
    arity = {"bump": 2, "window-": 3, "window+": 3, "affine": 2}
    if name not in arity:
        raise ValidationError(f"unknown function preset {name!r}; choose from {sorted(arity)}")
    if len(vals) != arity[name]:
        raise ValidationError(f"preset {name!r} takes {arity[name]} numbers, got {len(vals)}")
    return {"bump": bump, "window-": window_minus, "window+": window_plus, "affine": affine}[name](*vals)


def almost_analytic_ext(phi: SmoothFunction, z) -> np.ndarray:
    """Degree-6 almost analytic extension: sum_{k<=6} (iy)^k phi^(k)(x) / k!."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    d = phi.derivs(x, 6)
    out = np.zeros(z.shape, dtype=complex)
    iy_k = np.ones(z.shape, dtype=complex)
    for k in range(7):
        out = out + iy_k * d[k] / factorial(k)
        iy_k = iy_k * (1j * y)
    return out


def dbar_extension(phi: SmoothFunction, z) -> np.ndarray:
    """Closed-form d-bar of the extension: (iy)^6 phi^(7)(x) / (2 * 6!)."""
    z = np.asarray(z, dtype=complex)
    return (1j * z.imag) ** 6 * phi.deriv(7, z.real) / (2.0 * factorial(6))


def _cutoff_pieces(v, inner: float, width: float):
    """psi((v - inner)/width) with its first derivative in v."""
    d = _affine_jet(_psi_taylor, 1.0 / width, -inner / width)(np.asarray(v, dtype=float), 1)
    return d[0], d[1]


HS_STRIP = 1e-6
HS_QUADRATURE = QuadratureSpec(method="composite", abs_tol=1e-6, rel_tol=1e-12, max_subdivisions=8192)
_HS_NODES = 16
HS_MAX_FLOOR = 1e-4  # beyond this the cancellation leaves no usable digits at the promised accuracy


def _hs_estimate(phi: SmoothFunction, x0: np.ndarray, m: float, px: int, py: int, chunk: int = 1024):
    """Tensor Gauss-Legendre estimate with ``px`` x-panels and ``py`` panels per y-interval.

    The 1/(z - x0) spike is subtracted: the x-rule integrates
    (g(x, y) - g(x0, y)) / (z - x0) and g(x0, y) log((b - x0 + iy)/(a - x0 + iy))
    is added in closed form.  Also returns the sum of absolute contributions,
    which sets the roundoff floor.
    """
    a, b = phi.support
    gx, gw = gauss_legendre(_HS_NODES)
    xe = np.linspace(a, b, px + 1)
    hx = np.diff(xe)
    xs_all = (xe[:-1, None] + hx[:, None] * gx).ravel()
    wx_all = (hx[:, None] * gw).ravel()
    ys, wy = [], []
    for lo, hi in [(-2 * m, -m), (-m, -HS_STRIP), (HS_STRIP, m), (m, 2 * m)]:
        ye = np.linspace(lo, hi, py + 1)
        hy = np.diff(ye)
        ys.append((ye[:-1, None] + hy[:, None] * gx).ravel())
        wy.append((hy[:, None] * gw).ravel())
    ys = np.concatenate(ys)
    wy = np.concatenate(wy)
    cy, dcy = _cutoff_pieces(np.abs(ys), m, m)
    dcy = dcy * np.sign(ys)
    iy = 1j * ys[None, :]
    iy_pow = [iy**k for k in range(7)]

    def dbar_rows(xs):
        # d-bar of (extension * chi) on the grid xs x ys
        d = phi.derivs(xs, 7)
        cx, dcx = _chi_x(xs, a, b, m)
        ext = np.zeros((xs.size, ys.size), dtype=complex)
        for k in range(7):
            ext += iy_pow[k] * (d[k] / factorial(k))[:, None]
        g = iy_pow[6] * (d[7] / (2.0 * factorial(6)))[:, None] * (cx[:, None] * cy[None, :])
        g += ext * (0.5 * (dcx[:, None] * cy[None, :] + 1j * cx[:, None] * dcy[None, :]))
        return g

    g0 = dbar_rows(x0)
    out = np.zeros(x0.size)
    mag = np.zeros(x0.size)
    for p, x_eval in enumerate(x0):
        log_part = g0[p] * (np.log(b - x_eval + 1j * ys) - np.log(a - x_eval + 1j * ys)) * wy
        out[p] -= np.sum(log_part).real / np.pi
        mag[p] += np.sum(np.abs(log_part)) / np.pi
    for c0 in range(0, xs_all.size, chunk):
        xs = xs_all[c0:c0 + chunk]
        g = dbar_rows(xs)
        w = wx_all[c0:c0 + chunk, None] * wy[None, :]
        zz = xs[:, None] + iy
        for p, x_eval in enumerate(x0):
            terms = (g - g0[p][None, :]) * w / (zz - x_eval)
            out[p] -= np.sum(terms).real / np.pi
            mag[p] += np.sum(np.abs(terms)) / np.pi
    return out, mag


def hs_reconstruct(phi: SmoothFunction, x0, chi_margin: float = 0.5, q2d: QuadratureSpec | None = None):
    """Recover phi(x0) from -(1/pi) * integral of dbar(ext * chi) / (z - x0) over the plane.

    chi = chi_x(x) chi_y(y) equals 1 on the support of phi inflated by
    ``chi_margin`` (and for |y| <= chi_margin) and vanishes beyond twice that.
    Since the extension vanishes for x outside the support of phi, the x-range
    is that support.  The strip |y| < 1e-6, where the integrand is O(y^5), is
    skipped.  Tensor Gauss-Legendre panels are doubled until successive values
    agree to the tolerance of ``q2d``, or to the roundoff floor when that is
    larger (narrow supports make y^6 phi^(7) huge and the integral cancels).
    """
    if phi.support is None:
        raise ValidationError("Helffer-Sjostrand reconstruction needs a compactly supported function")
    if not chi_margin > 0:
        raise ValidationError("chi_margin must be positive")
    q2d = q2d or HS_QUADRATURE
    m = float(chi_margin)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    px = 8
    prev, _ = _hs_estimate(phi, x0, m, px, 2)
    while 2 * px <= q2d.max_subdivisions:
        # the extension varies on the scale of phi's support; y needs far fewer panels
        px *= 2
        cur, mag = _hs_estimate(phi, x0, m, px, min(max(2, px // 32), 16))
        floor = 2 * np.finfo(float).eps * np.max(mag)  # worst-case summation error of cur and prev
        if floor > HS_MAX_FLOOR:
            raise QuadratureError(
                f"Helffer-Sjostrand roundoff floor {floor:.3g} exceeds {HS_MAX_FLOOR:g}; "
                f"the support is too narrow for chi_margin={m:g}"
            )
        if np.max(np.abs(cur - prev)) <= max(q2d.abs_tol, q2d.rel_tol * np.max(np.abs(cur)), floor):
            return cur if cur.size > 1 else float(cur[0])
        prev = cur
    raise QuadratureError(f"Helffer-Sjostrand quadrature did not converge within {q2d.max_subdivisions} panels")


def _chi_x(x, a, b, m):
    # 1 on [a - m, b + m], 0 outside [a - 2m, b + 2m]
    r, dr = _cutoff_pieces(x, b + m, m)
    l, dl = _cutoff_pieces(-x, -(a - m), m)
    return r * l, dr * l - r * dl
