"""Deterministic limit functionals.

``xi_direct`` evaluates

    Xi_s(phi) = int tau(s, t) rho(t) (phi(t) - phi(s) - (t - s) phi'(s)) / (t - s)^2 dt

and ``xi_via_zeta`` the equivalent form int phi''(y) zeta_s(y) dy.  The two
share no code beyond the model callables and the quadrature driver, so each
checks the other.
"""

from __future__ import annotations

from math import floor

import numpy as np

from .errors import ValidationError
from .model import SpectralModel
from .quadrature import DEFAULT, QuadratureSpec, gauss_legendre, integrate_pieces
from .smoothfn import SmoothFunction

TAYLOR_NODES = 16
PREDICTION_SINGULARITY = 1e-9


def _delta(model: SpectralModel, q: QuadratureSpec) -> float:
    return q.singularity_delta if q.singularity_delta is not None else 1e-3 * model.support_length


def _is_complex(phi: SmoothFunction) -> bool:
    return np.iscomplexobj(phi.derivs(np.zeros(1), 0))


def xi_direct(model: SpectralModel, s: float, phi: SmoothFunction, q: QuadratureSpec = DEFAULT):
    """Xi_s(phi) by quadrature of the difference quotient.

    For |t - s| < delta the quotient is replaced by its integral Taylor form
    int_0^1 phi''(s + u (t - s)) (1 - u) du (16-node Gauss rule in u), which
    removes the cancellation near t = s.
    """
    s = float(s)
    lo, hi = model.support
    delta = _delta(model, q)
    d0 = phi.derivs(np.array([s]), 1)
    phi_s, dphi_s = d0[0, 0], d0[1, 0]
    u, wu = gauss_legendre(TAYLOR_NODES)
    one_minus_u = (1.0 - u) * wu

    def integrand(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        d = t - s
        near = np.abs(d) < delta
        out = np.zeros(t.shape, dtype=complex if np.iscomplexobj(phi_s) else float)
        if np.any(~near):
            tf, df = t[~near], d[~near]
            out[~near] = (phi(tf) - phi_s - df * dphi_s) / df**2
        if np.any(near):
            dn = d[near]
            pts = s + np.outer(dn, u)
            out[near] = phi.deriv(2, pts) @ one_minus_u
        out = out * model.tau(s, t) * model.rho(t)
        return out[0] if scalar else out

    breaks = list(model.breakpoints(s)) + [s - delta, s, s + delta]
    if phi.support is not None:
        breaks += list(phi.support)
    return integrate_pieces(integrand, lo, hi, q, breaks, is_complex=_is_complex(phi))


def zeta_kernel(model: SpectralModel, s: float, y: float, q: QuadratureSpec = DEFAULT) -> float:
    """zeta_s(y) = int_1^inf (r - 1)/r^2 tau(s, s + r(y - s)) rho(s + r(y - s)) dr.

    Integrated in v = s + r(y - s), where the kernel becomes |v - y| / (v - s)^2
    and the range is the part of the support beyond y (seen from s).  The
    upper limit is the exit radius r_max = (R - s)/(y - s) (or (L - s)/(y - s)
    when y < s); beyond it rho vanishes.
    """
    s, y = float(s), float(y)
    if y == s:
        raise ValidationError("zeta_s(y) diverges at y = s")
    lo, hi = model.support
    if y > s:
        a, b = max(y, lo), hi
    else:
        a, b = lo, min(y, hi)
    if b <= a:
        return 0.0

    def integrand(v):
        v = np.asarray(v, dtype=float)
        return np.abs(v - y) / (v - s) ** 2 * model.tau(s, v) * model.rho(v)

    return float(integrate_pieces(integrand, a, b, q, model.breakpoints(s)))


def xi_via_zeta(model: SpectralModel, s: float, phi: SmoothFunction, q: QuadratureSpec = DEFAULT):
    """Xi_s(phi) as int phi''(y) zeta_s(y) dy (log singularity at y = s handled by a breakpoint)."""
    s = float(s)
    lo, hi = model.support
    a, b = min(lo, s), max(hi, s)
    if phi.support is not None:
        a, b = max(a, phi.support[0]), min(b, phi.support[1])
    if b <= a:
        return 0.0
    inner = q.tightened(1e-2)

    def integrand(y):
        d2 = phi.deriv(2, np.array([float(y)]))[0]
        if d2 == 0:
            return d2
        return d2 * zeta_kernel(model, s, y, inner)

    breaks = list(model.breakpoints(s)) + [s]
    return integrate_pieces(integrand, a, b, q, breaks, is_complex=_is_complex(phi))


def xi_stieltjes(model: SpectralModel, s: float, z: complex, q: QuadratureSpec = DEFAULT) -> complex:
    """Xi_s(phi_z) for phi_z(t) = 1/(z - t): int tau(s, t) rho(t) / ((z - s)^2 (z - t)) dt."""
    z = complex(z)
    if z.imag == 0:
        raise ValidationError("xi_stieltjes needs a non-real z")
    s = float(s)
    lo, hi = model.support
    pref = 1.0 / (z - s) ** 2

    def integrand(t):
        t = np.asarray(t, dtype=float)
        return pref * model.tau(s, t) * model.rho(t) / (z - t)

    return complex(integrate_pieces(integrand, lo, hi, q, model.breakpoints(s), is_complex=True))


def overlap_prediction(model: SpectralModel, x0: float, t: float) -> float:
    """Limit of the windowed overlap statistic at spectral location t."""
    s0 = float(model.f(x0))
    t = float(t)
    if abs(t - s0) < PREDICTION_SINGULARITY:
        raise ValidationError(f"prediction is singular at t = f(x0) = {s0}")
    return float(model.tau(s0, t)) / (t - s0) ** 2


def basis_index(n: int, x: float) -> int:
    """1-based index floor(n x), clamped into 1..n."""
    return min(n, max(1, floor(n * float(x))))


def pi_n_statistic(system, dec, x: float, phi: SmoothFunction, model: SpectralModel,
                   q: QuadratureSpec = DEFAULT, xi=None):
    """eps^-2 (mu_i(phi) - phi((D_eps)_ii)) - Xi_{f(x)}(phi) with i = floor(n x).

    ``xi`` may carry a precomputed Xi_{f(x)}(phi); it does not depend on the sample.
    """
    from .spectra import integrate_measure, vector_spectral_measure

    if not system.epsilon > 0:
        raise ValidationError("pi_n_statistic needs epsilon > 0")
    i = basis_index(system.n, x)
    mu = integrate_measure(vector_spectral_measure(dec, i), phi)
    diag = float(np.real(system.d_eps[i - 1, i - 1]))
    local = phi(np.array([diag]))[0]
    if xi is None:
        xi = xi_direct(model, float(model.f(x)), phi, q)
    out = (mu - local) / system.epsilon**2 - xi
    return complex(out) if np.iscomplexobj(out) else float(out)
