"""1D quadrature behind a small spec object.

``adaptive`` delegates to QUADPACK (``scipy.integrate.quad``) piece by piece;
``composite`` is a panel Gauss-Legendre rule refined by doubling until two
successive estimates agree.  Integrands must accept numpy arrays for the
composite rule; the adaptive rule calls them with scalars.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError, ValidationError

GL_NODES = 20


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "adaptive"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    singularity_delta: float | None = None  # None: 1e-3 times the support length

    def __post_init__(self):
        if self.method not in ("adaptive", "composite"):
            raise ValidationError(f"quadrature method must be 'adaptive' or 'composite', got {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be >= 1")
        if self.singularity_delta is not None and not self.singularity_delta > 0:
            raise ValidationError("singularity_delta must be positive")

    def tightened(self, factor: float) -> "QuadratureSpec":
        return replace(self, abs_tol=self.abs_tol * factor, rel_tol=max(self.rel_tol * factor, 1e-13))


DEFAULT = QuadratureSpec()


@lru_cache(maxsize=None)
def gauss_legendre(m: int, a: float = 0.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _split(a: float, b: float, breakpoints) -> list[float]:
    pts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    out = [pts[0]]
    for p in pts[1:]:
        if p - out[-1] > 1e-15 * max(1.0, abs(p)):
            out.append(p)
    if len(out) == 1:
        out.append(b)
    return out


def _quad_piece(fn, a, b, q: QuadratureSpec, is_complex: bool):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                lambda t: fn(t), a, b,
                epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions,
                complex_func=is_complex,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"adaptive quadrature on [{a}, {b}] did not converge: {exc}") from exc
    return val


def _composite_piece(fn, a, b, q: QuadratureSpec):
    x, w = gauss_legendre(GL_NODES)
    panels = 1
    prev = None
    while panels <= q.max_subdivisions:
        edges = np.linspace(a, b, panels + 1)
        h = np.diff(edges)
        nodes = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
        weights = (h[:, None] * w[None, :]).ravel()
        val = np.sum(weights * fn(nodes))
        if prev is not None and abs(val - prev) <= max(q.abs_tol, q.rel_tol * abs(val)):
            return val
        prev = val
        panels *= 2
    raise QuadratureError(
        f"composite quadrature on [{a}, {b}] did not converge within {q.max_subdivisions} panels"
    )


def integrate_pieces(fn, a: float, b: float, q: QuadratureSpec = DEFAULT, breakpoints=(), is_complex=False):
    """Integrate ``fn`` over ``[a, b]`` split at ``breakpoints``."""
    if b <= a:
        return 0.0
    pts = _split(float(a), float(b), breakpoints)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if q.method == "adaptive":
            total += _quad_piece(fn, lo, hi, q, is_complex)
        else:
            total += _composite_piece(fn, lo, hi, q)
    return total
