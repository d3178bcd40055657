"""Limit profiles (f, rho, tau, sigma^2) and their size-n discretizations.

Indices passed to ``DiscretizedModel.variance`` are 1-based, matching the
convention ``i = floor(n x)`` used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ValidationError

Profile = Callable[..., np.ndarray]


@dataclass(frozen=True)
class SpectralModel:
    """Limit objects of a perturbation model.

    ``tau_jumps(s)`` lists the points t where ``tau(s, .)`` is discontinuous;
    quadrature splits there.  The Lipschitz constants drive the slack in
    :func:`discretize`; ``None`` marks a discontinuous profile.
    """

    name: str
    f: Profile
    rho: Profile
    support: tuple[float, float]
    tau: Profile
    sigma2: Profile
    tau_jumps: Callable[[float], tuple[float, ...]] = lambda s: ()
    f_inverse: Profile | None = None
    f_lipschitz: float | None = None
    sigma2_lipschitz: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def support_length(self) -> float:
        return self.support[1] - self.support[0]

    def breakpoints(self, s: float) -> list[float]:
        """Points where ``t -> tau(s, t) rho(t)`` may jump, sorted."""
        pts = {float(self.support[0]), float(self.support[1])}
        pts.update(float(p) for p in self.tau_jumps(s))
        return sorted(pts)


def _identity(x):
    return np.asarray(x, dtype=float)


def _unit_density(t):
    t = np.asarray(t, dtype=float)
    return ((t >= 0.0) & (t <= 1.0)).astype(float)


def build_wigner_model() -> SpectralModel:
    def ones(a, b):
        return np.ones(np.broadcast(np.asarray(a), np.asarray(b)).shape)

    return SpectralModel(
        name="wigner",
        f=_identity,
        rho=_unit_density,
        support=(0.0, 1.0),
        tau=ones,
        sigma2=ones,
        f_inverse=_identity,
        f_lipschitz=1.0,
        sigma2_lipschitz=0.0,
    )


def build_band_model(ell: float) -> SpectralModel:
    """Band profile: variance 1 within relative distance ``ell`` of the diagonal."""
    ell = float(ell)
    if not 0.0 < ell <= 1.0:
        raise ValidationError(f"band width ell must lie in (0, 1], got {ell}")

    def band(a, b):
        return (np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) <= ell).astype(float)

    return SpectralModel(
        name="band",
        f=_identity,
        rho=_unit_density,
        support=(0.0, 1.0),
        tau=band,
        sigma2=band,
        tau_jumps=lambda s: (s - ell, s + ell),
        f_inverse=_identity,
        f_lipschitz=1.0,
        sigma2_lipschitz=None if ell < 1.0 else 0.0,
        params={"ell": ell},
    )


def build_model(name: str, **params) -> SpectralModel:
    if name == "wigner":
        return build_wigner_model()
    if name == "band":
        return build_band_model(params.get("ell", 0.1))
    raise ValidationError(f"unknown model {name!r} (expected 'wigner' or 'band')")


@dataclass(frozen=True)
class DiscretizedModel:
    n: int
    lam: np.ndarray
    variance: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eta_bound: float
    name: str = "custom"

    def variance_matrix(self) -> np.ndarray:
        idx = np.arange(1, self.n + 1)
        return self.variance(idx[:, None], idx[None, :])


def _cell_sup(values_left, values_right, lipschitz, h):
    # sup of |c - g| over a cell given endpoint values and a Lipschitz bound on g
    if lipschitz is None:
        return np.inf
    return float(np.max(0.5 * (values_left + values_right + lipschitz * h)))


def _eta_eigenvalues(model: SpectralModel, n: int, lam: np.ndarray) -> float:
    # grid k/(10n) contains every cell edge i/n, so floor(n x) is constant on
    # each grid interval [x_k, x_{k+1})
    m = 10 * n
    k = np.arange(m)
    x_left = k / m
    x_right = (k + 1) / m
    idx = np.maximum(k // 10, 1)  # floor(n x); x < 1/n uses lambda_1
    c = lam[idx - 1]
    fl = np.asarray(model.f(x_left), dtype=float)
    fr = np.asarray(model.f(x_right), dtype=float)
    body = _cell_sup(np.abs(c - fl), np.abs(c - fr), model.f_lipschitz, 1.0 / m)
    at_one = abs(lam[n - 1] - float(model.f(1.0)))
    return max(body, at_one)


def _eta_variances(model: SpectralModel, n: int, variance, chunk: int = 256) -> float:
    """Sup discrepancy of the variance profile.

    Lipschitz profiles: one sample per index cell (its lower-left corner) plus
    ``2 L / n``.  Discontinuous profiles fall back to the range bound
    ``max(values) - min(values)``, which is what the sup norm actually sees
    across a jump.
    """
    if model.sigma2_lipschitz is None:
        g = np.linspace(0.0, 1.0, 401)
        vals = np.asarray(model.sigma2(g[:, None], g[None, :]), dtype=float)
        return float(vals.max() - vals.min())
    idx = np.arange(1, n + 1)
    x = idx / n
    worst = 0.0
    for r0 in range(0, n, chunk):
        rows = idx[r0:r0 + chunk, None]
        disc = np.abs(variance(rows, idx[None, :]) - model.sigma2(rows / n, x[None, :]))
        worst = max(worst, float(disc.max()))
    return worst + 2.0 * model.sigma2_lipschitz / n


def discretize(model: SpectralModel, n: int) -> DiscretizedModel:
    """Sample ``lambda_i = f(i/n)`` and ``sigma_n^2(i, j) = sigma^2(i/n, j/n)``."""
    n = int(n)
    if n < 1:
        raise ValidationError(f"matrix size n must be >= 1, got {n}")
    lam = np.asarray(model.f(np.arange(1, n + 1) / n), dtype=float)
    sigma2 = model.sigma2

    def variance(i, j):
        return np.asarray(sigma2(np.asarray(i) / n, np.asarray(j) / n), dtype=float)

    eta = _eta_eigenvalues(model, n, lam) + _eta_variances(model, n, variance)
    return DiscretizedModel(n=n, lam=lam, variance=variance, eta_bound=eta, name=model.name)


def load_tabulated(path, eta_bound: float) -> DiscretizedModel:
    """Read ``n``, then n eigenvalues, then n*n variances (row-major), whitespace separated."""
    path = Path(path)
    try:
        tokens = path.read_text().split()
    except OSError as exc:
        raise ValidationError(f"cannot read tabulated model {path}: {exc}") from exc
    if not tokens:
        raise ValidationError(f"{path}: empty file")
    try:
        n = int(tokens[0])
        nums = np.array([float(t) for t in tokens[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if n < 1 or nums.size != n + n * n:
        raise ValidationError(f"{path}: expected {n + n * n} numbers after n={n}, found {nums.size}")
    lam = nums[:n]
    var = nums[n:].reshape(n, n)
    if not np.array_equal(var, var.T):
        raise ValidationError(f"{path}: variance table is not symmetric")
    if np.any(var < 0) or not np.all(np.isfinite(nums)):
        raise ValidationError(f"{path}: variances must be finite and non-negative")
    if eta_bound < 0:
        raise ValidationError("eta_bound must be >= 0")

    def variance(i, j):
        return var[np.asarray(i) - 1, np.asarray(j) - 1]

    return DiscretizedModel(n=n, lam=lam, variance=variance, eta_bound=float(eta_bound))
