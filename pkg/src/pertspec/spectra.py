"""Eigendecomposition and the vector spectral measures built on it.

Basis indices are 1-based: ``vector_spectral_measure(dec, i)`` describes the
measure attached to the canonical vector e_i, 1 <= i <= n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EigenSolverError, ValidationError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # column j is the j-th eigenvector

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise EigenSolverError(f"matrix has {np.count_nonzero(~np.isfinite(h))} non-finite entries")
    asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if asym > HERMITIAN_TOL:
        raise ValidationError(f"matrix is not Hermitian: max |H - H^*| = {asym:.3e}")
    return h


def eigendecompose(h) -> EigenDecomposition:
    h = _check_hermitian(h)
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"eigensolver failed on {h.shape[0]}x{h.shape[0]} matrix "
            f"(max |entry| = {np.max(np.abs(h)):.3e}, Frobenius norm = {np.linalg.norm(h):.3e}): {exc}"
        ) from exc
    return EigenDecomposition(values=values, vectors=vectors)


@dataclass(frozen=True)
class SpectralMeasure:
    locations: np.ndarray
    weights: np.ndarray
    basis_index: int

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


def _check_index(i: int, n: int) -> int:
    i = int(i)
    if not 1 <= i <= n:
        raise ValidationError(f"basis index {i} out of range 1..{n}")
    return i


def overlaps(dec: EigenDecomposition, i: int) -> np.ndarray:
    """``|<u_j, e_i>|^2`` for all j (squared moduli, so never negative)."""
    i = _check_index(i, dec.n)
    return np.abs(dec.vectors[i - 1, :]) ** 2


def vector_spectral_measure(dec: EigenDecomposition, i: int) -> SpectralMeasure:
    return SpectralMeasure(locations=dec.values.copy(), weights=overlaps(dec, i), basis_index=int(i))


def integrate_measure(m: SpectralMeasure, phi) -> complex | float:
    """Sum of ``weight_j * phi(location_j)``; ``phi`` is any vectorized callable."""
    vals = np.asarray(phi(m.locations))
    out = np.sum(m.weights * vals)
    return complex(out) if np.iscomplexobj(out) else float(out)


def function_of_matrix(dec: EigenDecomposition, phi) -> np.ndarray:
    """``U phi(Lambda) U^*`` as a full matrix."""
    vals = np.asarray(phi(dec.values))
    return (dec.vectors * vals) @ dec.vectors.conj().T


def resolvent_entry(h: np.ndarray, i: int, z: complex) -> complex:
    """``((z - H)^{-1})_{ii}`` by a linear solve, independent of any eigensolver."""
    n = h.shape[0]
    i = _check_index(i, n)
    e = np.zeros(n, dtype=complex)
    e[i - 1] = 1.0
    sol = np.linalg.solve(z * np.eye(n) - h, e)
    return complex(sol[i - 1])


def operator_norm(h) -> float:
    h = _check_hermitian(h)
    try:
        vals = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def weyl_check(lam_sorted, lam_eps_sorted, epsilon: float, xnorm: float) -> bool:
    a = np.asarray(lam_sorted, dtype=float)
    b = np.asarray(lam_eps_sorted, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return True
    return bool(np.max(np.abs(b - a)) <= epsilon * xnorm + 1e-10)


def count_window(lam_eps_sorted, center: float, alpha: float) -> int:
    """Number of eigenvalues in the open interval ``(center - alpha, center + alpha)``."""
    if not alpha > 0:
        raise ValidationError(f"window half-width must be positive, got {alpha}")
    v = np.asarray(lam_eps_sorted)
    lo = np.searchsorted(v, center - alpha, side="right")
    hi = np.searchsorted(v, center + alpha, side="left")
    return int(max(hi - lo, 0))


def window_slice(lam_eps_sorted, center: float, alpha: float) -> slice:
    v = np.asarray(lam_eps_sorted)
    lo = int(np.searchsorted(v, center - alpha, side="right"))
    hi = int(np.searchsorted(v, center + alpha, side="left"))
    return slice(lo, max(lo, hi))


def write_measure_csv(m: SpectralMeasure, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "lambda_eps", "weight"])
        for j, (loc, wt) in enumerate(zip(m.locations, m.weights), start=1):
            w.writerow([j, f"{loc:.15g}", f"{wt:.15g}"])
