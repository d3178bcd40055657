"""Sampling of the Hermitian perturbation X_n and assembly of D_n + eps X_n."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import DiscretizedModel
from .rng import entry_words, words_to_unit

_SQRT3 = np.sqrt(3.0)
_TWO_PI = 2.0 * np.pi


class EntryDistribution(enum.Enum):
    """Standardized entry laws (mean 0, variance 1, all moments finite)."""

    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform-centered"

    @classmethod
    def parse(cls, value) -> "EntryDistribution":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name.lower()):
                return member
        raise ValidationError(
            f"unknown entry distribution {value!r}; choose from {[m.value for m in cls]}"
        )

    def standardized(self, words, complex_: bool = False) -> np.ndarray:
        """Map four Philox words per entry to one standardized draw.

        Complex draws split the unit variance evenly between real and imaginary
        parts.
        """
        w0, w1, w2, w3 = words
        u1 = words_to_unit(w0, w1)
        u2 = words_to_unit(w2, w3)
        if self is EntryDistribution.GAUSSIAN:
            r = np.sqrt(-2.0 * np.log(u1))
            re = r * np.cos(_TWO_PI * u2)
            if not complex_:
                return re
            return (re + 1j * r * np.sin(_TWO_PI * u2)) / np.sqrt(2.0)
        if self is EntryDistribution.RADEMACHER:
            re = np.where(w0 & np.uint64(1), 1.0, -1.0)
            if not complex_:
                return re
            im = np.where(w2 & np.uint64(1), 1.0, -1.0)
            return (re + 1j * im) / np.sqrt(2.0)
        re = _SQRT3 * (2.0 * u1 - 1.0)
        if not complex_:
            return re
        return (re + 1j * _SQRT3 * (2.0 * u2 - 1.0)) / np.sqrt(2.0)


def _standardized_diagonal(dist: EntryDistribution, words) -> np.ndarray:
    return dist.standardized(words, complex_=False)


def sample_perturbation(
    d_model: DiscretizedModel,
    dist: EntryDistribution | str = EntryDistribution.GAUSSIAN,
    seed: int = 0,
    *,
    complex_: bool = False,
    block_rows: int = 256,
    row_order=None,
) -> np.ndarray:
    """Draw ``X_n`` with entries ``sigma_n(i, j) xi_ij / sqrt(n)``.

    The draw at ``(i, j)``, ``i <= j``, depends only on ``(seed, i, j)``;
    ``block_rows`` and ``row_order`` (an iterable of block starts) change the
    fill schedule but never the result.
    """
    dist = EntryDistribution.parse(dist)
    n = d_model.n
    dtype = np.complex128 if complex_ else np.float64
    x = np.zeros((n, n), dtype=dtype)
    scale = 1.0 / np.sqrt(n)
    starts = list(range(0, n, block_rows)) if row_order is None else list(row_order)
    for r0 in starts:
        r1 = min(r0 + block_rows, n)
        ii, jj = _upper_block(r0, r1, n)
        words = entry_words(seed, ii, jj)
        xi = dist.standardized(words, complex_=complex_)
        diag = ii == jj
        if complex_ and diag.any():
            xi[diag] = _standardized_diagonal(dist, tuple(w[diag] for w in words))
        sd = np.sqrt(d_model.variance(ii + 1, jj + 1))
        x[ii, jj] = sd * xi * scale
    upper = np.triu(x, 1)
    x = upper + upper.conj().T + np.diag(np.diag(x).real).astype(dtype)
    return x


def _upper_block(r0: int, r1: int, n: int):
    rows = []
    cols = []
    for i in range(r0, r1):
        rows.append(np.full(n - i, i, dtype=np.int64))
        cols.append(np.arange(i, n, dtype=np.int64))
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(rows), np.concatenate(cols)


def epsilon_rule(n: int, gamma: float) -> float:
    """``eps = n^(-gamma)``; gamma must exceed 1/2 so that eps << n^(-1/2)."""
    if not gamma > 0.5:
        raise ValidationError(
            f"gamma={gamma} violates the hypothesis eps = eps_n << n^(-1/2) (need gamma > 0.5)"
        )
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return float(n) ** (-float(gamma))


@dataclass(frozen=True)
class PerturbedSystem:
    d_model: DiscretizedModel
    x: np.ndarray
    epsilon: float
    d_eps: np.ndarray
    seed: int = 0

    @property
    def n(self) -> int:
        return self.d_model.n


def assemble(d_model: DiscretizedModel, x: np.ndarray, epsilon: float, seed: int = 0) -> PerturbedSystem:
    x = np.asarray(x)
    if x.shape != (d_model.n, d_model.n):
        raise ValidationError(f"perturbation has shape {x.shape}, expected {(d_model.n, d_model.n)}")
    if epsilon < 0:
        raise ValidationError(f"epsilon must be non-negative, got {epsilon}")
    d_eps = epsilon * x
    d_eps[np.diag_indices(d_model.n)] += d_model.lam
    return PerturbedSystem(d_model=d_model, x=x, epsilon=float(epsilon), d_eps=d_eps, seed=int(seed))


def sample_system(d_model, epsilon, seed, dist=EntryDistribution.GAUSSIAN, complex_=False) -> PerturbedSystem:
    x = sample_perturbation(d_model, dist, seed, complex_=complex_)
    return assemble(d_model, x, epsilon, seed)


_MAGIC_REAL = b"PSPXR001"
_MAGIC_COMPLEX = b"PSPXC001"
_HEADER = struct.Struct("<8sQdQ")


def dump_matrix(path, x: np.ndarray, epsilon: float, seed: int) -> None:
    """Binary dump: magic, n (u64), eps (f64), seed (u64), then row-major float64.

    Complex matrices use a distinct magic and interleave real/imaginary parts.
    """
    x = np.asarray(x)
    n = x.shape[0]
    is_complex = np.iscomplexobj(x)
    magic = _MAGIC_COMPLEX if is_complex else _MAGIC_REAL
    body = np.ascontiguousarray(x, dtype="<c16" if is_complex else "<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, n, float(epsilon), int(seed) & ((1 << 64) - 1)))
        fh.write(body.tobytes())


def load_matrix(path) -> tuple[np.ndarray, float, int]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValidationError(f"{path}: truncated header")
    magic, n, eps, seed = _HEADER.unpack_from(data)
    if magic not in (_MAGIC_REAL, _MAGIC_COMPLEX):
        raise ValidationError(f"{path}: bad magic {magic!r}")
    dtype = "<c16" if magic == _MAGIC_COMPLEX else "<f8"
    body = np.frombuffer(data, dtype=dtype, offset=_HEADER.size)
    if body.size != n * n:
        raise ValidationError(f"{path}: expected {n * n} entries, found {body.size}")
    return body.reshape(n, n).copy(), eps, seed
