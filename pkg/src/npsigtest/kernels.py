"""Smoothing kernels, the pair-weight function for the covariates under test,
and the bandwidth rules.

All kernels are radial: a univariate profile applied to the Euclidean norm of
the (bandwidth-scaled) difference vector. Discrete coordinates contribute
exact-equality indicators instead of being smoothed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT6 = math.sqrt(6.0)
_NORMAL_C = 1.0 / math.sqrt(2.0 * math.pi)

KERNEL_SHAPES = ("epanechnikov",)
PSI_FAMILIES = ("triangular", "normal", "indicator")


@dataclass(frozen=True)
class KernelSpec:
    """Radial smoothing kernel. Only the Epanechnikov profile is implemented;
    the tag exists so higher-order profiles can be added without API churn."""

    shape: str = "epanechnikov"

    def __post_init__(self):
        if self.shape not in KERNEL_SHAPES:
            raise ValueError(f"unknown kernel shape {self.shape!r}")


@dataclass(frozen=True)
class PsiSpec:
    """Pair weight for the covariates under test.

    ``triangular`` and ``normal`` are bounded even densities (unit second
    moment) applied to the norm of the difference; ``indicator`` is the
    all-coordinates-equal indicator used for discrete covariates.
    """

    family: str = "normal"

    def __post_init__(self):
        if self.family not in PSI_FAMILIES:
            raise ValueError(f"unknown psi family {self.family!r}")


@dataclass(frozen=True)
class Bandwidths:
    g: float
    h: float
    c: float = 1.0

    def __post_init__(self):
        if not (self.g > 0 and self.h > 0):
            raise ValueError("bandwidths must be positive")


def default_bandwidths(n: int, c: float) -> Bandwidths:
    """Estimation bandwidth n^(-1/6) and test bandwidth c * n^(-2.1/6)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not c > 0:
        raise ValueError("bandwidth factor c must be positive")
    return Bandwidths(g=n ** (-1.0 / 6.0), h=c * n ** (-2.1 / 6.0), c=c)


def _epanechnikov_of_sqnorm(s):
    """0.75 * (1 - s) on s < 1, else 0, where s is the squared norm."""
    return np.where(s < 1.0, 0.75 * (1.0 - s), 0.0)


def eval_kernel(spec: KernelSpec, u: np.ndarray) -> float:
    """Kernel value at a difference vector: 0.75 (1 - ||u||^2) 1{||u|| < 1}."""
    u = np.asarray(u, dtype=float)
    return float(_epanechnikov_of_sqnorm(np.dot(u.ravel(), u.ravel())))


def eval_mixed_kernel(
    spec: KernelSpec,
    cont_diff: np.ndarray,
    disc_equal,
    bandwidth: float,
) -> float:
    """h^(-p_c) K(cont_diff / h) times the product of discrete-equality flags."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    cont_diff = np.asarray(cont_diff, dtype=float).ravel()
    if not all(bool(f) for f in disc_equal):
        return 0.0
    p_c = cont_diff.size
    return bandwidth ** (-p_c) * eval_kernel(spec, cont_diff / bandwidth)


def psi_profile(spec: PsiSpec, t):
    """Univariate density profile of a psi family, evaluated at |t| = norm."""
    t = np.abs(np.asarray(t, dtype=float))
    if spec.family == "triangular":
        # unit-second-moment triangular density: support [-sqrt(6), sqrt(6)]
        return np.maximum(0.0, (1.0 - t / SQRT6)) / SQRT6
    if spec.family == "normal":
        return _NORMAL_C * np.exp(-0.5 * t * t)
    raise ValueError("indicator psi has no density profile")


def eval_psi(spec: PsiSpec, x_diff: np.ndarray) -> float:
    """Pair weight at a difference vector of (scaled) x values.

    Density families evaluate their profile at the Euclidean norm of the
    whole difference; the indicator requires every coordinate to match
    exactly.
    """
    x_diff = np.asarray(x_diff, dtype=float).ravel()
    if spec.family == "indicator":
        return 1.0 if np.all(x_diff == 0.0) else 0.0
    if x_diff.size == 0:
        return float(psi_profile(spec, 0.0))
    return float(psi_profile(spec, math.sqrt(float(np.dot(x_diff, x_diff)))))


# ---------------------------------------------------------------------------
# Vectorized pairwise builders. These produce the n-by-n weight matrices the
# statistics reuse across bootstrap replications; block variants exist so
# callers can stream when materializing n^2 floats is not affordable.
# ---------------------------------------------------------------------------


def _sq_dists_block(a_rows: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between each row of a_rows and each row of b."""
    if a_rows.shape[1] == 0:
        return np.zeros((a_rows.shape[0], b.shape[0]))
    diff = a_rows[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _disc_equal_block(a_rows: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1.0 where all discrete coordinates agree exactly, else 0.0."""
    if a_rows.shape[1] == 0:
        return np.ones((a_rows.shape[0], b.shape[0]))
    eq = a_rows[:, None, :] == b[None, :, :]
    return eq.all(axis=2).astype(float)


def mixed_kernel_block(
    cont: np.ndarray,
    disc: np.ndarray,
    bandwidth: float,
    rows: slice,
) -> np.ndarray:
    """Rows [rows] of the pairwise mixed-kernel matrix at the given bandwidth."""
    s = _sq_dists_block(cont[rows], cont) / (bandwidth * bandwidth)
    vals = _epanechnikov_of_sqnorm(s) * bandwidth ** (-cont.shape[1])
    if disc.shape[1]:
        vals = vals * _disc_equal_block(disc[rows], disc)
    return vals


def mixed_kernel_matrix(cont: np.ndarray, disc: np.ndarray, bandwidth: float) -> np.ndarray:
    """Full pairwise mixed-kernel matrix with a zeroed diagonal."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    n = cont.shape[0]
    m = mixed_kernel_block(cont, disc, bandwidth, slice(0, n))
    np.fill_diagonal(m, 0.0)
    return m


def psi_block(spec: PsiSpec, cont: np.ndarray, disc: np.ndarray, rows: slice) -> np.ndarray:
    """Rows [rows] of the pairwise psi-weight matrix."""
    if spec.family == "indicator":
        both = np.hstack([cont, disc])
        return _disc_equal_block(both[rows], both)
    both = np.hstack([cont, disc])
    t = np.sqrt(_sq_dists_block(both[rows], both))
    return psi_profile(spec, t)


def psi_matrix(spec: PsiSpec, cont: np.ndarray, disc: np.ndarray) -> np.ndarray:
    n = cont.shape[0]
    return psi_block(spec, cont, disc, slice(0, n))


def joint_x_kernel_matrix(spec: KernelSpec, x: np.ndarray, bandwidth: float) -> np.ndarray:
    """h^(-q) K((x_i - x_j)/h) pairwise; identically 1 when x is empty."""
    n = x.shape[0]
    if x.shape[1] == 0:
        return np.ones((n, n))
    s = _sq_dists_block(x, x) / (bandwidth * bandwidth)
    return _epanechnikov_of_sqnorm(s) * bandwidth ** (-x.shape[1])
