"""Leave-one-out kernel estimators of the design density and regression.

For each observation i the smoother produces, using every other observation:

* ``fhat``: the local design density of w,
* ``rhat``: the local regression of y on w (NaN where the local density is 0),
* ``uf``: the density-weighted residual (y_i - rhat_i) * fhat_i, accumulated
  directly from pairwise differences so it stays finite even where fhat is 0.

The pairwise kernel matrix is retained up to ``store_threshold`` rows so the
statistics and the bootstrap can reuse it; above the threshold the vectors
are accumulated in row blocks and the matrix is not kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ScaledDataset
from .kernels import KernelSpec, mixed_kernel_block

DEFAULT_STORE_THRESHOLD = 4000
_BLOCK_ROWS = 256


@dataclass(frozen=True)
class SmootherOutput:
    """Per-observation leave-one-out quantities plus the reusable kernel matrix.

    ``resid`` is y - rhat (NaN where rhat is undefined); consumers that
    divide by anything must check ``fhat > 0`` first.
    """

    fhat: np.ndarray
    rhat: np.ndarray
    uf: np.ndarray
    resid: np.ndarray
    pairwise: np.ndarray | None

    @property
    def has_undefined_rhat(self) -> bool:
        return bool(np.any(np.isnan(self.rhat)))

    def require_pairwise(self, who: str) -> np.ndarray:
        if self.pairwise is None:
            raise ValueError(
                f"{who} needs the stored pairwise kernel matrix; recompute the "
                "smoother with a larger store_threshold"
            )
        return self.pairwise


def compute_smoother(
    d: ScaledDataset,
    g: float,
    kernel: KernelSpec = KernelSpec(),
    store_threshold: int = DEFAULT_STORE_THRESHOLD,
) -> SmootherOutput:
    """Leave-one-out density, regression, and weighted-residual vectors."""
    n = d.n
    if n < 3:
        raise ValueError("leave-one-out smoothing needs n >= 3")
    if not g > 0:
        raise ValueError("estimation bandwidth g must be positive")
    y = d.dataset.y
    cont, disc = d.dataset.w_split()

    if n <= store_threshold:
        pair = mixed_kernel_block(cont, disc, g, slice(0, n))
        np.fill_diagonal(pair, 0.0)
        row_sum = pair.sum(axis=1)
        y_sum = pair @ y
        uf = recompute_uf(pair, y)
    else:
        pair = None
        row_sum = np.empty(n)
        y_sum = np.empty(n)
        uf = np.empty(n)
        for start in range(0, n, _BLOCK_ROWS):
            rows = slice(start, min(start + _BLOCK_ROWS, n))
            block = mixed_kernel_block(cont, disc, g, rows)
            for i in range(rows.start, rows.stop):
                block[i - rows.start, i] = 0.0
            row_sum[rows] = block.sum(axis=1)
            y_sum[rows] = block @ y
            uf[rows] = ((y[rows, None] - y[None, :]) * block).sum(axis=1) / (n - 1)

    fhat = row_sum / (n - 1)
    rhat = np.full(n, np.nan)
    pos = row_sum > 0.0
    rhat[pos] = y_sum[pos] / row_sum[pos]
    return SmootherOutput(fhat=fhat, rhat=rhat, uf=uf, resid=y - rhat, pairwise=pair)


def recompute_uf(pairwise: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Leave-one-out weighted residuals for a replacement response vector,
    reusing a stored pairwise kernel matrix.

    Accumulated from pairwise differences so a constant (or shifted) response
    yields exact zeros rather than cancellation residue.
    """
    n = len(y)
    return ((y[:, None] - y[None, :]) * pairwise).sum(axis=1) / (n - 1)
