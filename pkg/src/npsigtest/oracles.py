"""Brute-force arrangement-enumeration oracles.

Each oracle evaluates a statistic exactly as its defining sum is written:
explicit loops over index arrangements, scalar kernel evaluations, and exact
compensated accumulation. They share nothing with the optimized matrix paths
beyond the scalar kernel functions, and exist solely to pin those paths down
in tests and in the self-check command. Complexity is O(n^4) to O(n^6), so
keep n at 10 or below.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from .data import ScaledDataset
from .kernels import KernelSpec, PsiSpec, eval_mixed_kernel, eval_psi


def _pair_tables(d: ScaledDataset, g: float, h: float, kernel: KernelSpec, psi: PsiSpec | None, joint: bool):
    """Scalar-built L, K, and psi pair tables (plain nested loops)."""
    ds = d.dataset
    n = ds.n
    w_cont, w_disc = ds.w_split()
    x_cont, x_disc = ds.x_split()
    L = [[0.0] * n for _ in range(n)]
    K = [[0.0] * n for _ in range(n)]
    P = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            wd_eq = w_disc[i] == w_disc[j]
            L[i][j] = eval_mixed_kernel(kernel, w_cont[i] - w_cont[j], wd_eq, g)
            K[i][j] = eval_mixed_kernel(kernel, w_cont[i] - w_cont[j], wd_eq, h)
            if joint:
                if ds.q == 0:
                    P[i][j] = 1.0
                else:
                    xdiff = (ds.x[i] - ds.x[j]) / h
                    P[i][j] = h ** (-ds.q) * float(
                        max(0.0, 0.75 * (1.0 - float(np.dot(xdiff, xdiff))))
                    )
            else:
                xdiff = np.concatenate([x_cont[i] - x_cont[j], x_disc[i] - x_disc[j]])
                P[i][j] = eval_psi(psi, xdiff)
    return L, K, P


class OracleTables:
    """Pair tables plus the response vector, shared by the oracle sums below."""

    def __init__(
        self,
        d: ScaledDataset,
        g: float,
        h: float,
        kernel: KernelSpec = KernelSpec(),
        psi: PsiSpec = PsiSpec(),
        joint: bool = False,
    ):
        self.n = d.n
        self.y = [float(v) for v in d.dataset.y]
        self.L, self.K, self.P = _pair_tables(d, g, h, kernel, psi, joint)
        self.h_power = h ** (d.dataset.p_cont + (d.dataset.q if joint else 0))

    def arrangements(self, m: int) -> float:
        out = 1.0
        for i in range(m):
            out *= self.n - i
        return out


def oracle_smoother(d: ScaledDataset, g: float, kernel: KernelSpec = KernelSpec()):
    """Scalar-loop leave-one-out estimates: (fhat, rhat, uf)."""
    t = OracleTables(d, g, g, kernel)
    n, y, L = t.n, t.y, t.L
    fhat, rhat, uf = [], [], []
    for i in range(n):
        ssum = math.fsum(L[i][k] for k in range(n) if k != i)
        ysum = math.fsum(y[k] * L[i][k] for k in range(n) if k != i)
        fhat.append(ssum / (n - 1))
        rhat.append(ysum / ssum if ssum > 0 else math.nan)
        uf.append(math.fsum((y[i] - y[k]) * L[i][k] for k in range(n) if k != i) / (n - 1))
    return np.array(fhat), np.array(rhat), np.array(uf)


def oracle_ihat(t: OracleTables) -> float:
    """Quadruple sum over i != j, k != i, l != j, as the pair statistic expands."""
    n, y, L, K, P = t.n, t.y, t.L, t.K, t.P
    terms = (
        (y[i] - y[k]) * (y[j] - y[l]) * L[i][k] * L[j][l] * K[i][j] * P[i][j]
        for i in range(n)
        for j in range(n)
        if j != i
        for k in range(n)
        if k != i
        for l in range(n)
        if l != j
    )
    return math.fsum(terms) / (t.arrangements(2) * (n - 1) ** 2)


def oracle_itilde(t: OracleTables) -> float:
    """Average over arrangements of four distinct indices."""
    n, y, L, K, P = t.n, t.y, t.L, t.K, t.P
    terms = (
        (y[i] - y[k]) * (y[j] - y[l]) * L[i][k] * L[j][l] * K[i][j] * P[i][j]
        for i, j, k, l in permutations(range(n), 4)
    )
    return math.fsum(terms) / t.arrangements(4)


def oracle_diagonal_terms(t: OracleTables) -> tuple[float, float, float]:
    """V1, V2 over three distinct indices; V3 over two."""
    n, y, L, K, P = t.n, t.y, t.L, t.K, t.P
    v1 = math.fsum(
        (y[i] - y[k]) * (y[j] - y[k]) * L[i][k] * L[j][k] * K[i][j] * P[i][j]
        for i, j, k in permutations(range(n), 3)
    ) / t.arrangements(3)
    v2 = math.fsum(
        (y[i] - y[j]) * (y[j] - y[k]) * L[i][j] * L[j][k] * K[i][j] * P[i][j]
        for i, j, k in permutations(range(n), 3)
    ) / t.arrangements(3)
    v3 = math.fsum(
        (y[i] - y[j]) ** 2 * L[i][j] ** 2 * K[i][j] * P[i][j]
        for i, j in permutations(range(n), 2)
    ) / t.arrangements(2)
    return v1, v2, v3


def oracle_var_hat(t: OracleTables, uf: np.ndarray) -> float:
    """Direct double loop over the pair-sum variance estimator."""
    n, K, P = t.n, t.K, t.P
    total = math.fsum(
        uf[i] ** 2 * uf[j] ** 2 * K[i][j] ** 2 * P[i][j] ** 2
        for i, j in permutations(range(n), 2)
    )
    return 2.0 * t.h_power * total / t.arrangements(2)


def oracle_var_tilde(t: OracleTables) -> float:
    """Exact six-distinct-index arrangement average. O(n^6): n <= 10 only."""
    n, y, L, K, P = t.n, t.y, t.L, t.K, t.P
    if n > 10:
        raise ValueError("exact six-index oracle is limited to n <= 10")
    terms = (
        (y[i] - y[k])
        * (y[i] - y[kp])
        * (y[j] - y[l])
        * (y[j] - y[lp])
        * L[i][k]
        * L[i][kp]
        * L[j][l]
        * L[j][lp]
        * K[i][j] ** 2
        * P[i][j] ** 2
        for i, j, k, kp, l, lp in permutations(range(n), 6)
    )
    return 2.0 * t.h_power * math.fsum(terms) / t.arrangements(6)


def oracle_var_tilde_nested(t: OracleTables) -> float:
    """Enumerated form of the production six-index path: the inner index
    pairs avoid their own anchor (k, k' != i and l, l' != j) but are not
    constrained across anchors. Validates the vectorized implementation."""
    n, y, L, K, P = t.n, t.y, t.L, t.K, t.P
    if n > 10:
        raise ValueError("nested six-index oracle is limited to n <= 10")

    def anchor_terms(i):
        return [
            (y[i] - y[k]) * (y[i] - y[kp]) * L[i][k] * L[i][kp]
            for k in range(n)
            if k != i
            for kp in range(n)
            if kp != i and kp != k
        ]

    a = [math.fsum(anchor_terms(i)) for i in range(n)]
    total = math.fsum(
        a[i] * a[j] * K[i][j] ** 2 * P[i][j] ** 2
        for i in range(n)
        for j in range(n)
        if j != i
    )
    denom = t.arrangements(2) * (n - 2) ** 2 * (n - 3) ** 2
    return 2.0 * t.h_power * total / denom


def oracle_decomposition_sides(t: OracleTables) -> tuple[float, float]:
    """Both sides of the distinct-index decomposition, each by enumeration.

    Left: arrangements(4) times the four-distinct-index average. Right: the
    pair-statistic total minus its coinciding-index sums.
    """
    n = t.n
    lhs = t.arrangements(4) * oracle_itilde(t)
    v1, v2, v3 = oracle_diagonal_terms(t)
    rhs = (
        n * (n - 1) ** 3 * oracle_ihat(t)
        - t.arrangements(3) * v1
        - 2.0 * t.arrangements(3) * v2
        + t.arrangements(2) * v3
    )
    return lhs, rhs


def oracle_dgm(d: ScaledDataset, uf: np.ndarray) -> float:
    """Direct enumeration of the marked-process statistic."""
    ds = d.dataset
    n = ds.n
    total = []
    for i in range(n):
        inner = math.fsum(
            uf[j]
            for j in range(n)
            if np.all(ds.w[j] <= ds.w[i]) and np.all(ds.x[j] <= ds.x[i])
        )
        total.append(inner * inner)
    return math.fsum(total)


def oracle_ols_f(d: ScaledDataset) -> float:
    """F statistic via explicitly solved normal equations (second OLS path)."""
    ds = d.dataset
    n = ds.n
    ones = np.ones((n, 1))
    z0 = np.hstack([ones, ds.w])
    z1 = np.hstack([ones, ds.w, ds.x])

    def rss(z):
        beta = np.linalg.solve(z.T @ z, z.T @ ds.y)
        e = ds.y - z @ beta
        return math.fsum((e * e).tolist())

    rss0, rss1 = rss(z0), rss(z1)
    df2 = n - 1 - ds.p - ds.q
    return ((rss0 - rss1) / ds.q) / (rss1 / df2)
