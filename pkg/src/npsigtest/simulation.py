"""Data-generating processes and the Monte Carlo experiment runner.

Both designs share the regression backbone (w'theta)^3 - w'theta + noise with
sd-2 Gaussian errors and a two-dimensional standard normal w. The departure
from the null is delta times a shape function: of x (continuous design) or of
w gated by the event x = 1 (Bernoulli-x design). Draw order is fixed as
(w, x, noise) so datasets with delta = 0 are identical across alternative
tags under the same seed.

Replication r of grid cell ci derives every random stream from
(master_seed, ci, r), which makes experiment output independent of worker
count and scheduling.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bootstrap import TestConfig, decide_scaled
from .data import ColumnKind, Dataset, all_continuous, standardize
from .kernels import PsiSpec, default_bandwidths
from .smoother import compute_smoother
from .statistics import DegenerateStatisticError, fisher_test

THETA = np.array([1.0, -1.0]) / math.sqrt(2.0)
NOISE_SD = 2.0
BERNOULLI_P = 0.6

FAMILIES = ("continuous", "discrete_x")
ALTERNATIVES = ("null", "quadratic", "linear", "sine")


@dataclass(frozen=True)
class DgpSpec:
    family: str
    n: int
    q: int = 1
    alternative: str = "null"
    delta: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown DGP family {self.family!r}")
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"unknown alternative {self.alternative!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.alternative == "null" and self.delta != 0.0:
            raise ValueError("the null DGP requires delta = 0")
        if self.family == "continuous" and self.q < 1:
            raise ValueError("continuous design needs q >= 1")
        if self.family == "discrete_x" and self.alternative == "linear":
            raise ValueError("the Bernoulli-x design has no linear alternative")


def _shape_of_index(alternative: str, index: np.ndarray) -> np.ndarray:
    if alternative == "quadratic":
        return (index - 1.0) ** 2 / math.sqrt(2.0)
    if alternative == "linear":
        return index
    if alternative == "sine":
        return np.sin(2.0 * index)
    return np.zeros_like(index)


def gen_continuous(spec: DgpSpec, rng: np.random.Generator) -> Dataset:
    """Continuous design: q-variate standard normal x, departure delta*d(x'beta)."""
    if spec.family != "continuous":
        raise ValueError("spec is not a continuous design")
    n, q = spec.n, spec.q
    w = rng.standard_normal((n, 2))
    x = rng.standard_normal((n, q))
    eps = NOISE_SD * rng.standard_normal(n)
    widx = w @ THETA
    beta = np.ones(q) / math.sqrt(q)
    y = widx**3 - widx + spec.delta * _shape_of_index(spec.alternative, x @ beta) + eps
    return Dataset(y=y, w=w, x=x, w_kinds=all_continuous(2), x_kinds=all_continuous(q))


def gen_discrete(spec: DgpSpec, rng: np.random.Generator) -> Dataset:
    """Bernoulli-x design: the departure delta*d(w'theta) applies where x = 1."""
    if spec.family != "discrete_x":
        raise ValueError("spec is not a Bernoulli-x design")
    n = spec.n
    w = rng.standard_normal((n, 2))
    x = (rng.random(n) < BERNOULLI_P).astype(float).reshape(-1, 1)
    eps = NOISE_SD * rng.standard_normal(n)
    widx = w @ THETA
    y = (
        widx**3
        - widx
        + spec.delta * _shape_of_index(spec.alternative, widx) * x[:, 0]
        + eps
    )
    return Dataset(
        y=y, w=w, x=x, w_kinds=all_continuous(2), x_kinds=(ColumnKind.DISCRETE,)
    )


def generate(spec: DgpSpec, rng: np.random.Generator) -> Dataset:
    return gen_continuous(spec, rng) if spec.family == "continuous" else gen_discrete(spec, rng)


@dataclass(frozen=True)
class TestTemplate:
    """Named test configuration to instantiate at each grid cell."""

    __test__ = False  # not a pytest class
    name: str
    statistic: str = "itilde"  # itilde | ihat | lv | dgm | fisher
    psi: str = "normal"
    critical: str = "bootstrap"
    variance: str = "var_hat"


@dataclass(frozen=True)
class Cell:
    dgp: DgpSpec
    c: float


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple[Cell, ...]
    tests: tuple[TestTemplate, ...]
    replications: int
    master_seed: int
    alpha: float = 0.05
    B: int = 199
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def grid_cells(
    family: str,
    alternatives,
    n_grid,
    q_grid,
    delta_grid,
    c_grid,
) -> tuple[Cell, ...]:
    """Cartesian grid in a fixed deterministic order."""
    cells = []
    for alt in alternatives:
        deltas = [0.0] if alt == "null" else list(delta_grid)
        for n in n_grid:
            for q in q_grid:
                for delta in deltas:
                    for c in c_grid:
                        cells.append(
                            Cell(
                                dgp=DgpSpec(
                                    family=family,
                                    n=int(n),
                                    q=int(q),
                                    alternative=alt,
                                    delta=float(delta),
                                ),
                                c=float(c),
                            )
                        )
    return tuple(cells)


@dataclass(frozen=True)
class ResultRow:
    test: str
    n: int
    q: int
    c: float
    delta: float
    alternative: str
    alpha: float
    reps: int
    reject_rate: float
    mc_se: float
    failures: int

    @property
    def invalid(self) -> bool:
        return self.failures > 0.05 * self.reps


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]

    CSV_HEADER = (
        "test,n,q,c,delta,alternative,alpha,reps,reject_rate,mc_se,failures"
    )

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER.split(","))
        for r in self.rows:
            writer.writerow(
                [
                    r.test,
                    r.n,
                    r.q,
                    f"{r.c:g}",
                    f"{r.delta:g}",
                    r.alternative,
                    f"{r.alpha:g}",
                    r.reps,
                    f"{r.reject_rate:.6f}",
                    f"{r.mc_se:.6f}",
                    r.failures,
                ]
            )
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_string())

    def rate_of(self, test: str, **match) -> ResultRow:
        """The unique row for a test name and cell coordinates."""
        hits = [
            r
            for r in self.rows
            if r.test == test
            and all(getattr(r, k) == v for k, v in match.items())
        ]
        if len(hits) != 1:
            raise KeyError(f"expected one row for {test} {match}, got {len(hits)}")
        return hits[0]


# outcome codes returned by a replication, per test
_ACCEPT, _REJECT, _FAIL = 0, 1, 2


def _substream(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([master_seed % (1 << 64), *path])
    )


def _subseed(master_seed: int, *path: int) -> int:
    seq = np.random.SeedSequence([master_seed % (1 << 64), *path])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _template_config(t: TestTemplate, cell: Cell, alpha: float, B: int, seed: int) -> TestConfig:
    return TestConfig(
        bandwidths=default_bandwidths(cell.dgp.n, cell.c),
        statistic=t.statistic,
        psi=PsiSpec(t.psi),
        variance=t.variance,
        critical=t.critical,
        alpha=alpha,
        B=B,
        seed=seed,
    )


def _run_replication(args) -> list[int]:
    """One dataset, every test of the cell. Returns an outcome code per test."""
    cell, tests, alpha, B, master_seed, ci, r = args
    data = generate(cell.dgp, _substream(master_seed, ci, r, 0))
    sd = standardize(data)
    sm = None
    outcomes = []
    for ti, t in enumerate(tests):
        try:
            if t.statistic == "fisher":
                _, reject = fisher_test(sd, alpha)
            else:
                if sm is None:
                    bw = default_bandwidths(cell.dgp.n, cell.c)
                    sm = compute_smoother(sd, bw.g)
                cfg = _template_config(
                    t, cell, alpha, B, _subseed(master_seed, ci, r, 1 + ti)
                )
                reject = decide_scaled(sd, sm, cfg).reject
            outcomes.append(_REJECT if reject else _ACCEPT)
        except DegenerateStatisticError:
            outcomes.append(_FAIL)
    return outcomes


def run_experiment(cfg: ExperimentConfig, progress=None) -> ResultTable:
    """Rejection-rate table over the grid; deterministic for a fixed seed.

    ``progress`` is an optional callable taking a status line; replications
    run in a process pool when cfg.workers > 1.
    """
    rows = []
    for ci, cell in enumerate(cfg.cells):
        t0 = time.perf_counter()
        tasks = [
            (cell, cfg.tests, cfg.alpha, cfg.B, cfg.master_seed, ci, r)
            for r in range(cfg.replications)
        ]
        if cfg.workers == 1:
            outcomes = [_run_replication(t) for t in tasks]
        else:
            chunk = max(1, cfg.replications // (cfg.workers * 4))
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                outcomes = list(pool.map(_run_replication, tasks, chunksize=chunk))
        per_test = np.array(outcomes)  # (reps, n_tests)
        for ti, t in enumerate(cfg.tests):
            col = per_test[:, ti]
            failures = int(np.sum(col == _FAIL))
            successes = cfg.replications - failures
            rejects = int(np.sum(col == _REJECT))
            rate = rejects / successes if successes else math.nan
            se = math.sqrt(rate * (1.0 - rate) / successes) if successes else math.nan
            row = ResultRow(
                test=t.name,
                n=cell.dgp.n,
                q=cell.dgp.q,
                c=cell.c,
                delta=cell.dgp.delta,
                alternative=cell.dgp.alternative,
                alpha=cfg.alpha,
                reps=cfg.replications,
                reject_rate=rate,
                mc_se=se,
                failures=failures,
            )
            rows.append(row)
            if progress is not None and row.invalid:
                progress(f"warning: cell {ci} test {t.name}: {failures} failures")
        if progress is not None:
            progress(
                f"cell {ci + 1}/{len(cfg.cells)} "
                f"[{cell.dgp.family} {cell.dgp.alternative} n={cell.dgp.n} "
                f"q={cell.dgp.q} c={cell.c:g} delta={cell.dgp.delta:g}] "
                f"done in {time.perf_counter() - t0:.1f}s"
            )
    return ResultTable(rows=tuple(rows))
