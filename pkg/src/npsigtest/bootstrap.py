"""Wild-bootstrap critical values and the end-to-end test procedure.

Resampled responses are built as rhat_i + eta_i * (y_i - rhat_i) with i.i.d.
multipliers eta of mean zero and second and third moments one, so the null
regression is imposed while conditional heteroskedasticity is preserved.
Each bootstrap replication b draws its multipliers from an RNG stream derived
from (seed, b); results are therefore bit-for-bit reproducible regardless of
execution order or worker count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.stats

from .data import ColumnKind, Dataset, ScaledDataset, standardize
from .kernels import Bandwidths, KernelSpec, PsiSpec
from .smoother import SmootherOutput, compute_smoother, recompute_uf
from .statistics import (
    CvmEngine,
    DegenerateStatisticError,
    StatEngine,
    StatisticValue,
    standardize_statistic,
)

SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + SQRT5) / 2.0
MAMMEN_P_LOW = (5.0 + SQRT5) / 10.0

STATISTICS = ("itilde", "ihat", "lv", "dgm")
VARIANCES = ("var_hat", "var_tilde")
CRITICALS = ("asymptotic", "bootstrap")

# fraction of degenerate bootstrap draws above which the test is abandoned
MAX_DEGENERATE_DRAW_FRACTION = 0.10


class MultiplierLaw(enum.Enum):
    MAMMEN_TWO_POINT = "mammen_two_point"


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class
    bandwidths: Bandwidths
    statistic: str = "itilde"
    psi: PsiSpec = field(default_factory=PsiSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    variance: str = "var_hat"
    critical: str = "bootstrap"
    alpha: float = 0.05
    B: int = 199
    seed: int = 0
    multiplier: MultiplierLaw = MultiplierLaw.MAMMEN_TWO_POINT

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.variance not in VARIANCES:
            raise ValueError(f"unknown variance estimator {self.variance!r}")
        if self.critical not in CRITICALS:
            raise ValueError(f"unknown critical-value method {self.critical!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.statistic == "dgm" and self.critical != "bootstrap":
            raise ValueError(
                "the dgm statistic has a non-pivotal null law; use bootstrap "
                "critical values"
            )
        if self.critical == "bootstrap" and self.B < 1:
            raise ValueError("bootstrap size B must be >= 1")


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class
    statistic_value: StatisticValue
    critical_value: float
    reject: bool
    p_value: float
    config: TestConfig
    diagnostics: dict
    bootstrap_draws: np.ndarray | None = None

    def to_record(self) -> dict:
        """Flat key-value view for CSV/JSON serialization.

        The variance slot is None for statistics that are not studentized
        (dgm), keeping the JSON strictly parseable.
        """
        sv = self.statistic_value
        return {
            "schema_version": 1,
            "statistic": self.config.statistic,
            "psi": self.config.psi.family,
            "variance": self.config.variance,
            "critical_method": self.config.critical,
            "n": sv.n,
            "raw": sv.raw,
            "variance_estimate": None if math.isnan(sv.variance) else sv.variance,
            "standardized": sv.standardized,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.config.alpha,
            "B": self.config.B if self.config.critical == "bootstrap" else 0,
            "g": self.config.bandwidths.g,
            "h": self.config.bandwidths.h,
            "c": self.config.bandwidths.c,
            "seed": self.config.seed,
            **{f"diag_{k}": v for k, v in sorted(self.diagnostics.items())},
        }


def _stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for a derived, order-independent substream."""
    entropy = [seed % (1 << 64), *path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def draw_multipliers(
    n: int, law: MultiplierLaw, rng: np.random.Generator
) -> np.ndarray:
    """i.i.d. multipliers with mean 0 and second and third moments 1."""
    if n < 1:
        raise ValueError("need at least one multiplier")
    if law is MultiplierLaw.MAMMEN_TWO_POINT:
        u = rng.random(n)
        return np.where(u < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)
    raise ValueError(f"unknown multiplier law {law!r}")


def resample_response(sm: SmootherOutput, eta: np.ndarray) -> np.ndarray:
    """Null-imposing resample rhat + eta * (y - rhat).

    Refuses to run when any observation has zero leave-one-out density, since
    its local regression value is undefined. The bootstrap itself uses
    ``null_resample``, which neutralizes such observations instead.
    """
    if np.any(sm.fhat <= 0.0):
        raise DegenerateStatisticError(
            "leave-one-out density is zero for some observation; increase g "
            "or drop isolated observations"
        )
    return sm.rhat + eta * sm.resid


def null_resample(sm: SmootherOutput, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Guarded resample: isolated observations keep their original response.

    Where fhat_i = 0 the kernel row L_i. vanishes identically, so Y*_i is
    multiplied by zero in every pairwise statistic; carrying y_i through is
    exactly equivalent to any other finite choice and keeps the resample
    NaN-free.
    """
    with np.errstate(invalid="ignore"):
        star = sm.rhat + eta * sm.resid
    return np.where(sm.fhat > 0.0, star, y)


def _quantile_rank(alpha: float, b: int) -> int:
    """Order-statistic rank for the upper-alpha bootstrap critical value."""
    return min(max(int(math.ceil((1.0 - alpha) * (b + 1))), 1), b)


class _Runner:
    """Statistic evaluation bound to one dataset's cached pair weights."""

    def __init__(self, d: ScaledDataset, sm: SmootherOutput, cfg: TestConfig):
        self.cfg = cfg
        self.sm = sm
        self.n = d.n
        self.y = d.dataset.y
        self.p_c = d.dataset.p_cont
        h = cfg.bandwidths.h
        if cfg.statistic == "lv" and any(
            k is not ColumnKind.CONTINUOUS for k in d.dataset.x_kinds
        ):
            raise ValueError("LV requires continuous X")
        if cfg.statistic == "dgm":
            if self.n < 3:
                raise ValueError("dgm statistic needs n >= 3")
            self.engine = None
            self.cvm = CvmEngine(d)
        else:
            floor = 3 if cfg.statistic == "ihat" else 5
            if cfg.variance == "var_tilde":
                floor = max(floor, 7)
            if self.n < floor:
                raise ValueError(
                    f"statistic {cfg.statistic!r} with {cfg.variance!r} needs "
                    f"n >= {floor}"
                )
            mode = "joint" if cfg.statistic == "lv" else "psi"
            self.engine = StatEngine(d, sm, h, cfg.kernel, cfg.psi, mode=mode)
            self.cvm = None

    def evaluate(self, y: np.ndarray, uf: np.ndarray) -> tuple[StatisticValue, bool]:
        """(statistic value, used-variance-fallback) for a response vector."""
        cfg = self.cfg
        if cfg.statistic == "dgm":
            raw = self.cvm.statistic(uf)
            sv = StatisticValue(
                raw=raw,
                variance=math.nan,
                standardized=raw,
                n=self.n,
                p_effective=0,
            )
            return sv, False
        eng = self.engine
        raw = eng.ihat(uf) if cfg.statistic == "ihat" else eng.itilde(y)
        fallback = False
        omega2 = eng.variance(cfg.variance, y, uf)
        if cfg.variance == "var_tilde" and omega2 <= 0.0:
            omega2 = eng.var_hat(uf)
            fallback = True
        return standardize_statistic(raw, omega2, self.n, cfg.bandwidths.h, eng.rate_dim), fallback


def _bootstrap_draws(runner: _Runner, cfg: TestConfig) -> tuple[np.ndarray, dict]:
    """Standardized bootstrap statistics, one per multiplier draw."""
    sm = runner.sm
    pair = sm.require_pairwise("the bootstrap")
    n = runner.n
    y = runner.y
    draws = np.empty(cfg.B)
    n_degenerate = 0
    n_fallback = 0
    kept = 0
    for b in range(cfg.B):
        eta = draw_multipliers(n, cfg.multiplier, _stream(cfg.seed, b))
        ystar = null_resample(sm, y, eta)
        ufstar = recompute_uf(pair, ystar)
        sv, fallback = runner.evaluate(ystar, ufstar)
        n_fallback += fallback
        if sv.degenerate:
            n_degenerate += 1
            continue
        draws[kept] = sv.standardized
        kept += 1
    if n_degenerate > MAX_DEGENERATE_DRAW_FRACTION * cfg.B:
        raise DegenerateStatisticError(
            f"{n_degenerate} of {cfg.B} bootstrap draws had degenerate "
            "variance; the test is unreliable at this bandwidth"
        )
    diag = {"degenerate_draws": n_degenerate, "fallback_draws": n_fallback}
    return draws[:kept], diag


def bootstrap_critical_value(
    d: ScaledDataset,
    sm: SmootherOutput,
    cfg: TestConfig,
    rng: int | None = None,
) -> tuple[float, np.ndarray]:
    """Upper-alpha empirical quantile of the bootstrapped statistics.

    ``rng`` optionally overrides cfg.seed as the stream root; draws are
    otherwise fully determined by (cfg.seed, draw index).
    """
    if cfg.critical != "bootstrap":
        raise ValueError("config does not request bootstrap critical values")
    effective = cfg if rng is None else replace(cfg, seed=int(rng))
    runner = _Runner(d, sm, effective)
    draws, _ = _bootstrap_draws(runner, effective)
    if len(draws) == 0:
        raise DegenerateStatisticError("all bootstrap draws were degenerate")
    ordered = np.sort(draws)
    critical = float(ordered[_quantile_rank(cfg.alpha, len(ordered)) - 1])
    return critical, draws


def run_test(d: Dataset, cfg: TestConfig) -> TestResult:
    """Standardize, smooth, compute the configured statistic, and decide."""
    sd = standardize(d)
    sm = compute_smoother(sd, cfg.bandwidths.g, cfg.kernel)
    return decide_scaled(sd, sm, cfg)


def decide_scaled(sd: ScaledDataset, sm: SmootherOutput, cfg: TestConfig) -> TestResult:
    """Decision step on an already standardized and smoothed sample, so a
    Monte Carlo replication can share one smoother across several tests."""
    runner = _Runner(sd, sm, cfg)
    uf = sm.uf
    y = sd.dataset.y
    sv, fallback = runner.evaluate(y, uf)
    diagnostics = {
        "fallback_used": fallback,
        "fhat_zeros": int(np.sum(sm.fhat <= 0.0)),
        "degenerate_variance": sv.degenerate,
    }
    if sv.degenerate:
        raise DegenerateStatisticError("test degenerate at this bandwidth")

    draws = None
    if cfg.critical == "asymptotic":
        critical = float(scipy.stats.norm.ppf(1.0 - cfg.alpha))
        p_value = float(scipy.stats.norm.sf(sv.standardized))
    else:
        draws, boot_diag = _bootstrap_draws(runner, cfg)
        diagnostics.update(boot_diag)
        if len(draws) == 0:
            raise DegenerateStatisticError("all bootstrap draws were degenerate")
        ordered = np.sort(draws)
        critical = float(ordered[_quantile_rank(cfg.alpha, len(ordered)) - 1])
        p_value = float(
            (1 + np.sum(draws >= sv.standardized)) / (len(draws) + 1)
        )
    return TestResult(
        statistic_value=sv,
        critical_value=critical,
        reject=bool(sv.standardized > critical),
        p_value=p_value,
        config=cfg,
        diagnostics=diagnostics,
        bootstrap_draws=draws,
    )
