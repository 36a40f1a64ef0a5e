"""Preset Monte Carlo designs behind the simulate command's --figure tags.

Desk-scale replication counts keep a full design under a coffee break on a
laptop; --paper-scale switches to publication-grade 5000/2000-replication
runs (budget hours, depending on workers). Delta grids were calibrated once
so power sweeps the interesting range (from the nominal level up the curve)
and are recorded here as plain constants.
"""

from __future__ import annotations

from .simulation import ExperimentConfig, TestTemplate, grid_cells

DESK_LEVEL_REPS = 500
DESK_POWER_REPS = 300
PAPER_LEVEL_REPS = 5000
PAPER_POWER_REPS = 2000

C_GRID = (0.5, 1.0, 2.0, 4.0)

LMP = TestTemplate(name="lmp", statistic="itilde", psi="normal")
LMP_TRI = TestTemplate(name="lmp-tri", statistic="itilde", psi="triangular")
LMP_ASYM = TestTemplate(name="lmp-asym", statistic="itilde", psi="normal", critical="asymptotic")
LV = TestTemplate(name="lv", statistic="lv")
DGM = TestTemplate(name="dgm", statistic="dgm")
FISHER = TestTemplate(name="fisher", statistic="fisher")
IND = TestTemplate(name="ind", statistic="itilde", psi="indicator")
IND_ASYM = TestTemplate(name="ind-asym", statistic="itilde", psi="indicator", critical="asymptotic")

# delta grids calibrated at n=100 (see README): lmp power runs from
# near-level up the curve across each grid (sine saturates slowly in
# dimension 5; its top end needs the larger bandwidth factors)
DELTA_QUAD = (0.8, 1.6, 2.4, 3.2)
DELTA_LINEAR = (1.0, 2.0, 4.0, 6.0)
DELTA_SINE = (2.0, 4.0, 6.0, 8.0)
DELTA_DISC_QUAD = (1.0, 2.0, 3.0, 4.0)
DELTA_DISC_SINE = (2.0, 4.0, 6.0, 8.0)

TEMPLATES = {
    t.name: t
    for t in (LMP, LMP_TRI, LMP_ASYM, LV, DGM, FISHER, IND, IND_ASYM)
}

FIGURE_TAGS = (
    "level-cont",
    "power-quad",
    "power-n",
    "power-alt",
    "level-disc",
    "power-disc",
)


def _cells_with_null(family, alternatives, n_grid, q_grid, delta_grid, c_grid):
    """Alternative cells plus the matching null cells (delta = 0 baselines)."""
    null_cells = grid_cells(family, ("null",), n_grid, q_grid, (0.0,), c_grid)
    alt_cells = grid_cells(family, alternatives, n_grid, q_grid, delta_grid, c_grid)
    return null_cells + alt_cells


def figure_config(
    tag: str,
    master_seed: int,
    replications: int | None = None,
    B: int = 199,
    alpha: float = 0.10,
    workers: int = 1,
    paper_scale: bool = False,
) -> ExperimentConfig:
    """Experiment configuration for a named figure design."""
    if tag not in FIGURE_TAGS:
        raise ValueError(f"unknown figure tag {tag!r}; known: {', '.join(FIGURE_TAGS)}")
    level = tag.startswith("level")
    if replications is None:
        if paper_scale:
            replications = PAPER_LEVEL_REPS if level else PAPER_POWER_REPS
        else:
            replications = DESK_LEVEL_REPS if level else DESK_POWER_REPS

    if tag == "level-cont":
        cells = grid_cells("continuous", ("null",), (100,), (1, 2, 5), (0.0,), C_GRID)
        tests = (LMP, LMP_TRI, LMP_ASYM, LV, DGM)
    elif tag == "power-quad":
        cells = _cells_with_null(
            "continuous", ("quadratic",), (100,), (1, 2, 5), DELTA_QUAD, C_GRID
        )
        tests = (LMP, LV, DGM, FISHER)
    elif tag == "power-n":
        cells = _cells_with_null(
            "continuous", ("quadratic",), (50, 100, 200), (5,), DELTA_QUAD, (2.0,)
        )
        tests = (LMP, LV, DGM, FISHER)
    elif tag == "power-alt":
        cells = _cells_with_null(
            "continuous", ("linear",), (100,), (5,), DELTA_LINEAR, (1.0, 2.0, 4.0)
        ) + grid_cells("continuous", ("sine",), (100,), (5,), DELTA_SINE, (1.0, 2.0, 4.0))
        tests = (LMP, LV, DGM, FISHER)
    elif tag == "level-disc":
        cells = grid_cells("discrete_x", ("null",), (100,), (1,), (0.0,), C_GRID)
        tests = (LMP, LMP_ASYM, IND, IND_ASYM)
    else:  # power-disc
        cells = _cells_with_null(
            "discrete_x", ("quadratic",), (100,), (1,), DELTA_DISC_QUAD, C_GRID
        ) + grid_cells("discrete_x", ("sine",), (100,), (1,), DELTA_DISC_SINE, C_GRID)
        tests = (LMP, IND)
    return ExperimentConfig(
        cells=cells,
        tests=tests,
        replications=replications,
        master_seed=master_seed,
        alpha=alpha,
        B=B,
        workers=workers,
    )
