"""Sequential bootstrap determination of the reduced-form break count.

The RF is a linear model estimated by OLS, so the structural-change
machinery applies with x as the dependent block and no second stage.
Stage l tests l breaks against l+1 with the bootstrap sup-Wald; testing
stops at the first p-value above the significance level or at the break
cap, and break locations are re-estimated at the selected count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import BootstrapConfig, rf_case_i_draws, rf_case_ii_draws
from .estimation import Design, first_stage
from .exceptions import ConfigError
from .model import Dataset, ModelSpec, Partition, no_breaks
from .partition_search import min_regime_length, rf_break_grid_and_fit
from .partition_search import enumerate_partitions
from .stats import make_design_cached, scan_partitions, seq_scan


@dataclass(frozen=True)
class SequentialResult:
    chosen_breaks: int
    partition: Partition
    trail: list[tuple[int, float, float]]  # (null breaks, statistic, p-value)


def rf_sup_wald(design: Design, eps: float = 0.15) -> tuple[float, int]:
    """Sample sup-Wald for no RF breaks against one; returns (stat, argmax)."""
    n, q = design.n, design.spec.q
    parts = enumerate_partitions(n, 1, eps, q).as_array()
    scan = scan_partitions(design.x, design.Z, parts, n)
    idx = int(np.argmax(scan.wald))
    return float(scan.wald[idx]), int(parts[idx, 0])


def rf_sup_wald_seq(
    design: Design, rf_partition: Partition, eps: float = 0.15
) -> float:
    """Sample one-more-break sup-Wald within the regimes of rf_partition."""
    min_len = min_regime_length(design.n, eps, design.spec.q)
    stat, _, _, _, _ = seq_scan(
        design.x, design.Z, rf_partition, design.n, min_len
    )
    return stat


def estimate_rf_breaks(
    spec: ModelSpec,
    data: Dataset,
    max_breaks: int = 2,
    alpha_seq: float = 0.05,
    boot: BootstrapConfig | None = None,
    eps: float = 0.15,
) -> SequentialResult:
    """Select the RF break count by sequential bootstrap testing."""
    design = make_design_cached(spec, data)
    return estimate_rf_breaks_design(design, max_breaks, alpha_seq, boot, eps)


def estimate_rf_breaks_design(
    design: Design,
    max_breaks: int = 2,
    alpha_seq: float = 0.05,
    boot: BootstrapConfig | None = None,
    eps: float = 0.15,
) -> SequentialResult:
    if max_breaks < 1:
        raise ConfigError("max_breaks must be >= 1")
    if boot is None:
        boot = BootstrapConfig(scheme="wr", B=399, master_seed=0)
    n = design.n
    min_len = min_regime_length(n, eps, design.spec.q)
    trail: list[tuple[int, float, float]] = []
    chosen = 0
    for level in range(max_breaks):
        if level == 0:
            partition = no_breaks(n, eps, min_len)
            delta, _, v_hat = first_stage(design, partition)
            stat, _ = rf_sup_wald(design, eps)
            draws, _ = rf_case_i_draws(
                design, delta, v_hat, eps, boot, stage=0
            )
        else:
            partition, delta = rf_break_grid_and_fit(design, level, eps)
            _, _, v_hat = first_stage(design, partition)
            stat = rf_sup_wald_seq(design, partition, eps)
            draws, _ = rf_case_ii_draws(
                design, delta, v_hat, partition, eps, boot, stage=level
            )
        p = float(np.mean(draws >= stat))
        trail.append((level, stat, p))
        if p > alpha_seq:
            chosen = level
            break
        chosen = level + 1
    if chosen == 0:
        final = no_breaks(n, eps, min_len)
    else:
        final, _ = rf_break_grid_and_fit(design, chosen, eps)
    return SequentialResult(chosen_breaks=chosen, partition=final, trail=trail)
