"""Monte Carlo orchestration, rejection-rate tables, single-dataset tests.

Replication j of a cell derives every random stream from
(master_seed, j, purpose), so cells that differ only in the break shift g
share innovations and their rejection-rate differences reflect the design
rather than simulation noise.  Replications are the parallel unit; worker
processes are spawned with BLAS pinned to one thread so results are
identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dgp
from .bootstrap import BootstrapConfig, bootstrap_sup_test_design
from .estimation import make_design
from .exceptions import ConfigError
from .model import Dataset, ModelSpec, no_breaks
from .partition_search import min_regime_length
from .rng import derive_seed
from .sequential import estimate_rf_breaks_design
from .stats import TestOutcome

TABLE_HEADER = [
    "scenario", "case", "T", "g", "test", "scheme",
    "alpha", "rate", "N", "B", "failures", "seconds",
]


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo cell: a (scenario, case, T, g, test, scheme) point."""

    scenario: str = "h0m0"
    error_case: str = "A"
    T: int = 240
    g: float = 0.0
    N: int = 1000
    B: int = 399
    alphas: tuple[float, ...] = (0.10, 0.05, 0.01)
    test: str = "supwald"
    scheme: str = "wr"
    eps: float = 0.15
    burn_in: int = 200
    master_seed: int = 0
    threads: int = 1
    rf_max_breaks: int = 2
    keep_reps: bool = False

    def __post_init__(self):
        if self.N < 1 or self.B < 1:
            raise ConfigError("N and B must be >= 1")
        if self.test not in ("supwald", "supf"):
            raise ConfigError("test must be 'supwald' or 'supf'")
        if self.scheme not in ("wr", "wf"):
            raise ConfigError("scheme must be 'wr' or 'wf'")
        if list(self.alphas) != sorted(self.alphas, reverse=True) or not all(
            0 < a < 1 for a in self.alphas
        ):
            raise ConfigError("alphas must be strictly decreasing in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass
class CellResult:
    rates: dict[float, float]
    failures: int
    seconds: float
    N: int
    B: int
    rf_break_counts: dict[int, int] = field(default_factory=dict)
    rep_records: list[dict] | None = None

    def rate_row(self, cfg: McConfig, alpha: float) -> list:
        return [
            cfg.scenario, cfg.error_case, cfg.T, cfg.g, cfg.test, cfg.scheme,
            alpha, f"{self.rates[alpha]:.4f}", cfg.N, cfg.B,
            self.failures, f"{self.seconds:.3f}",
        ]


def _replication(args: tuple[int, McConfig]) -> dict:
    """Run one Monte Carlo replication; self-contained for worker processes."""
    j, cfg = args
    scen_cfg = dgp.ScenarioConfig(
        scenario=cfg.scenario,
        error_case=cfg.error_case,
        T=cfg.T,
        g=cfg.g,
        burn_in=cfg.burn_in,
        seed=derive_seed(cfg.master_seed, j),
    )
    data, _ = dgp.generate(scen_cfg)
    spec = dgp.scenario_model_spec()
    design = make_design(spec, data)
    n = design.n
    h_true = int(cfg.scenario[1])
    m_true = int(cfg.scenario[3])

    h_hat = 0
    if h_true > 0:
        boot = BootstrapConfig(
            scheme=cfg.scheme, B=cfg.B, master_seed=cfg.master_seed, rep_index=j
        )
        seq = estimate_rf_breaks_design(
            design, max_breaks=cfg.rf_max_breaks, alpha_seq=0.05,
            boot=boot, eps=cfg.eps,
        )
        rf_partition = seq.partition
        h_hat = seq.chosen_breaks
    else:
        rf_partition = no_breaks(n, cfg.eps, min_regime_length(n, cfg.eps, spec.q))

    outcome = bootstrap_sup_test_design(
        design,
        null_breaks=m_true,
        alt_breaks=m_true + 1,
        statistic=cfg.test,
        scheme=cfg.scheme,
        eps=cfg.eps,
        B=cfg.B,
        master_seed=cfg.master_seed,
        rep_index=j,
        rf_partition=rf_partition,
        alphas=cfg.alphas,
    )
    return {
        "j": j,
        "stat": outcome.statistic,
        "p": outcome.p_value,
        "reject": {a: bool(outcome.levels_rejected[a]) for a in cfg.alphas},
        "failures": outcome.failed_replications,
        "h_hat": h_hat,
    }


def _run_many(cfg: McConfig, indices: list[int]) -> list[dict]:
    tasks = [(j, cfg) for j in indices]
    if cfg.threads == 1:
        return [_replication(t) for t in tasks]
    # spawned workers re-import numpy under a single BLAS thread, keeping
    # results identical for any worker count
    import multiprocessing as mp

    saved = {k: os.environ.get(k) for k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS")}
    os.environ["OMP_NUM_THREADS"] = "1"
    os.environ["OPENBLAS_NUM_THREADS"] = "1"
    try:
        ctx = mp.get_context("spawn")
        chunk = max(1, len(tasks) // (cfg.threads * 4))
        with ProcessPoolExecutor(max_workers=cfg.threads, mp_context=ctx) as pool:
            return list(pool.map(_replication, tasks, chunksize=chunk))
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


def run_cell(cfg: McConfig, progress: io.TextIOBase | None = None) -> CellResult:
    """Rejection rates over N seeded replications of one cell."""
    start = time.perf_counter()
    records = _run_many(cfg, list(range(1, cfg.N + 1)))
    records.sort(key=lambda r: r["j"])
    rates = {
        a: float(np.mean([r["reject"][a] for r in records])) for a in cfg.alphas
    }
    failures = int(sum(r["failures"] for r in records))
    counts: dict[int, int] = {}
    for r in records:
        counts[r["h_hat"]] = counts.get(r["h_hat"], 0) + 1
    seconds = time.perf_counter() - start
    if progress is not None:
        print(
            f"cell {cfg.scenario}/{cfg.error_case}/T={cfg.T}/g={cfg.g}"
            f" done in {seconds:.1f}s, failures={failures}",
            file=progress,
        )
    return CellResult(
        rates=rates,
        failures=failures,
        seconds=seconds,
        N=cfg.N,
        B=cfg.B,
        rf_break_counts=counts,
        rep_records=records if cfg.keep_reps else None,
    )


def run_table(
    base: McConfig,
    grid: list[dict],
    out_path: str,
    progress: io.TextIOBase | None = None,
) -> list[tuple[McConfig, CellResult]]:
    """Run a grid of cells and write one CSV row per (cell, alpha)."""
    results = []
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for overrides in grid:
            cfg = replace(base, **overrides)
            cell = run_cell(cfg, progress=progress)
            results.append((cfg, cell))
            for a in cfg.alphas:
                writer.writerow(cell.rate_row(cfg, a))
            fh.flush()
    return results


def test_dataset(
    spec: ModelSpec,
    data: Dataset,
    *,
    null_breaks: int = 0,
    alt_breaks: int = 1,
    test: str = "supwald",
    scheme: str = "wr",
    eps: float = 0.15,
    B: int = 399,
    seed: int = 0,
    alphas: tuple[float, ...] = (0.10, 0.05, 0.01),
    rf_breaks: str | int = "auto",
    rf_max_breaks: int = 2,
) -> tuple[TestOutcome, str]:
    """Run one structural-change test on user data; returns the outcome and
    a printable report.

    rf_breaks="auto" runs the sequential RF pre-test first; an integer
    imposes that many RF breaks at their SSR-estimated locations.
    """
    design = make_design(spec, data)
    n = design.n
    min_len = min_regime_length(n, eps, spec.q)
    if rf_breaks == "auto":
        boot = BootstrapConfig(scheme=scheme, B=B, master_seed=seed, rep_index=1)
        seq = estimate_rf_breaks_design(
            design, max_breaks=rf_max_breaks, alpha_seq=0.05, boot=boot, eps=eps
        )
        rf_partition = seq.partition
        rf_note = f"sequential pre-test selected {seq.chosen_breaks} RF break(s)"
    else:
        h = int(rf_breaks)
        if h == 0:
            rf_partition = no_breaks(n, eps, min_len)
        else:
            from .partition_search import rf_break_grid_and_fit

            rf_partition, _ = rf_break_grid_and_fit(design, h, eps)
        rf_note = f"{h} RF break(s) imposed"

    outcome = bootstrap_sup_test_design(
        design,
        null_breaks=null_breaks,
        alt_breaks=alt_breaks,
        statistic=test,
        scheme=scheme,
        eps=eps,
        B=B,
        master_seed=seed,
        rep_index=1,
        rf_partition=rf_partition,
        alphas=alphas,
    )
    lines = [
        f"test: {test} ({scheme.upper()} bootstrap), H0: m={null_breaks} vs H1: m={alt_breaks}",
        f"effective sample: n={n} (of T={data.T}), trimming eps={eps}",
        f"reduced form: {rf_note}, breaks at {list(rf_partition.breaks)}",
        f"statistic: {outcome.statistic:.6f}",
        f"break estimate(s): {list(outcome.argmax_partition.breaks)}",
        f"bootstrap p-value: {outcome.p_value:.4f}  (B={len(outcome.boot_draws)})",
    ]
    for a in alphas:
        crit = outcome.critical_values[a]
        verdict = "reject" if outcome.levels_rejected[a] else "do not reject"
        lines.append(f"  level {a:g}: critical value {crit:.4f} -> {verdict}")
    lines.append(
        f"skipped candidates: {outcome.skipped_candidates}, "
        f"failed replications: {outcome.failed_replications}"
    )
    for flag in outcome.flags:
        lines.append(f"note: {flag}")
    return outcome, "\n".join(lines)
