"""Wild bootstrap: sample generation, replication loops, p-values.

Bootstrap residuals are u_b = u_hat * nu and v_b = v_hat * nu with the
same Rademacher multiplier nu_t applied to both, preserving their
contemporaneous correlation.  Two schemes differ in how regressors are
treated when rebuilding the sample:

  WR  (wild recursive)  lagged y and x inside the instrument vector are
      replaced by their bootstrap values, so the sample is regenerated
      through the estimated recursion from the original start-up values;
  WF  (wild fixed)      every regressor row is kept at its sample value
      and only the errors are resampled.

Replication b of Monte Carlo repetition j draws its multipliers from the
stream seeded by derive_seed(master_seed, j, STREAM_NU, b); reduced-form
pre-test stages use STREAM_NU_RF with the stage index appended.  The
number and location of reduced-form breaks are held at their sample
estimates across replications; reduced-form coefficients are re-estimated
in every bootstrap sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import Design, RegimeEstimates, fit_regimes
from .exceptions import BootstrapFailureError, ConfigError, EmptyDrawsError
from .model import Dataset, ModelSpec, Partition, no_breaks, regime_of
from .partition_search import global_ssr_breaks, min_regime_length
from .rng import STREAM_NU, STREAM_NU_RF, generator, rademacher
from .stats import (
    TestOutcome,
    make_design_cached,
    restricted_fit_batch,
    scan_partitions,
    scan_partitions_batch,
    seq_scan,
    sup_wald_design,
)

SCHEMES = ("wr", "wf")


@dataclass(frozen=True)
class BootstrapConfig:
    """Scheme, replication count and seed path for one test."""

    scheme: str
    B: int
    master_seed: int
    rep_index: int = 1
    max_failure_rate: float = 0.05

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.B < 1:
            raise ConfigError("B must be >= 1")


@dataclass(frozen=True)
class MultiplierStream:
    """Rademacher multipliers keyed by (master_seed, rep_index, b)."""

    master_seed: int
    rep_index: int
    purpose: int = STREAM_NU
    stage: int | None = None

    def _parts(self, b: int) -> tuple[int, ...]:
        if self.stage is None:
            return (self.rep_index, self.purpose, b)
        return (self.rep_index, self.purpose, self.stage, b)

    def column(self, n: int, b: int) -> np.ndarray:
        """Multipliers for bootstrap replication b (1-based)."""
        return rademacher(generator(self.master_seed, *self._parts(b)), n)

    def matrix(self, n: int, B: int) -> np.ndarray:
        """(n, B) matrix whose column b-1 is replication b's stream."""
        out = np.empty((n, B))
        for b in range(1, B + 1):
            out[:, b - 1] = self.column(n, b)
        return out


# ---------------------------------------------------------------------------
# Bootstrap sample generation (structural-equation system)
# ---------------------------------------------------------------------------


def _coef_schedules(design: Design, est: RegimeEstimates):
    """Per-row coefficient arrays on the effective sample."""
    n = design.n
    p1 = design.spec.p1
    bx = np.empty((n, p1))
    bz = np.empty((n, design.spec.q1))
    d_idx = np.empty(n, dtype=np.int64)
    for t in range(1, n + 1):
        beta = est.beta[regime_of(t, est.se_breaks) - 1]
        bx[t - 1] = beta[:p1]
        bz[t - 1] = beta[p1:]
        d_idx[t - 1] = regime_of(t, est.rf_breaks) - 1
    return bx, bz, d_idx


def _wf_paths(design: Design, est: RegimeEstimates, nu: np.ndarray):
    """Fixed-regressor bootstrap paths for all multiplier columns.

    Returns (yb (n, B), xb (n, p1, B)); regressor rows stay the sample's.
    """
    bx, bz, _ = _coef_schedules(design, est)
    xb = est.x_hat[:, :, None] + est.v_hat[:, :, None] * nu[:, None, :]
    fixed = np.einsum("nq,nq->n", design.Z1, bz)
    yb = (
        np.einsum("npb,np->nb", xb, bx)
        + fixed[:, None]
        + est.u_hat[:, None] * nu
    )
    return yb, xb


def _wr_paths(design: Design, est: RegimeEstimates, nu: np.ndarray):
    """Recursive bootstrap paths for all multiplier columns.

    Returns (yb (n, B), xb (n, p1, B), Zb (B, n, q)).  Start-up values are
    the first max_lag original observations.  With no lags anywhere the
    recursion is the fixed-regressor computation, shared verbatim so the
    two schemes agree bit for bit.
    """
    spec = design.spec
    lag = spec.max_lag
    if lag == 0:
        yb, xb = _wf_paths(design, est, nu)
        Zb = np.broadcast_to(design.Z, (nu.shape[1],) + design.Z.shape)
        return yb, xb, Zb
    n, B = nu.shape
    p1, q = spec.p1, spec.q
    data = design.data
    bx, bz, d_idx = _coef_schedules(design, est)
    ub = est.u_hat[:, None] * nu
    vb = est.v_hat[:, :, None] * nu[:, None, :]

    y_hist = np.empty((lag + n, B))
    x_hist = np.empty((lag + n, p1, B))
    y_hist[:lag] = data.y[:lag, None]
    x_hist[:lag] = data.x[:lag, :, None]
    Zb = np.empty((B, n, q))
    zrow = np.empty((B, q))
    for t in range(1, n + 1):
        i = t - 1
        orig = lag + i  # 0-based original index of this row
        for c, role in enumerate(spec.rf_instruments):
            if role.kind == "const":
                zrow[:, c] = 1.0
            elif role.kind == "r":
                zrow[:, c] = data.r[orig - role.lag, role.index - 1]
            elif role.kind == "y":
                zrow[:, c] = y_hist[lag + i - role.lag]
            else:
                zrow[:, c] = x_hist[lag + i - role.lag, role.index - 1]
        Zb[:, i, :] = zrow
        x_t = zrow @ est.delta[d_idx[i]] + vb[i].T  # (B, p1)
        y_t = x_t @ bx[i] + zrow[:, list(spec.z1_positions)] @ bz[i] + ub[i]
        x_hist[lag + i] = x_t.T
        y_hist[lag + i] = y_t
    return y_hist[lag:], x_hist[lag:], Zb


def _paths_to_dataset(design: Design, yb: np.ndarray, xb: np.ndarray) -> Dataset:
    lag = design.spec.max_lag
    data = design.data
    y = np.concatenate([data.y[:lag], yb])
    x = np.concatenate([data.x[:lag], xb])
    return Dataset(y=y, x=x, r=data.r.copy())


def wr_generate(
    spec: ModelSpec,
    data: Dataset,
    estimates: RegimeEstimates,
    nu: np.ndarray,
) -> Dataset:
    """One wild-recursive bootstrap dataset from null-imposed estimates."""
    design = make_design_cached(spec, data)
    yb, xb, _ = _wr_paths(design, estimates, np.asarray(nu, dtype=np.float64)[:, None])
    return _paths_to_dataset(design, yb[:, 0], xb[:, :, 0])


def wf_generate(
    spec: ModelSpec,
    data: Dataset,
    estimates: RegimeEstimates,
    nu: np.ndarray,
) -> Dataset:
    """One wild-fixed bootstrap dataset from null-imposed estimates."""
    design = make_design_cached(spec, data)
    yb, xb = _wf_paths(design, estimates, np.asarray(nu, dtype=np.float64)[:, None])
    return _paths_to_dataset(design, yb[:, 0], xb[:, :, 0])


# ---------------------------------------------------------------------------
# Batched first stage on bootstrap samples
# ---------------------------------------------------------------------------


def _first_stage_wr(Zb, xb, rf_partition: Partition):
    """Per-replication RF fits when instruments are bootstrap-built.

    Zb is (B, n, q); xb is (n, p1, B).  Returns w-block fitted values
    (B, n, p1).
    """
    B, n, q = Zb.shape
    p1 = xb.shape[1]
    xhat = np.empty((B, n, p1))
    xbt = xb.transpose(2, 0, 1)  # (B, n, p1)
    for a, bnd in rf_partition.regimes():
        sl = slice(a - 1, bnd)
        Zr = Zb[:, sl, :]
        G = np.einsum("bti,btj->bij", Zr, Zr)
        h = np.einsum("bti,btp->bip", Zr, xbt[:, sl, :])
        delta = np.linalg.solve(G, h)
        xhat[:, sl, :] = np.einsum("btq,bqp->btp", Zr, delta)
    return xhat


def _first_stage_wf(Z, xb, rf_partition: Partition):
    """Per-replication RF fits on fixed instruments (one Gram per regime)."""
    n, p1, B = xb.shape
    xhat = np.empty((B, n, p1))
    for a, bnd in rf_partition.regimes():
        sl = slice(a - 1, bnd)
        Zr = Z[sl]
        G = Zr.T @ Zr
        rhs = Zr.T @ xb[sl].reshape(bnd - a + 1, p1 * B)
        delta = np.linalg.solve(G, rhs).reshape(Zr.shape[1], p1, B)
        xhat[:, sl, :] = np.einsum("tq,qpb->btp", Zr, delta)
    return xhat


# ---------------------------------------------------------------------------
# Bootstrap draws for the structural-equation tests
# ---------------------------------------------------------------------------


def _drop_failures(draws: list[float], failures: int, cfg: BootstrapConfig):
    if failures > cfg.max_failure_rate * cfg.B:
        raise BootstrapFailureError(
            f"{failures} of {cfg.B} bootstrap replications failed"
        )
    return np.asarray(draws, dtype=np.float64), failures


def case_i_draws(
    design: Design,
    est: RegimeEstimates,
    k: int,
    eps: float,
    cfg: BootstrapConfig,
    *,
    beta_source: str = "alt",
    statistic: str = "supwald",
    nu: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """B bootstrap sup statistics for the no-break null.

    Each replication re-runs the sample pipeline on its bootstrap data:
    first stage on the fixed RF regimes, second stage over the same grid,
    and the robust blocks built from the re-estimated residuals.
    """
    spec = design.spec
    n, q, p1, d = design.n, spec.q, spec.p1, spec.d_beta
    if nu is None:
        nu = MultiplierStream(cfg.master_seed, cfg.rep_index).matrix(n, cfg.B)
    if cfg.scheme == "wr" and spec.max_lag > 0:
        yb, xb, Zb = _wr_paths(design, est, nu)
        what = _first_stage_wr(Zb, xb, est.rf_breaks)
        Z1b = Zb[:, :, list(spec.z1_positions)]
    else:
        yb, xb = _wf_paths(design, est, nu)
        what = _first_stage_wf(design.Z, xb, est.rf_breaks)
        Z1b = None
    parts = _case_i_parts(n, k, eps, q)
    Wb = np.empty((cfg.B, n, d))
    Wb[:, :, :p1] = what
    Wb[:, :, p1:] = design.Z1[None, :, :] if Z1b is None else Z1b
    Yb = yb.T.copy()
    vhat_b = xb.transpose(2, 0, 1) - what  # re-estimated first-stage residuals
    if statistic == "supf":
        _, ssr0 = restricted_fit_batch(Yb, Wb)
        _, ssr, ok = scan_partitions_batch(Yb, Wb, parts, n, compute_wald=False)
        good = ok & np.isfinite(ssr) & (ssr > 0)
        vals = np.where(
            good, ((n - (k + 1) * d) / (k * d)) * (ssr0[:, None] - ssr) / ssr, -np.inf
        )
    else:
        score_beta = None
        if beta_source == "null":
            b0, _ = restricted_fit_batch(Yb, Wb)
            score_beta = b0[:, :p1]
        vals, _, _ = scan_partitions_batch(
            Yb, Wb, parts, n, v_rows=vhat_b, score_beta=score_beta, p1=p1,
        )
    stats = np.max(vals, axis=1)
    finite = np.isfinite(stats)
    return _drop_failures(list(stats[finite]), int(np.sum(~finite)), cfg)


def case_ii_draws(
    design: Design,
    est: RegimeEstimates,
    eps: float,
    cfg: BootstrapConfig,
    *,
    statistic: str = "supwald",
    nu: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """B bootstrap one-more-break statistics for an l-break null.

    est must impose the l-break null: its se_breaks partition is reused
    as the regime frame for every replication.
    """
    spec = design.spec
    n, p1, d = design.n, spec.p1, spec.d_beta
    min_len = min_regime_length(n, eps, spec.q)
    if nu is None:
        nu = MultiplierStream(cfg.master_seed, cfg.rep_index).matrix(n, cfg.B)
    if cfg.scheme == "wr" and spec.max_lag > 0:
        yb, xb, Zb = _wr_paths(design, est, nu)
        what = _first_stage_wr(Zb, xb, est.rf_breaks)
        Z1b = Zb[:, :, list(spec.z1_positions)]
    else:
        yb, xb = _wf_paths(design, est, nu)
        what = _first_stage_wf(design.Z, xb, est.rf_breaks)
        Z1b = None
    Wb = np.empty((cfg.B, n, d))
    Wb[:, :, :p1] = what
    Wb[:, :, p1:] = design.Z1[None, :, :] if Z1b is None else Z1b
    Yb = yb.T.copy()
    vhat_b = xb.transpose(2, 0, 1) - what
    best = np.full(cfg.B, -np.inf)
    feasible = 0
    for a, bnd in est.se_breaks.regimes():
        length = bnd - a + 1
        if length < 2 * min_len:
            continue
        feasible += 1
        sl = slice(a - 1, bnd)
        Y_i = Yb[:, sl].copy()
        W_i = Wb[:, sl, :].copy()
        b_null, ssr_null = restricted_fit_batch(Y_i, W_i)
        local = np.arange(min_len, length - min_len + 1, dtype=np.int64)
        parts = local[:, None]
        if statistic == "supf":
            _, ssr, ok = scan_partitions_batch(
                Y_i, W_i, parts, n, compute_wald=False
            )
            good = ok & np.isfinite(ssr) & (ssr > 0) & (ssr_null[:, None] > 0)
            scale = (length - d) / d
            vals = np.where(
                good, scale * (ssr_null[:, None] - ssr) / ssr_null[:, None], -np.inf
            )
        else:
            vals, _, _ = scan_partitions_batch(
                Y_i, W_i, parts, n,
                v_rows=np.ascontiguousarray(vhat_b[:, sl, :]),
                score_beta=b_null[:, :p1], p1=p1,
            )
        np.maximum(best, np.max(vals, axis=1), out=best)
    if feasible == 0:
        raise BootstrapFailureError("no regime admits an extra break")
    finite = np.isfinite(best)
    return _drop_failures(list(best[finite]), int(np.sum(~finite)), cfg)


def _case_i_parts(n: int, k: int, eps: float, q: int) -> np.ndarray:
    from .partition_search import enumerate_partitions

    return enumerate_partitions(n, k, eps, q).as_array()


# ---------------------------------------------------------------------------
# Reduced-form (OLS) bootstrap, used by the sequential pre-test
# ---------------------------------------------------------------------------


def _rf_wr_paths(design: Design, delta: list[np.ndarray], rf_partition: Partition,
                 v_hat: np.ndarray, nu: np.ndarray):
    """Recursive bootstrap of the RF equation alone.

    Only lagged x inside z is replaced by bootstrap values; lagged y and
    all r columns stay at their sample values (the RF is treated as a
    single-equation OLS model).
    """
    spec = design.spec
    lag = spec.max_lag
    vb = v_hat[:, :, None] * nu[:, None, :]
    if lag == 0:
        xhat = design.Z @ delta[0]
        xb = xhat[:, :, None] + vb
        Zb = np.broadcast_to(design.Z, (nu.shape[1],) + design.Z.shape)
        return xb, Zb
    n, B = nu.shape
    p1, q = spec.p1, spec.q
    data = design.data
    d_idx = np.array(
        [regime_of(t, rf_partition) - 1 for t in range(1, n + 1)], dtype=np.int64
    )
    x_hist = np.empty((lag + n, p1, B))
    x_hist[:lag] = data.x[:lag, :, None]
    Zb = np.empty((B, n, q))
    zrow = np.empty((B, q))
    for t in range(1, n + 1):
        i = t - 1
        for c, role in enumerate(spec.rf_instruments):
            if role.kind == "x":
                zrow[:, c] = x_hist[lag + i - role.lag, role.index - 1]
            else:
                zrow[:, c] = design.Z[i, c]
        Zb[:, i, :] = zrow
        x_t = zrow @ delta[d_idx[i]] + vb[i].T
        x_hist[lag + i] = x_t.T
    return x_hist[lag:], Zb


def rf_case_i_draws(
    design: Design,
    delta: list[np.ndarray],
    v_hat: np.ndarray,
    eps: float,
    cfg: BootstrapConfig,
    *,
    stage: int = 0,
    nu: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Bootstrap sup-Wald draws for no RF breaks against one."""
    spec = design.spec
    n, q = design.n, spec.q
    if nu is None:
        nu = MultiplierStream(
            cfg.master_seed, cfg.rep_index, purpose=STREAM_NU_RF, stage=stage
        ).matrix(n, cfg.B)
    part0 = no_breaks(n, eps)
    if cfg.scheme == "wr" and spec.max_lag > 0:
        xb, Zb = _rf_wr_paths(design, delta, part0, v_hat, nu)
    else:
        xhat = design.Z @ delta[0]
        xb = xhat[:, :, None] + v_hat[:, :, None] * nu[:, None, :]
        Zb = None
    parts = _case_i_parts(n, 1, eps, q)
    if spec.p1 == 1:
        Yb = xb[:, 0, :].T.copy()
        Wb = (
            np.broadcast_to(design.Z, (cfg.B,) + design.Z.shape) if Zb is None else Zb
        )
        vals, _, _ = scan_partitions_batch(Yb, Wb, parts, n)
        stats = np.max(vals, axis=1)
        finite = np.isfinite(stats)
        return _drop_failures(list(stats[finite]), int(np.sum(~finite)), cfg)
    draws: list[float] = []
    failures = 0
    for b in range(cfg.B):
        try:
            Z_b = design.Z if Zb is None else Zb[b]
            scan = scan_partitions(xb[:, :, b], Z_b, parts, n)
            stat = float(np.max(scan.wald))
            if not math.isfinite(stat):
                raise FloatingPointError("no finite candidate")
            draws.append(stat)
        except Exception:
            failures += 1
    return _drop_failures(draws, failures, cfg)


def rf_case_ii_draws(
    design: Design,
    delta: list[np.ndarray],
    v_hat: np.ndarray,
    rf_partition: Partition,
    eps: float,
    cfg: BootstrapConfig,
    *,
    stage: int = 1,
    nu: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Bootstrap draws for l RF breaks against l+1."""
    spec = design.spec
    n, q = design.n, spec.q
    min_len = min_regime_length(n, eps, q)
    if nu is None:
        nu = MultiplierStream(
            cfg.master_seed, cfg.rep_index, purpose=STREAM_NU_RF, stage=stage
        ).matrix(n, cfg.B)
    if cfg.scheme == "wr" and spec.max_lag > 0:
        xb, Zb = _rf_wr_paths(design, delta, rf_partition, v_hat, nu)
    else:
        xhat = np.empty_like(design.x)
        for j, (a, bnd) in enumerate(rf_partition.regimes()):
            xhat[a - 1 : bnd] = design.Z[a - 1 : bnd] @ delta[j]
        xb = xhat[:, :, None] + v_hat[:, :, None] * nu[:, None, :]
        Zb = None
    if spec.p1 == 1:
        Yb = xb[:, 0, :].T.copy()
        Wb = (
            np.broadcast_to(design.Z, (cfg.B,) + design.Z.shape) if Zb is None else Zb
        )
        best = np.full(cfg.B, -np.inf)
        feasible = 0
        for a, bnd in rf_partition.regimes():
            length = bnd - a + 1
            if length < 2 * min_len:
                continue
            feasible += 1
            sl = slice(a - 1, bnd)
            local = np.arange(min_len, length - min_len + 1, dtype=np.int64)
            vals, _, _ = scan_partitions_batch(
                Yb[:, sl].copy(),
                np.ascontiguousarray(Wb[:, sl, :]),
                local[:, None],
                n,
            )
            np.maximum(best, np.max(vals, axis=1), out=best)
        if feasible == 0:
            raise BootstrapFailureError("no regime admits an extra break")
        finite = np.isfinite(best)
        return _drop_failures(list(best[finite]), int(np.sum(~finite)), cfg)
    draws: list[float] = []
    failures = 0
    for b in range(cfg.B):
        try:
            Z_b = design.Z if Zb is None else Zb[b]
            stat, _, _, _, _ = seq_scan(
                xb[:, :, b], Z_b, rf_partition, n, min_len
            )
            draws.append(stat)
        except Exception:
            failures += 1
    return _drop_failures(draws, failures, cfg)


def bootstrap_statistic(
    spec: ModelSpec,
    data: Dataset,
    b: int,
    *,
    scheme: str = "wr",
    null_breaks: int = 0,
    alt_breaks: int = 1,
    statistic: str = "supwald",
    eps: float = 0.15,
    master_seed: int = 0,
    rep_index: int = 1,
    rf_partition: Partition | None = None,
    beta_source: str = "alt",
) -> float:
    """The bootstrap statistic of replication b (1-based).

    Convenience wrapper over the batched engines: regenerates replication
    b's sample from its multiplier stream and re-runs the test pipeline
    on it.  The reduced-form break locations are held at the sample
    estimates.
    """
    design = make_design_cached(spec, data)
    n = design.n
    if rf_partition is None:
        from .partition_search import rf_break_grid_and_fit

        rf_partition, _ = rf_break_grid_and_fit(design, 0, eps)
    cfg = BootstrapConfig(scheme=scheme, B=1, master_seed=master_seed, rep_index=rep_index)
    nu = MultiplierStream(master_seed, rep_index).column(n, b)[:, None]
    if null_breaks == 0:
        est = fit_regimes(design, rf_partition, no_breaks(n, eps))
        draws, _ = case_i_draws(
            design, est, alt_breaks, eps, cfg,
            beta_source=beta_source, statistic=statistic, nu=nu,
        )
    else:
        from .estimation import first_stage

        _, x_hat, _ = first_stage(design, rf_partition)
        null_partition, _ = global_ssr_breaks(design, x_hat, null_breaks, eps)
        est = fit_regimes(design, rf_partition, null_partition)
        draws, _ = case_ii_draws(design, est, eps, cfg, statistic=statistic, nu=nu)
    if draws.size == 0:
        raise BootstrapFailureError(f"replication {b} failed")
    return float(draws[0])


# ---------------------------------------------------------------------------
# P-values and rejection rules
# ---------------------------------------------------------------------------


def pvalue_and_quantile(
    sample_stat: float,
    boot_draws: np.ndarray,
    alphas: tuple[float, ...] = (0.10, 0.05, 0.01),
) -> tuple[float, dict[float, float], dict[float, bool], list[str]]:
    """Bootstrap p-value and order-statistic critical values.

    The p-value is the fraction of draws at least as large as the sample
    statistic.  The level-alpha critical value is the (1-alpha)(B+1)-th
    order statistic of the B draws; when that index is not an integer it
    is rounded up and flagged, and when it exceeds B the level is
    infeasible (critical value +inf, never reject).
    """
    draws = np.asarray(boot_draws, dtype=np.float64)
    if draws.size == 0:
        raise EmptyDrawsError("no bootstrap draws")
    B = draws.size
    p = float(np.mean(draws >= sample_stat))
    ordered = np.sort(draws)
    crits: dict[float, float] = {}
    rejects: dict[float, bool] = {}
    flags: list[str] = []
    for a in alphas:
        pos = (1.0 - a) * (B + 1)
        idx = int(round(pos))
        if abs(pos - idx) > 1e-9:
            idx = math.ceil(pos)
            flags.append(f"alpha={a}: order-statistic index {pos:.2f} rounded up")
        if idx > B:
            crits[a] = math.inf
            rejects[a] = False
            flags.append(f"alpha={a}: infeasible with B={B}")
            continue
        crit = float(ordered[idx - 1])
        crits[a] = crit
        rejects[a] = bool(sample_stat >= crit)
    return p, crits, rejects, flags


# ---------------------------------------------------------------------------
# One-call test drivers
# ---------------------------------------------------------------------------


def bootstrap_sup_test(
    spec: ModelSpec,
    data: Dataset,
    *,
    null_breaks: int = 0,
    alt_breaks: int = 1,
    statistic: str = "supwald",
    scheme: str = "wr",
    eps: float = 0.15,
    B: int = 399,
    master_seed: int = 0,
    rep_index: int = 1,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
    alphas: tuple[float, ...] = (0.10, 0.05, 0.01),
    beta_source: str = "alt",
) -> TestOutcome:
    """Run one structural-change test end to end with bootstrap inference.

    null_breaks=0 tests no change against alt_breaks changes; null_breaks
    = l >= 1 tests l against l+1 (alt_breaks must then be l+1).
    """
    design = make_design_cached(spec, data)
    return bootstrap_sup_test_design(
        design,
        null_breaks=null_breaks,
        alt_breaks=alt_breaks,
        statistic=statistic,
        scheme=scheme,
        eps=eps,
        B=B,
        master_seed=master_seed,
        rep_index=rep_index,
        rf_partition=rf_partition,
        rf_breaks=rf_breaks,
        alphas=alphas,
        beta_source=beta_source,
    )


def bootstrap_sup_test_design(
    design: Design,
    *,
    null_breaks: int = 0,
    alt_breaks: int = 1,
    statistic: str = "supwald",
    scheme: str = "wr",
    eps: float = 0.15,
    B: int = 399,
    master_seed: int = 0,
    rep_index: int = 1,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
    alphas: tuple[float, ...] = (0.10, 0.05, 0.01),
    beta_source: str = "alt",
) -> TestOutcome:
    from .partition_search import rf_break_grid_and_fit
    from .stats import sup_f_design, sup_wald_seq_design

    if statistic not in ("supwald", "supf"):
        raise ConfigError("statistic must be 'supwald' or 'supf'")
    if null_breaks < 0:
        raise ConfigError("null_breaks must be >= 0")
    if null_breaks > 0 and alt_breaks != null_breaks + 1:
        raise ConfigError("with a breaking null, alt_breaks must equal null_breaks + 1")
    n = design.n
    if rf_partition is None:
        rf_partition, _ = rf_break_grid_and_fit(design, rf_breaks, eps)
    cfg = BootstrapConfig(scheme=scheme, B=B, master_seed=master_seed, rep_index=rep_index)

    if null_breaks == 0:
        if statistic == "supwald":
            outcome = sup_wald_design(
                design, alt_breaks, eps, rf_partition, beta_source=beta_source
            )
        else:
            outcome = sup_f_design(design, alt_breaks, eps, rf_partition)
        est = fit_regimes(
            design, rf_partition, no_breaks(n, eps)
        )
        draws, failures = case_i_draws(
            design,
            est,
            alt_breaks,
            eps,
            cfg,
            beta_source=beta_source,
            statistic=statistic,
        )
    else:
        from .estimation import first_stage

        _, x_hat, _ = first_stage(design, rf_partition)
        null_partition, _ = global_ssr_breaks(design, x_hat, null_breaks, eps)
        outcome = sup_wald_seq_design(
            design,
            null_breaks,
            eps,
            rf_partition,
            null_partition=null_partition,
            want="f" if statistic == "supf" else "wald",
        )
        est = fit_regimes(design, rf_partition, null_partition)
        draws, failures = case_ii_draws(
            design, est, eps, cfg, statistic=statistic
        )

    p, crits, rejects, flags = pvalue_and_quantile(outcome.statistic, draws, alphas)
    outcome.boot_draws = draws
    outcome.p_value = p
    outcome.critical_values = crits
    outcome.levels_rejected = rejects
    outcome.failed_replications = failures
    outcome.flags.extend(flags)
    return outcome
