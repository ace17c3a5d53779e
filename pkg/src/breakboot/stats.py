"""Sup-Wald and sup-F statistics over admissible break partitions.

The heteroskedasticity-robust Wald form for a candidate partition with
regimes I_1..I_{k+1} is

    Wald = n * b' R' (R V R')^{-1} R b,
    V    = diag(V_1, ..., V_{k+1}),   V_i = Q_i^{-1} M_i Q_i^{-1},
    Q_i  = n^{-1} sum_{t in I_i} w_t w_t',
    M_i  = n^{-1} sum_{t in I_i} s_t^2 w_t w_t',

where b stacks the regime coefficient vectors, R differences adjacent
regimes, and the score s_t combines the structural residual with the
first-stage residual weighted by the endogenous-block coefficients.  When
the score's coefficient source coincides with the regime fit, s_t reduces
to the second-stage residual; the scan below exploits that identity.

All candidate partitions of a scan are evaluated in one batched pass:
regime Gram matrices come from prefix sums, coefficient solves and the
final quadratic forms are stacked solves, and the outer-product terms are
single matrix products against the row-wise regressor cross products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import Design, RobustBlocks, first_stage
from .exceptions import (
    DegenerateSSRError,
    InfeasiblePartitionError,
    SingularMiddleError,
)
from .model import Dataset, ModelSpec, Partition
from .partition_search import (
    enumerate_partitions,
    global_ssr_breaks,
    min_regime_length,
    rf_break_grid_and_fit,
)

_CHUNK = 2048


@dataclass(frozen=True)
class ContrastMatrix:
    """R_k = Rtilde_k (x) I_d with Rtilde_k(i,i)=1, Rtilde_k(i,i+1)=-1."""

    k: int
    d: int

    @property
    def matrix(self) -> np.ndarray:
        rt = np.zeros((self.k, self.k + 1))
        idx = np.arange(self.k)
        rt[idx, idx] = 1.0
        rt[idx, idx + 1] = -1.0
        return np.kron(rt, np.eye(self.d))


@dataclass
class TestOutcome:
    """A test statistic with its search and bootstrap context."""

    statistic: float
    argmax_partition: Partition | None = None
    argmax_regime: int | None = None
    boot_draws: np.ndarray = field(default_factory=lambda: np.empty(0))
    p_value: float | None = None
    levels_rejected: dict[float, bool] | None = None
    critical_values: dict[float, float] | None = None
    skipped_candidates: int = 0
    failed_replications: int = 0
    flags: list[str] = field(default_factory=list)


def wald_at(
    beta_stack: np.ndarray,
    V_blocks: list[np.ndarray] | RobustBlocks,
    R: ContrastMatrix,
    T: int,
) -> float:
    """Evaluate the Wald quadratic form at one partition.

    beta_stack concatenates the k+1 regime coefficient vectors; V_blocks
    are the per-regime sandwich blocks.
    """
    blocks = V_blocks.V if isinstance(V_blocks, RobustBlocks) else V_blocks
    Rm = R.matrix
    d = R.d
    V = np.zeros((len(blocks) * d, len(blocks) * d))
    for i, Vi in enumerate(blocks):
        V[i * d : (i + 1) * d, i * d : (i + 1) * d] = Vi
    r = Rm @ np.asarray(beta_stack, dtype=np.float64)
    mid = Rm @ V @ Rm.T
    try:
        sol = np.linalg.solve(mid, r)
    except np.linalg.LinAlgError as exc:
        raise SingularMiddleError("R V R' is singular") from exc
    return float(T * r @ sol)


# ---------------------------------------------------------------------------
# Batched partition scan
# ---------------------------------------------------------------------------


@dataclass
class ScanResult:
    parts: np.ndarray        # (m, k) candidate break tuples (local rows)
    wald: np.ndarray         # (m,), -inf where skipped
    ssr: np.ndarray          # (m,) alternative-model SSR, +inf where failed
    n_skipped: int


def _batched_solve(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve stacked systems, masking singular rows instead of raising."""
    try:
        X = np.linalg.solve(A, B)
        ok = np.all(np.isfinite(X.reshape(X.shape[0], -1)), axis=1)
        return X, ok
    except np.linalg.LinAlgError:
        pass
    m = A.shape[0]
    X = np.zeros_like(B, dtype=np.float64)
    ok = np.zeros(m, dtype=bool)
    for i in range(m):
        try:
            Xi = np.linalg.solve(A[i], B[i])
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(Xi)):
            X[i] = Xi
            ok[i] = True
    return X, ok


def scan_partitions(
    y: np.ndarray,
    W: np.ndarray,
    parts: np.ndarray,
    n_global: int,
    *,
    v_rows: np.ndarray | None = None,
    score_u: np.ndarray | None = None,
    score_beta: np.ndarray | None = None,
    p1: int = 0,
    compute_wald: bool = True,
) -> ScanResult:
    """Evaluate the Wald statistic (and SSR) at every candidate partition.

    Parameters
    ----------
    y : (n,) or (n, py) targets; py > 1 pools equations with a joint
        stacked contrast (used for the reduced-form tests).
    W : (n, d) regressor rows.
    parts : (m, k) int array of candidate break tuples (1-based local rows).
    n_global : normalisation length (the full effective sample, even when
        y/W are a regime slice of it).
    v_rows : (n, p1) first-stage residual rows entering the score, or None.
    score_u : fixed score base (bootstrap-generated errors); None means
        the candidate-fit residuals.
    score_beta : fixed endogenous-block coefficients for the score; None
        means the candidate fit's own.
    p1 : width of the endogenous block at the front of W.
    """
    y2 = y if y.ndim == 2 else y[:, None]
    n, d = W.shape
    py = y2.shape[1]
    deff = d * py
    m_total, k = parts.shape
    if v_rows is not None and py != 1:
        raise ValueError("v_rows adjustment requires a single target column")

    cross = (W[:, :, None] * W[:, None, :]).reshape(n, d * d)
    cum_G = np.concatenate([np.zeros((1, d * d)), np.cumsum(cross, axis=0)])
    cum_h = np.concatenate(
        [np.zeros((1, d, py)), np.cumsum(W[:, :, None] * y2[:, None, :], axis=0)]
    )
    cum_yy = np.concatenate([np.zeros((1, py)), np.cumsum(y2 * y2, axis=0)])
    rows = np.arange(1, n + 1)
    u_fixed = None
    if score_u is not None:
        u_fixed = score_u if score_u.ndim == 2 else score_u[:, None]

    wald_out = np.full(m_total, -np.inf)
    ssr_out = np.full(m_total, np.inf)
    skipped = 0

    for lo in range(0, m_total, _CHUNK):
        sel = slice(lo, min(lo + _CHUNK, m_total))
        P = parts[sel]
        m = P.shape[0]
        edges = np.concatenate(
            [np.zeros((m, 1), dtype=np.int64), P, np.full((m, 1), n, dtype=np.int64)],
            axis=1,
        )
        ok = np.ones(m, dtype=bool)
        ssr = np.zeros(m)
        thetas: list[np.ndarray] = []
        Vs: list[np.ndarray] = []
        for i in range(k + 1):
            s_e, e_e = edges[:, i], edges[:, i + 1]
            G = (cum_G[e_e] - cum_G[s_e]).reshape(m, d, d)
            h = cum_h[e_e] - cum_h[s_e]
            b, ok_i = _batched_solve(G, h)
            ok &= ok_i
            ssr += np.sum((cum_yy[e_e] - cum_yy[s_e]), axis=1) - np.einsum(
                "mdc,mdc->m", b, h
            )
            if not compute_wald:
                continue
            mask = (rows[None, :] > s_e[:, None]) & (rows[None, :] <= e_e[:, None])
            # per-candidate coefficient gap entering the score through v_rows:
            # fit residuals get (beta_score - beta_fit), fixed errors get
            # beta_score itself (candidate fit when no fixed source given)
            g = None
            if v_rows is not None:
                if u_fixed is None:
                    if score_beta is not None:
                        g = score_beta[None, :] - b[:, :p1, 0]
                elif score_beta is not None:
                    g = np.broadcast_to(score_beta, (m, p1))
                else:
                    g = b[:, :p1, 0]

            def _score_col(c: int) -> np.ndarray:
                if u_fixed is None:
                    s = y2[None, :, c] - b[:, :, c] @ W.T
                else:
                    s = np.broadcast_to(u_fixed[:, c], (m, n))
                if g is not None:
                    s = s + g @ v_rows.T
                return s

            M = np.zeros((m, deff, deff))
            for c in range(py):
                s_c = _score_col(c)
                for cc in range(c, py):
                    s_cc = s_c if cc == c else _score_col(cc)
                    block = ((s_c * s_cc) * mask) @ cross / n_global
                    blk = block.reshape(m, d, d)
                    M[:, c * d : (c + 1) * d, cc * d : (cc + 1) * d] = blk
                    if cc != c:
                        M[:, cc * d : (cc + 1) * d, c * d : (c + 1) * d] = (
                            blk.transpose(0, 2, 1)
                        )
            Qinv_M = np.zeros_like(M)
            Q = G / n_global
            for c in range(py):
                colsol, ok_q = _batched_solve(Q, M[:, c * d : (c + 1) * d, :])
                ok &= ok_q
                Qinv_M[:, c * d : (c + 1) * d, :] = colsol
            V = np.zeros_like(M)
            QMt = Qinv_M.transpose(0, 2, 1)
            for c in range(py):
                colsol, ok_q = _batched_solve(Q, QMt[:, c * d : (c + 1) * d, :])
                ok &= ok_q
                V[:, c * d : (c + 1) * d, :] = colsol
            thetas.append(b.transpose(0, 2, 1).reshape(m, deff))
            Vs.append(V)

        if compute_wald:
            delta = np.concatenate(
                [thetas[i] - thetas[i + 1] for i in range(k)], axis=1
            )
            mid = np.zeros((m, k * deff, k * deff))
            for a in range(k):
                sl_a = slice(a * deff, (a + 1) * deff)
                mid[:, sl_a, sl_a] = Vs[a] + Vs[a + 1]
                if a + 1 < k:
                    sl_b = slice((a + 1) * deff, (a + 2) * deff)
                    mid[:, sl_a, sl_b] = -Vs[a + 1]
                    mid[:, sl_b, sl_a] = -Vs[a + 1].transpose(0, 2, 1)
            sol, ok_m = _batched_solve(mid, delta[:, :, None])
            ok &= ok_m
            wald = n_global * np.einsum("mi,mi->m", delta, sol[:, :, 0])
            ok &= np.isfinite(wald) & (wald > -1e-6)
            wald = np.maximum(wald, 0.0)
        else:
            wald = np.zeros(m)
        wald[~ok] = -np.inf
        ssr = np.maximum(ssr, 0.0)
        ssr[~ok] = np.inf
        skipped += int(np.sum(~ok))
        wald_out[sel] = wald
        ssr_out[sel] = ssr

    return ScanResult(parts=parts, wald=wald_out, ssr=ssr_out, n_skipped=skipped)


def scan_partitions_batch(
    Y: np.ndarray,
    Ws: np.ndarray,
    parts: np.ndarray,
    n_global: int,
    *,
    v_rows: np.ndarray | None = None,
    score_u: np.ndarray | None = None,
    score_beta: np.ndarray | None = None,
    p1: int = 0,
    compute_wald: bool = True,
    chunk_rows: int = 1_000_000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scan one candidate grid over a batch of datasets at once.

    Same statistic as :func:`scan_partitions`, with a leading batch axis:
    Y is (B, n), Ws is (B, n, d), v_rows/score_u are (B, n, p1)/(B, n),
    score_beta is (B, p1).  Single-target only.  Returns (wald, ssr, ok),
    each (B, m).  Used by the bootstrap loops, where every replication
    shares the grid but has its own regressor rows.
    """
    B, n, d = Ws.shape
    m, k = parts.shape
    edges = np.concatenate(
        [np.zeros((m, 1), dtype=np.int64), parts, np.full((m, 1), n, dtype=np.int64)],
        axis=1,
    )
    rows = np.arange(1, n + 1)
    wald_out = np.empty((B, m))
    ssr_out = np.empty((B, m))
    ok_out = np.empty((B, m), dtype=bool)
    # keep the (batch, candidates, rows) work arrays around L2/L3 size
    bc = max(1, min(B, chunk_rows // max(1, m * n)))
    for b0 in range(0, B, bc):
        sel = slice(b0, min(b0 + bc, B))
        res = _scan_batch_chunk(
            Y[sel],
            Ws[sel],
            edges,
            rows,
            n_global,
            v_rows=None if v_rows is None else v_rows[sel],
            score_u=None if score_u is None else score_u[sel],
            score_beta=None if score_beta is None else score_beta[sel],
            p1=p1,
            compute_wald=compute_wald,
        )
        wald_out[sel], ssr_out[sel], ok_out[sel] = res
    return wald_out, ssr_out, ok_out


def _scan_batch_chunk(Y, Ws, edges, rows, n_global, *, v_rows, score_u,
                      score_beta, p1, compute_wald):
    Bc, n, d = Ws.shape
    m = edges.shape[0]
    k = edges.shape[1] - 2
    cross = (Ws[:, :, :, None] * Ws[:, :, None, :]).reshape(Bc, n, d * d)
    cum_G = np.concatenate([np.zeros((Bc, 1, d * d)), np.cumsum(cross, axis=1)], axis=1)
    cum_h = np.concatenate(
        [np.zeros((Bc, 1, d)), np.cumsum(Ws * Y[:, :, None], axis=1)], axis=1
    )
    cum_yy = np.concatenate([np.zeros((Bc, 1)), np.cumsum(Y * Y, axis=1)], axis=1)
    ok = np.ones((Bc, m), dtype=bool)
    ssr = np.zeros((Bc, m))
    thetas: list[np.ndarray] = []
    Vs: list[np.ndarray] = []
    for i in range(k + 1):
        s_e, e_e = edges[:, i], edges[:, i + 1]
        G = (cum_G[:, e_e] - cum_G[:, s_e]).reshape(Bc * m, d, d)
        h = (cum_h[:, e_e] - cum_h[:, s_e]).reshape(Bc * m, d)
        b, ok_i = _batched_solve(G, h[:, :, None])
        b = b[:, :, 0].reshape(Bc, m, d)
        ok &= ok_i.reshape(Bc, m)
        ssr += (cum_yy[:, e_e] - cum_yy[:, s_e]) - np.einsum(
            "bmd,bmd->bm", b, (cum_h[:, e_e] - cum_h[:, s_e])
        )
        if not compute_wald:
            thetas.append(b)
            continue
        mask = (rows[None, :] > s_e[:, None]) & (rows[None, :] <= e_e[:, None])
        if score_u is None:
            s = Y[:, None, :] - b @ Ws.transpose(0, 2, 1)
        else:
            s = np.broadcast_to(score_u[:, None, :], (Bc, m, n))
        if v_rows is not None:
            if score_u is None:
                g = (
                    None
                    if score_beta is None
                    else score_beta[:, None, :] - b[:, :, :p1]
                )
            else:
                g = score_beta[:, None, :] if score_beta is not None else b[:, :, :p1]
            if g is not None:
                s = s + g @ v_rows.transpose(0, 2, 1)
        s2 = s * s * mask[None, :, :]
        M = (s2 @ cross).reshape(Bc * m, d, d) / n_global
        Q = G / n_global
        QM, ok_q = _batched_solve(Q, M)
        ok &= ok_q.reshape(Bc, m)
        V, ok_v = _batched_solve(Q, QM.transpose(0, 2, 1))
        ok &= ok_v.reshape(Bc, m)
        thetas.append(b)
        Vs.append(V.reshape(Bc, m, d, d))
    if compute_wald:
        delta = np.concatenate([thetas[i] - thetas[i + 1] for i in range(k)], axis=2)
        mid = np.zeros((Bc, m, k * d, k * d))
        for a in range(k):
            sa = slice(a * d, (a + 1) * d)
            mid[:, :, sa, sa] = Vs[a] + Vs[a + 1]
            if a + 1 < k:
                sb = slice((a + 1) * d, (a + 2) * d)
                mid[:, :, sa, sb] = -Vs[a + 1]
                mid[:, :, sb, sa] = -Vs[a + 1].transpose(0, 1, 3, 2)
        sol, ok_m = _batched_solve(
            mid.reshape(Bc * m, k * d, k * d),
            delta.reshape(Bc * m, k * d, 1),
        )
        ok &= ok_m.reshape(Bc, m)
        wald = n_global * np.einsum(
            "bmi,bmi->bm", delta, sol[:, :, 0].reshape(Bc, m, k * d)
        )
        ok &= np.isfinite(wald) & (wald > -1e-6)
        wald = np.maximum(wald, 0.0)
    else:
        wald = np.zeros((Bc, m))
    wald[~ok] = -np.inf
    ssr = np.maximum(ssr, 0.0)
    ssr[~ok] = np.inf
    return wald, ssr, ok


def restricted_fit_batch(Y: np.ndarray, Ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-regime OLS per batch entry: coefficients (B, d), SSR (B,)."""
    G = np.einsum("bni,bnj->bij", Ws, Ws)
    h = np.einsum("bni,bn->bi", Ws, Y)
    b = np.linalg.solve(G, h[:, :, None])[:, :, 0]
    ssr = np.einsum("bn,bn->b", Y, Y) - np.einsum("bd,bd->b", b, h)
    return b, np.maximum(ssr, 0.0)


def restricted_fit(
    y: np.ndarray, W: np.ndarray
) -> tuple[np.ndarray, float]:
    """Single-regime OLS on the given rows: (coefficients, SSR).

    y may have several columns; coefficients are (d, py) and the SSR sums
    across columns.
    """
    y2 = y if y.ndim == 2 else y[:, None]
    G = W.T @ W
    b = np.linalg.solve(G, W.T @ y2)
    resid = y2 - W @ b
    return b, float(np.sum(resid * resid))


# ---------------------------------------------------------------------------
# Case (i): H0 m=0 vs H1 m=k
# ---------------------------------------------------------------------------


def case_i_scan(
    y: np.ndarray,
    W: np.ndarray,
    n: int,
    k: int,
    eps: float,
    q: int,
    *,
    v_rows: np.ndarray | None = None,
    score_u: np.ndarray | None = None,
    score_beta: np.ndarray | None = None,
    p1: int = 0,
) -> ScanResult:
    """Scan the full admissible k-break grid."""
    grid = enumerate_partitions(n, k, eps, q)
    return scan_partitions(
        y,
        W,
        grid.as_array(),
        n,
        v_rows=v_rows,
        score_u=score_u,
        score_beta=score_beta,
        p1=p1,
    )


def _max_outcome(scan: ScanResult, n: int, eps: float, min_len: int) -> TestOutcome:
    if not np.any(np.isfinite(scan.wald)):
        raise SingularMiddleError("every candidate partition failed")
    idx = int(np.argmax(scan.wald))
    part = Partition(tuple(scan.parts[idx]), n, eps, min_len)
    return TestOutcome(
        statistic=float(scan.wald[idx]),
        argmax_partition=part,
        skipped_candidates=scan.n_skipped,
    )


def sup_wald(
    spec: ModelSpec,
    data: Dataset,
    k: int = 1,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
    beta_source: str = "alt",
) -> TestOutcome:
    """Sup-Wald test of no SE breaks against k breaks.

    The first stage is fixed once: at rf_partition when given, else at the
    partition estimated with rf_breaks RF breaks.
    """
    design = make_design_cached(spec, data)
    return sup_wald_design(design, k, eps, rf_partition, rf_breaks, beta_source)


def sup_wald_design(
    design: Design,
    k: int = 1,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
    beta_source: str = "alt",
) -> TestOutcome:
    n = design.n
    q = design.spec.q
    min_len = min_regime_length(n, eps, q)
    if rf_partition is None:
        rf_partition, _ = rf_break_grid_and_fit(design, rf_breaks, eps)
    _, x_hat, v_hat = first_stage(design, rf_partition)
    W = np.column_stack([x_hat, design.Z1])
    score_beta = None
    if beta_source == "null":
        b0, _ = restricted_fit(design.y, W)
        score_beta = b0[: design.spec.p1, 0]
    scan = case_i_scan(
        design.y,
        W,
        n,
        k,
        eps,
        q,
        v_rows=v_hat,
        score_beta=score_beta,
        p1=design.spec.p1,
    )
    return _max_outcome(scan, n, eps, min_len)


def f_at(ssr0: float, ssrk: float, T_eff: int, k: int, d_beta: int) -> float:
    """F statistic from restricted/unrestricted SSRs."""
    if ssrk <= 0.0:
        raise DegenerateSSRError("unrestricted SSR must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    return ((T_eff - (k + 1) * d_beta) / (k * d_beta)) * ((ssr0 - ssrk) / ssrk)


def sup_f(
    spec: ModelSpec,
    data: Dataset,
    k: int = 1,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
) -> TestOutcome:
    """Sup-F test of no SE breaks against k breaks."""
    design = make_design_cached(spec, data)
    return sup_f_design(design, k, eps, rf_partition, rf_breaks)


def sup_f_design(
    design: Design,
    k: int = 1,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
) -> TestOutcome:
    n = design.n
    q = design.spec.q
    d_beta = design.spec.d_beta
    min_len = min_regime_length(n, eps, q)
    if rf_partition is None:
        rf_partition, _ = rf_break_grid_and_fit(design, rf_breaks, eps)
    _, x_hat, _ = first_stage(design, rf_partition)
    W = np.column_stack([x_hat, design.Z1])
    _, ssr0 = restricted_fit(design.y, W)
    scan = case_i_scan(design.y, W, n, k, eps, q)
    fvals = np.where(
        np.isfinite(scan.ssr) & (scan.ssr > 0),
        ((n - (k + 1) * d_beta) / (k * d_beta)) * (ssr0 - scan.ssr) / scan.ssr,
        -np.inf,
    )
    if not np.any(np.isfinite(fvals)):
        raise DegenerateSSRError("every candidate partition failed")
    idx = int(np.argmax(fvals))
    part = Partition(tuple(scan.parts[idx]), n, eps, min_len)
    return TestOutcome(
        statistic=float(fvals[idx]),
        argmax_partition=part,
        skipped_candidates=scan.n_skipped,
    )


# ---------------------------------------------------------------------------
# Case (ii): H0 m=l vs H1 m=l+1
# ---------------------------------------------------------------------------


def seq_scan(
    y: np.ndarray,
    W: np.ndarray,
    null_partition: Partition,
    n_global: int,
    min_len: int,
    *,
    v_rows: np.ndarray | None = None,
    score_u: np.ndarray | None = None,
    p1: int = 0,
    want: str = "wald",
    d_beta: int | None = None,
) -> tuple[float, int | None, int | None, int, list[str]]:
    """One-more-break statistic within the regimes of a null partition.

    For each regime of null_partition, fits the restricted single-regime
    model (supplying the score's endogenous-block coefficients and, for
    the F variant, the restricted SSR), then scans every admissible
    interior break.  Returns (statistic, argmax regime, argmax row,
    skipped count, flags).  want is "wald" or "f".
    """
    best = -np.inf
    best_regime: int | None = None
    best_row: int | None = None
    skipped = 0
    flags: list[str] = []
    feasible = 0
    for i, (a, bnd) in enumerate(null_partition.regimes(), start=1):
        length = bnd - a + 1
        if length < 2 * min_len:
            flags.append(f"regime {i} infeasible (length {length})")
            continue
        feasible += 1
        sl = slice(a - 1, bnd)
        y_i = y[sl]
        W_i = W[sl]
        b_null, ssr_null = restricted_fit(y_i, W_i)
        local = np.arange(min_len, length - min_len + 1, dtype=np.int64)
        parts = local[:, None]
        scan = scan_partitions(
            y_i,
            W_i,
            parts,
            n_global,
            v_rows=None if v_rows is None else v_rows[sl],
            score_u=None if score_u is None else score_u[sl],
            score_beta=b_null[:p1, 0] if (v_rows is not None and p1 > 0) else None,
            p1=p1,
        )
        skipped += scan.n_skipped
        if want == "f":
            if ssr_null <= 0:
                flags.append(f"regime {i} degenerate restricted SSR")
                continue
            scale = (length - d_beta) / d_beta
            vals = np.where(
                np.isfinite(scan.ssr),
                scale * (ssr_null - scan.ssr) / ssr_null,
                -np.inf,
            )
        else:
            vals = scan.wald
        if not np.any(np.isfinite(vals)):
            continue
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            best_regime = i
            best_row = a - 1 + int(local[j])
    if feasible == 0:
        raise InfeasiblePartitionError(
            "no regime of the null partition admits an extra break"
        )
    if not np.isfinite(best):
        raise SingularMiddleError("every within-regime candidate failed")
    return best, best_regime, best_row, skipped, flags


def _seq_outcome(
    design: Design, null_partition: Partition, stat, regime, row, skipped, flags
) -> TestOutcome:
    merged = tuple(sorted(null_partition.breaks + (row,)))
    part = Partition(merged, null_partition.n, null_partition.trim, null_partition.min_len)
    return TestOutcome(
        statistic=stat,
        argmax_partition=part,
        argmax_regime=regime,
        skipped_candidates=skipped,
        flags=flags,
    )


def sup_wald_seq(
    spec: ModelSpec,
    data: Dataset,
    n_breaks: int,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
) -> TestOutcome:
    """Sup-Wald test of n_breaks SE breaks against one more."""
    design = make_design_cached(spec, data)
    return sup_wald_seq_design(design, n_breaks, eps, rf_partition, rf_breaks)


def sup_wald_seq_design(
    design: Design,
    n_breaks: int,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
    null_partition: Partition | None = None,
    want: str = "wald",
) -> TestOutcome:
    if n_breaks < 1:
        raise InfeasiblePartitionError("the null must impose at least one break")
    n = design.n
    min_len = min_regime_length(n, eps, design.spec.q)
    if rf_partition is None:
        rf_partition, _ = rf_break_grid_and_fit(design, rf_breaks, eps)
    _, x_hat, v_hat = first_stage(design, rf_partition)
    W = np.column_stack([x_hat, design.Z1])
    if null_partition is None:
        null_partition, _ = global_ssr_breaks(design, x_hat, n_breaks, eps)
    stat, regime, row, skipped, flags = seq_scan(
        design.y,
        W,
        null_partition,
        n,
        min_len,
        v_rows=v_hat,
        p1=design.spec.p1,
        want=want,
        d_beta=design.spec.d_beta,
    )
    return _seq_outcome(design, null_partition, stat, regime, row, skipped, flags)


def sup_f_seq(
    spec: ModelSpec,
    data: Dataset,
    n_breaks: int,
    eps: float = 0.15,
    rf_partition: Partition | None = None,
    rf_breaks: int = 0,
) -> TestOutcome:
    """Sup-F test of n_breaks SE breaks against one more."""
    design = make_design_cached(spec, data)
    return sup_wald_seq_design(design, n_breaks, eps, rf_partition, rf_breaks, want="f")


# Small cache so the (spec, data) public wrappers do not rebuild rows on
# every call within one process.
_design_cache: dict[int, tuple[object, Design]] = {}


def make_design_cached(spec: ModelSpec, data: Dataset) -> Design:
    from .estimation import make_design

    key = id(data)
    hit = _design_cache.get(key)
    if hit is not None and hit[0] is data and hit[1].spec == spec:
        return hit[1]
    design = make_design(spec, data)
    if len(_design_cache) > 8:
        _design_cache.clear()
    _design_cache[key] = (data, design)
    return design
