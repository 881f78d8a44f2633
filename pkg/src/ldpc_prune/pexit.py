"""Protograph EXIT analysis and decoding-threshold bisection.

Mutual information (MI) is tracked per protograph edge. One iteration is a
variable-to-check update followed by a check-to-variable update; the
a-posteriori MI of every column is then compared against ``1 - eps``.

Column states are expressed as a multiplier on the channel variance
``8 R Eb/N0``: 1 for a transmitted column, 0 for a punctured column
(no channel observation) and ``inf`` for a column pinned to MI = 1. Pinning
a column is equivalent to erasing it from the protograph, which is how
shortening is analysed; the batched search relies on that equivalence.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .protograph import BaseMatrix

# J(sigma) = (1 - 2^(-H1 sigma^(2 H2)))^H3
_H1 = 0.3073
_H2 = 0.8935
_H3 = 1.1064

# Largest MI strictly below 1 in double precision; keeps J_inv finite.
_MI_MAX = 1.0 - 2.0**-52

DEFAULT_EPS = 1e-4
DEFAULT_MAX_ITER = 1000
DEFAULT_BRACKET = (-2.0, 12.0)
DEFAULT_WIDTH = 1e-3
# A non-converged state whose edge MI moves less than this per iteration
# cannot reach 1 - eps within the iteration cap.
STALL_TOL = 1e-10


def J(sigma):
    """MI between a bit and a consistent Gaussian LLR of std ``sigma``."""
    s = np.asarray(sigma, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (1.0 - np.exp2(-_H1 * s ** (2 * _H2))) ** _H3
    out = np.where(s <= 0, 0.0, out)
    return out if out.ndim else float(out)


def J_inv(mi):
    """Inverse of :func:`J` on [0, 1]; 1 maps to a large finite sigma."""
    x = np.clip(np.asarray(mi, dtype=np.float64), 0.0, _MI_MAX)
    out = (-np.log2(1.0 - x ** (1.0 / _H3)) / _H1) ** (1.0 / (2 * _H2))
    return out if out.ndim else float(out)


def channel_sigma2(ebno_db, rate) -> float | np.ndarray:
    """Variance of the BPSK/AWGN channel LLR: 8 R Eb/N0."""
    return 8.0 * float(rate) * 10.0 ** (np.asarray(ebno_db, dtype=np.float64) / 10.0)


def channel_mi(ebno_db: float, rate, punctured: bool = False) -> float:
    if punctured:
        return 0.0
    return float(J(math.sqrt(channel_sigma2(ebno_db, rate))))


class EdgeGraph:
    """Edge lists of a protograph in the layout the EXIT kernel uses."""

    def __init__(self, support: np.ndarray):
        support = np.asarray(support, dtype=bool)
        self.m, self.n = support.shape
        # row-major edge order: rows are contiguous
        self.rows, self.cols = np.nonzero(support)
        self.n_edges = self.rows.size
        self.row_starts = np.searchsorted(self.rows, np.arange(self.m))
        self.col_order = np.lexsort((self.rows, self.cols))
        self.col_starts = np.searchsorted(self.cols[self.col_order], np.arange(self.n))

    @classmethod
    def from_base(cls, bm: BaseMatrix) -> "EdgeGraph":
        return cls(bm.support)

    def col_sums(self, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(x[:, self.col_order], self.col_starts, axis=1)

    def row_sums(self, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(x, self.row_starts, axis=1)


def _run_batch(graph: EdgeGraph, sigma2: np.ndarray, eps: float, max_iter: int):
    """EXIT recursion for a batch of channel-variance vectors.

    ``sigma2`` has shape (B, n). Returns (converged[B], iterations[B]).
    Rows leave the active set as soon as they converge or stall.
    """
    b = sigma2.shape[0]
    converged = np.zeros(b, dtype=bool)
    iters = np.full(b, max_iter, dtype=np.int64)
    active = np.arange(b)
    s2 = sigma2
    ec = np.zeros((b, graph.n_edges))
    jc = np.zeros_like(ec)
    rows, cols = graph.rows, graph.cols
    with np.errstate(invalid="ignore", over="ignore"):
        for it in range(1, max_iter + 1):
            tot = graph.col_sums(jc) + s2
            ev = J(np.sqrt(np.maximum(tot[:, cols] - jc, 0.0)))
            jv = J_inv(1.0 - ev) ** 2
            rs = graph.row_sums(jv)
            ec_new = 1.0 - J(np.sqrt(np.maximum(rs[:, rows] - jv, 0.0)))
            jc = J_inv(ec_new) ** 2
            app = J(np.sqrt(graph.col_sums(jc) + s2))
            done = (app >= 1.0 - eps).all(axis=1)
            stalled = ~done & (np.abs(ec_new - ec).max(axis=1) < STALL_TOL)
            ec = ec_new
            leave = done | stalled
            if leave.any():
                converged[active[done]] = True
                iters[active[leave]] = it
                keep = ~leave
                active, s2, ec, jc = active[keep], s2[keep], ec[keep], jc[keep]
                if active.size == 0:
                    break
    return converged, iters


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("LDPC_PRUNE_THREADS", "1") or 1)
    return max(1, threads)


def converges_batch(
    graph: EdgeGraph,
    states: np.ndarray,
    rates: np.ndarray,
    ebno_db: np.ndarray,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int | None = None,
    chunk: int = 256,
):
    """Evaluate convergence for B (column-state, rate, Eb/N0) triples.

    ``states`` is (B, n) of channel multipliers (1, 0 or inf). Results do
    not depend on ``threads`` or ``chunk``: every row is computed
    independently with the same operation order.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    rates = np.broadcast_to(np.asarray(rates, dtype=np.float64), states.shape[:1])
    ebno_db = np.broadcast_to(np.asarray(ebno_db, dtype=np.float64), states.shape[:1])
    with np.errstate(invalid="ignore"):
        base = 8.0 * rates * 10.0 ** (ebno_db / 10.0)
        sigma2 = np.where(states == 0, 0.0, states * base[:, None])
    b = states.shape[0]
    spans = [(i, min(i + chunk, b)) for i in range(0, b, chunk)]
    out_c = np.zeros(b, dtype=bool)
    out_i = np.zeros(b, dtype=np.int64)

    def work(span):
        lo, hi = span
        out_c[lo:hi], out_i[lo:hi] = _run_batch(graph, sigma2[lo:hi], eps, max_iter)

    n_threads = resolve_threads(threads)
    if n_threads == 1 or len(spans) == 1:
        for span in spans:
            work(span)
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            list(pool.map(work, spans))
    return out_c, out_i


class BracketError(RuntimeError):
    """The bisection bracket does not straddle the threshold from above."""


def thresholds_batch(
    graph: EdgeGraph,
    states: np.ndarray,
    rates: np.ndarray,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    width: float = DEFAULT_WIDTH,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int | None = None,
):
    """Bisect the threshold of every row of ``states`` in lock step.

    Returns (thresholds_db, iterations_at_threshold). Rows that do not
    converge at the upper bracket end get ``inf``.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    b = states.shape[0]
    rates = np.broadcast_to(np.asarray(rates, dtype=np.float64), (b,))
    lo_db, hi_db = bracket
    if not lo_db < hi_db:
        raise ValueError(f"bad bracket {bracket}")
    kw = dict(eps=eps, max_iter=max_iter, threads=threads)

    ok_hi, it_hi = converges_batch(graph, states, rates, np.full(b, hi_db), **kw)
    result = np.full(b, np.inf)
    iters = np.zeros(b, dtype=np.int64)
    idx = np.flatnonzero(ok_hi)
    if idx.size == 0:
        return result, iters
    ok_lo, _ = converges_batch(graph, states[idx], rates[idx], np.full(idx.size, lo_db), **kw)
    if ok_lo.any():
        raise BracketError(f"already converges at the lower bracket end {lo_db} dB")
    lo = np.full(idx.size, lo_db)
    hi = np.full(idx.size, hi_db)
    it = it_hi[idx].copy()
    while (hi - lo).max() > width:
        mid = 0.5 * (lo + hi)
        ok, it_mid = converges_batch(graph, states[idx], rates[idx], mid, **kw)
        hi = np.where(ok, mid, hi)
        it = np.where(ok, it_mid, it)
        lo = np.where(ok, lo, mid)
    result[idx] = hi
    iters[idx] = it
    return result, iters


@dataclass(frozen=True)
class ThresholdQuery:
    """Threshold problem for a base matrix that is already shortened.

    ``punctured`` are 1-based column indices of ``base``; ``pinned`` are
    columns whose channel MI is held at 1 (the erasure-free way to express
    shortening).
    """

    base: BaseMatrix
    rate: Fraction
    punctured: frozenset[int] = frozenset()
    pinned: frozenset[int] = frozenset()
    bracket: tuple[float, float] = DEFAULT_BRACKET
    width: float = DEFAULT_WIDTH
    eps: float = DEFAULT_EPS
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate))
        object.__setattr__(self, "punctured", frozenset(int(c) for c in self.punctured))
        object.__setattr__(self, "pinned", frozenset(int(c) for c in self.pinned))
        if not 0 < self.rate < 1:
            raise ValueError(f"rate must lie in (0, 1), got {self.rate}")
        if not self.bracket[0] < self.bracket[1]:
            raise ValueError(f"bad bracket {self.bracket}")
        for c in self.punctured | self.pinned:
            if not 1 <= c <= self.base.n:
                raise ValueError(f"column {c} outside [1, {self.base.n}]")
        if self.punctured & self.pinned:
            raise ValueError("a column cannot be both punctured and pinned")

    def states(self) -> np.ndarray:
        s = np.ones(self.base.n)
        for c in self.punctured:
            s[c - 1] = 0.0
        for c in self.pinned:
            s[c - 1] = np.inf
        return s

    @classmethod
    def from_pattern(cls, bm: BaseMatrix, pattern, rate=None, **kw) -> "ThresholdQuery":
        """Shorten ``bm`` by column erasure and mark the punctured columns."""
        from .pruning import apply

        pruned = apply(pattern, bm)
        return cls(pruned.base, pruned.rate if rate is None else rate, pruned.punctured, **kw)


@dataclass(frozen=True)
class ThresholdResult:
    threshold_db: float
    iterations: int
    rate: Fraction = field(default=Fraction(0))

    @property
    def converged(self) -> bool:
        return math.isfinite(self.threshold_db)


def pexit_converges(query: ThresholdQuery, ebno_db: float) -> tuple[bool, int]:
    graph = EdgeGraph.from_base(query.base)
    ok, it = converges_batch(
        graph, query.states()[None, :], float(query.rate), ebno_db, query.eps, query.max_iter
    )
    return bool(ok[0]), int(it[0])


def threshold(query: ThresholdQuery) -> ThresholdResult:
    """Decoding threshold in dB Eb/N0 (upper end of the final bracket).

    ``inf`` means the pattern does not converge even at the top of the
    bracket; :class:`BracketError` means the bracket starts too high.
    """
    graph = EdgeGraph.from_base(query.base)
    thr, it = thresholds_batch(
        graph,
        query.states()[None, :],
        float(query.rate),
        bracket=query.bracket,
        width=query.width,
        eps=query.eps,
        max_iter=query.max_iter,
        threads=1,
    )
    return ThresholdResult(float(thr[0]), int(it[0]), query.rate)


def pattern_threshold(bm: BaseMatrix, pattern, rate=None, **kw) -> ThresholdResult:
    return threshold(ThresholdQuery.from_pattern(bm, pattern, rate=rate, **kw))


def pinned_states(n: int, shorten: Iterable[int], puncture: Iterable[int]) -> np.ndarray:
    """Column-state vector for a pattern on the unshortened matrix."""
    s = np.ones(n)
    for c in shorten:
        s[c - 1] = np.inf
    for c in puncture:
        s[c - 1] = 0.0
    return s
