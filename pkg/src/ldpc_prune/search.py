"""Stagewise beam search over joint shorten/puncture column pairs.

Stage t extends every surviving pattern of stage t-1 by one shortened
information column and one punctured column, evaluates the PEXIT threshold
of each extension, and keeps the ``beam`` best. After T stages the
survivors are full patterns of T shortened and T punctured columns.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import pexit
from .protograph import BaseMatrix
from .pruning import PruningPattern, pruned_rate, validate

log = logging.getLogger(__name__)


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    base: BaseMatrix
    stages: int
    beam: int = 8
    bracket: tuple[float, float] = pexit.DEFAULT_BRACKET
    width: float = pexit.DEFAULT_WIDTH
    eps: float = pexit.DEFAULT_EPS
    max_iter: int = pexit.DEFAULT_MAX_ITER
    threads: int | None = None

    def __post_init__(self):
        bm, t = self.base, self.stages
        if t < 1 or self.beam < 1:
            raise SearchError("stages and beam must both be at least 1")
        if 2 * t > bm.n or t > bm.k or t >= bm.m:
            raise SearchError(
                f"{t} stages infeasible for n={bm.n}, k={bm.k}, m={bm.m} "
                "(need 2T <= n, T <= k, T < m)"
            )


@dataclass(frozen=True)
class BeamEntry:
    stage: int
    shorten_col: int
    puncture_col: int
    threshold_db: float
    parent: int | None
    pattern: PruningPattern = field(compare=False)


def stage1_candidates(bm: BaseMatrix) -> list[tuple[int, int]]:
    return [(s, p) for s in range(1, bm.k + 1) for p in range(1, bm.n + 1) if p != s]


def stage_candidates(beam: Sequence[BeamEntry], bm: BaseMatrix) -> list[tuple[int, int, int]]:
    """(parent index, s, p) triples extending every beam entry by one pair."""
    if not beam:
        raise SearchError("empty beam")
    out = []
    for parent, entry in enumerate(beam):
        used = entry.pattern.columns()
        info = [c for c in range(1, bm.k + 1) if c not in used]
        free = [c for c in range(1, bm.n + 1) if c not in used]
        for s in info:
            for p in free:
                if p != s:
                    out.append((parent, s, p))
    if not out:
        raise SearchError("no legal column pairs remain")
    return out


def evaluate_patterns(
    bm: BaseMatrix, patterns: Sequence[PruningPattern], cfg: SearchConfig | None = None
) -> np.ndarray:
    """Thresholds of many patterns at their own pruned rates, in one batch.

    Shortened columns are pinned rather than erased so every candidate
    shares the same protograph edge list.
    """
    kw = {}
    if cfg is not None:
        kw = dict(
            bracket=cfg.bracket, width=cfg.width, eps=cfg.eps,
            max_iter=cfg.max_iter, threads=cfg.threads,
        )
    graph = pexit.EdgeGraph.from_base(bm)
    states = np.stack([pexit.pinned_states(bm.n, p.shorten, p.puncture) for p in patterns])
    rates = np.array([float(pruned_rate(bm.n, bm.k, p.alpha, p.beta)) for p in patterns])
    thr, _ = pexit.thresholds_batch(graph, states, rates, **kw)
    return thr


def _select(cands, patterns, thr, beam, stage):
    # stable sort on threshold keeps the (parent, s, p) enumeration order for ties
    order = np.argsort(thr, kind="stable")[:beam]
    if not np.isfinite(thr[order[0]]):
        raise SearchError(f"no candidate converges at stage {stage}")
    return [
        BeamEntry(stage, cands[i][1], cands[i][2], float(thr[i]), cands[i][0], patterns[i])
        for i in order
    ]


@dataclass
class SearchResult:
    stages: list[list[BeamEntry]]

    @property
    def final(self) -> list[BeamEntry]:
        return self.stages[-1]

    @property
    def best(self) -> BeamEntry:
        return self.final[0]

    def trace(self, rank: int) -> PruningPattern:
        """Rebuild a final pattern by following parent links back to stage 1."""
        s, p = [], []
        entry = self.final[rank]
        for t in range(len(self.stages) - 1, -1, -1):
            s.append(entry.shorten_col)
            p.append(entry.puncture_col)
            if t > 0:
                entry = self.stages[t - 1][entry.parent]
        return PruningPattern(s[::-1], p[::-1])

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "rank", "s", "p", "threshold_db", "parent_rank"])
        for beam in self.stages:
            for rank, e in enumerate(beam, start=1):
                parent = "" if e.parent is None else e.parent + 1
                w.writerow([e.stage, rank, e.shorten_col, e.puncture_col, f"{e.threshold_db:.6f}", parent])
        return buf.getvalue()


def run_search(cfg: SearchConfig) -> SearchResult:
    bm = cfg.base
    stages: list[list[BeamEntry]] = []
    beam: list[BeamEntry] = []
    for t in range(1, cfg.stages + 1):
        if t == 1:
            cands = [(None, s, p) for s, p in stage1_candidates(bm)]
            patterns = [PruningPattern([s], [p]) for _, s, p in cands]
        else:
            cands = stage_candidates(beam, bm)
            patterns = [
                PruningPattern(beam[i].pattern.shorten + (s,), beam[i].pattern.puncture + (p,))
                for i, s, p in cands
            ]
        log.info("stage %d: evaluating %d candidates", t, len(cands))
        thr = evaluate_patterns(bm, patterns, cfg)
        beam = _select(cands, patterns, thr, cfg.beam, t)
        for e in beam:
            validate(e.pattern, bm)
        log.info("stage %d: best %s at %.3f dB", t, beam[0].pattern, beam[0].threshold_db)
        stages.append(beam)
    return SearchResult(stages)
