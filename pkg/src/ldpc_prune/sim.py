"""Monte Carlo BER/FER simulation of pruned QC-LDPC codes over BPSK/AWGN."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codec import LLR_SAT, Decoder, Encoder
from .pexit import resolve_threads
from .protograph import BaseMatrix, lift
from .pruning import BitSchedule, PruningPattern, bit_schedule, sub_pattern, validate


# channel LLR magnitude used when noise is switched off
MSG_NOISELESS = 30.0


class PlanError(ValueError):
    pass


def parse_snr_range(text: str) -> tuple[float, ...]:
    """``"1.0:0.25:3.0"`` -> (1.0, 1.25, ..., 3.0); a single number is one point."""
    parts = text.split(":")
    if len(parts) == 1:
        return (float(parts[0]),)
    if len(parts) != 3:
        raise PlanError(f"SNR range must be start:step:stop, got {text!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise PlanError("SNR step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(max(count, 0)))


@dataclass(frozen=True)
class SimPlan:
    base: BaseMatrix
    pattern: PruningPattern
    n_s: int
    n_p: int
    snr_db: tuple[float, ...]
    max_frames: int = 1_000_000
    min_frame_errors: int = 100
    seed: int = 0
    max_iter: int = 100
    batch: int = 64
    noiseless: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.max_frames < 1:
            raise PlanError("max_frames must be at least 1")
        if self.batch < 1:
            raise PlanError("batch must be at least 1")
        if not self.snr_db:
            raise PlanError("empty SNR sweep")
        validate(self.pattern, self.base)

    @classmethod
    def from_prefix(cls, base, pattern, alpha, beta, snr_db, **kw) -> "SimPlan":
        """Prune the first ``alpha`` shortening and ``beta`` puncturing columns fully."""
        sub = sub_pattern(pattern, alpha, beta)
        return cls(base, sub, alpha * base.z, beta * base.z, tuple(snr_db), **kw)

    def schedule(self) -> BitSchedule:
        return bit_schedule(self.pattern, self.base, self.n_s, self.n_p)


@dataclass(frozen=True)
class SimPoint:
    ebno_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    info_bits: int = field(repr=False)
    seconds: float = field(default=0.0, compare=False)

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.info_bits) if self.frames else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0


class _Link:
    """Everything fixed for a plan: code, masks and energy normalisation."""

    def __init__(self, plan: SimPlan):
        bm = plan.base
        self.plan = plan
        self.sched = plan.schedule()
        self.h = lift(bm)
        self.encoder = Encoder(self.h, bm.k * bm.z)
        self.decoder = Decoder(self.h)
        n = bm.n * bm.z
        self.k_bits = bm.k * bm.z
        self.n_bits = n
        self.shortened = self.sched.shortened_bits()
        self.punctured = self.sched.punctured_bits()
        self.unknown = np.setdiff1d(np.arange(self.k_bits), self.shortened)
        self.rate_tx = float(self.sched.rate_tx)
        tx = np.ones(n, dtype=bool)
        tx[self.shortened] = False
        tx[self.punctured] = False
        self.tx = tx

    def frames(self, snr_index: int, ebno_db: float, first: int, count: int):
        """Build info words and channel LLRs for frames ``first .. first+count-1``.

        Each frame draws from its own generator keyed by (seed, snr index,
        frame index), so a frame's data never depends on batching.
        """
        info = np.empty((count, self.k_bits), dtype=np.uint8)
        noise = np.empty((count, self.n_bits))
        for i in range(count):
            rng = np.random.default_rng([self.plan.seed, snr_index, first + i])
            info[i] = rng.integers(0, 2, self.k_bits, dtype=np.uint8)
            noise[i] = rng.standard_normal(self.n_bits)
        info[:, self.shortened] = 0
        cw = self.encoder.encode(info)
        x = 1.0 - 2.0 * cw
        if self.plan.noiseless:
            llr = MSG_NOISELESS * x
        else:
            sigma2 = 1.0 / (2.0 * self.rate_tx * 10.0 ** (ebno_db / 10.0))
            y = x + math.sqrt(sigma2) * noise
            llr = 2.0 * y / sigma2
        llr[:, self.punctured] = 0.0
        llr[:, self.shortened] = LLR_SAT
        return info, llr


def run_sim(plan: SimPlan, progress=None) -> list[SimPoint]:
    link = _Link(plan)
    n_threads = resolve_threads(plan.threads)
    points = []
    for si, ebno in enumerate(plan.snr_db):
        t0 = time.perf_counter()
        frames = bit_err = frame_err = 0
        while frames < plan.max_frames and frame_err < plan.min_frame_errors:
            count = min(plan.batch, plan.max_frames - frames)
            info, llr = link.frames(si, ebno, frames, count)
            bits = _decode(link.decoder, llr, plan.max_iter, n_threads)
            errs = bits[:, link.unknown] != info[:, link.unknown]
            bit_err += int(errs.sum())
            frame_err += int(errs.any(axis=1).sum())
            frames += count
        pt = SimPoint(ebno, frames, bit_err, frame_err, link.unknown.size, time.perf_counter() - t0)
        points.append(pt)
        if progress is not None:
            progress(pt)
    return points


def _decode(decoder: Decoder, llr: np.ndarray, max_iter: int, n_threads: int) -> np.ndarray:
    if n_threads == 1 or llr.shape[0] < 2:
        return decoder.decode(llr, max_iter)[0]
    chunks = np.array_split(np.arange(llr.shape[0]), min(n_threads, llr.shape[0]))
    with ThreadPoolExecutor(n_threads) as pool:
        parts = list(pool.map(lambda idx: decoder.decode(llr[idx], max_iter)[0], chunks))
    return np.concatenate(parts)


CSV_FIELDS = ["ebno_db", "frames", "bit_errors", "frame_errors", "ber", "fer", "seconds"]


def to_csv(points: list[SimPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for p in points:
        w.writerow([p.ebno_db, p.frames, p.bit_errors, p.frame_errors,
                    f"{p.ber:.6e}", f"{p.fer:.6e}", f"{p.seconds:.3f}"])
    return buf.getvalue()
