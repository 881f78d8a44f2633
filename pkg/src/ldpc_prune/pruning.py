"""Shortening/puncturing patterns over base-matrix columns.

A pattern lists shortened columns and punctured columns in priority order.
All column indices are 1-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .protograph import BaseMatrix, erase_columns


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PruningPattern:
    shorten: tuple[int, ...] = ()
    puncture: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shorten", tuple(int(c) for c in self.shorten))
        object.__setattr__(self, "puncture", tuple(int(c) for c in self.puncture))

    @property
    def alpha(self) -> int:
        return len(self.shorten)

    @property
    def beta(self) -> int:
        return len(self.puncture)

    def columns(self) -> set[int]:
        return set(self.shorten) | set(self.puncture)

    def to_json(self) -> str:
        return json.dumps({"shorten": list(self.shorten), "puncture": list(self.puncture)})

    @classmethod
    def from_dict(cls, d: dict) -> "PruningPattern":
        try:
            return cls(d.get("shorten", []), d.get("puncture", []))
        except (TypeError, ValueError) as exc:
            raise PatternError(f"bad pattern object: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "PruningPattern":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "PruningPattern":
        return cls.from_json(Path(path).read_text())

    def __str__(self):
        s = ",".join(map(str, self.shorten)) or "-"
        p = ",".join(map(str, self.puncture)) or "-"
        return f"{{{s}; {p}}}"


def load_pattern(path: str | Path) -> PruningPattern:
    """Load a pattern file, falling back to the bundled ``data/patterns`` fixtures."""
    p = Path(path)
    if p.is_file():
        return PruningPattern.load(p)
    name = p.name if p.suffix else p.name + ".json"
    res = resources.files("ldpc_prune") / "data" / "patterns" / name
    if not res.is_file():
        raise FileNotFoundError(f"no such pattern file: {path}")
    return PruningPattern.from_json(res.read_text())


def parse_index_list(text: str | None) -> tuple[int, ...]:
    """Parse ``"1,2,8,10"`` into a tuple; empty or None gives ()."""
    if not text:
        return ()
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def validate(pattern: PruningPattern, bm: BaseMatrix) -> None:
    """Raise :class:`PatternError` unless ``pattern`` is legal for ``bm``."""
    for c in pattern.shorten + pattern.puncture:
        if not 1 <= c <= bm.n:
            raise PatternError(f"column {c} outside [1, {bm.n}]")
    if len(set(pattern.shorten)) != pattern.alpha:
        raise PatternError("repeated column in shorten list")
    if len(set(pattern.puncture)) != pattern.beta:
        raise PatternError("repeated column in puncture list")
    both = set(pattern.shorten) & set(pattern.puncture)
    if both:
        raise PatternError(f"column {min(both)} is both shortened and punctured")
    parity = [c for c in pattern.shorten if c > bm.k]
    if parity:
        raise PatternError(f"column {parity[0]} is a parity column and cannot be shortened")
    if pattern.beta >= bm.m:
        raise PatternError(f"puncturing {pattern.beta} columns needs beta < m = {bm.m}")


@dataclass(frozen=True)
class PrunedBase:
    """A base matrix after shortening, with punctured columns marked.

    ``punctured`` holds 1-based indices into ``base`` (the erased matrix),
    ``original`` maps each remaining column back to its index in the mother
    matrix.
    """

    base: BaseMatrix
    punctured: frozenset[int]
    original: tuple[int, ...]
    n_tx: int
    k_info: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k_info, self.n_tx)


def apply(pattern: PruningPattern, bm: BaseMatrix) -> PrunedBase:
    validate(pattern, bm)
    erased = erase_columns(bm, pattern.shorten)
    original = tuple(j for j in range(1, bm.n + 1) if j not in set(pattern.shorten))
    new_index = {orig: i + 1 for i, orig in enumerate(original)}
    punct = frozenset(new_index[c] for c in pattern.puncture)
    return PrunedBase(
        base=erased,
        punctured=punct,
        original=original,
        n_tx=bm.n - pattern.alpha - pattern.beta,
        k_info=bm.k - pattern.alpha,
    )


def pruned_rate(n: int, k: int, alpha: int, beta: int) -> Fraction:
    """(k - alpha) / (n - alpha - beta) as an exact fraction."""
    if alpha < 0 or beta < 0 or alpha > k:
        raise PatternError(f"need 0 <= alpha <= k and beta >= 0, got alpha={alpha}, beta={beta}")
    if n - alpha - beta <= 0:
        raise PatternError("no transmitted columns left")
    return Fraction(k - alpha, n - alpha - beta)


def sub_pattern(pattern: PruningPattern, alpha: int, beta: int) -> PruningPattern:
    if not (0 <= alpha <= pattern.alpha and 0 <= beta <= pattern.beta):
        raise PatternError(
            f"prefix ({alpha}; {beta}) exceeds pattern lengths ({pattern.alpha}; {pattern.beta})"
        )
    return PruningPattern(pattern.shorten[:alpha], pattern.puncture[:beta])


@dataclass(frozen=True)
class BitSchedule:
    """Bit-level pruning of a lifted code.

    Partially pruned columns lose their first ``r`` bits (positions
    ``0..r-1`` of the column's Z-block). A column whose remainder is exactly
    Z is listed as fully pruned, so ``0 <= r < Z`` always.
    """

    z: int
    n_base: int
    k_base: int
    full_shorten: tuple[int, ...]
    partial_shorten: tuple[int, int] | None
    full_puncture: tuple[int, ...]
    partial_puncture: tuple[int, int] | None
    n_s: int
    n_p: int
    alpha: int = field(default=0)
    beta: int = field(default=0)

    @property
    def n_tx(self) -> int:
        return self.n_base * self.z - self.n_s - self.n_p

    @property
    def rate_tx(self) -> Fraction:
        return Fraction(self.k_base * self.z - self.n_s, self.n_tx)

    def shortened_bits(self) -> np.ndarray:
        return _bit_positions(self.full_shorten, self.partial_shorten, self.z)

    def punctured_bits(self) -> np.ndarray:
        return _bit_positions(self.full_puncture, self.partial_puncture, self.z)


def _bit_positions(full, partial, z) -> np.ndarray:
    parts = [np.arange((c - 1) * z, c * z) for c in full]
    if partial is not None:
        c, r = partial
        parts.append(np.arange((c - 1) * z, (c - 1) * z + r))
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts).astype(np.int64)


def _split(cols: Sequence[int], nbits: int, z: int, what: str):
    count = math.ceil(nbits / z)
    if count > len(cols):
        raise PatternError(
            f"{nbits} {what} bits need {count} columns but the pattern lists {len(cols)}"
        )
    if count == 0:
        return (), None, 0
    rem = nbits - (count - 1) * z
    if rem == z:
        return tuple(cols[:count]), None, count
    return tuple(cols[: count - 1]), (cols[count - 1], rem), count


def bit_schedule(pattern: PruningPattern, bm: BaseMatrix, n_s: int, n_p: int) -> BitSchedule:
    """Spread ``n_s`` shortened and ``n_p`` punctured bits over the pattern.

    alpha = ceil(n_s / Z) columns are used; the first alpha - 1 are pruned
    completely and the remaining n_s - (alpha - 1) Z bits come from the
    alpha-th listed column (likewise for puncturing).
    """
    if n_s < 0 or n_p < 0:
        raise PatternError("bit counts must be non-negative")
    z = bm.z
    fs, ps, alpha = _split(pattern.shorten, n_s, z, "shortened")
    fp, pp, beta = _split(pattern.puncture, n_p, z, "punctured")
    sched = BitSchedule(z, bm.n, bm.k, fs, ps, fp, pp, n_s, n_p, alpha, beta)
    if sched.n_tx <= 0:
        raise PatternError("nothing left to transmit")
    return sched
