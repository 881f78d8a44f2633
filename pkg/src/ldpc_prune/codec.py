"""Systematic encoding and sum-product decoding of lifted QC-LDPC codes."""

from __future__ import annotations

import numpy as np

from .protograph import BaseMatrix, BinaryMatrix, lift

LLR_SAT = 1e3
MSG_CLIP = 30.0
_TANH_CLIP = np.tanh(MSG_CLIP / 2)


class SingularParityError(ValueError):
    pass


def gf2_solve_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return X with A X = B over GF(2) for square, invertible A.

    Gauss-Jordan elimination on the augmented matrix, bit-packed per row.
    """
    a = np.asarray(a, dtype=np.uint8) & 1
    b = np.asarray(b, dtype=np.uint8) & 1
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise ValueError("shape mismatch")
    aug = np.packbits(np.hstack([a, b]).astype(bool), axis=1)
    for c in range(n):
        byte, bit = divmod(c, 8)
        mask = np.uint8(0x80 >> bit)
        col = (aug[:, byte] & mask) != 0
        cand = np.flatnonzero(col[c:])
        if cand.size == 0:
            raise SingularParityError(f"parity part is singular (no pivot in column {c})")
        piv = c + cand[0]
        if piv != c:
            aug[[c, piv]] = aug[[piv, c]]
            col[[c, piv]] = col[[piv, c]]
        col[c] = False
        rows = np.flatnonzero(col)
        if rows.size:
            aug[rows] ^= aug[c]
    full = np.unpackbits(aug, axis=1, count=n + b.shape[1])
    return full[:, n:]


class Encoder:
    """Systematic encoder: codeword = [info | parity], H c^T = 0.

    The parity part H_p of the lifted matrix is reduced once; afterwards
    parity = (H_p^-1 H_s) info, a dense GF(2) product per frame.
    """

    def __init__(self, h: BinaryMatrix, k_bits: int):
        self.h = h
        self.k_bits = k_bits
        dense = h.toarray()
        hs, hp = dense[:, :k_bits], dense[:, k_bits:]
        if hp.shape[0] != hp.shape[1]:
            raise SingularParityError(f"parity part is {hp.shape}, not square")
        self._gen = gf2_solve_matrix(hp, hs).astype(np.float32)

    @classmethod
    def from_base(cls, bm: BaseMatrix) -> "Encoder":
        return cls(lift(bm), bm.k * bm.z)

    def encode(self, info: np.ndarray) -> np.ndarray:
        u = np.asarray(info, dtype=np.uint8)
        single = u.ndim == 1
        u = np.atleast_2d(u)
        if u.shape[1] != self.k_bits:
            raise ValueError(f"expected {self.k_bits} information bits, got {u.shape[1]}")
        # float32 sums of 0/1 terms are exact below 2**24
        parity = (u.astype(np.float32) @ self._gen.T).astype(np.int64) & 1
        cw = np.hstack([u, parity.astype(np.uint8)])
        return cw[0] if single else cw


def encode(bm: BaseMatrix, info: np.ndarray) -> np.ndarray:
    return Encoder.from_base(bm).encode(info)


def _slots(major: np.ndarray, n_major: int) -> np.ndarray:
    """Group edge ids by ``major`` index into a padded (n_major, dmax) table (-1 pads)."""
    order = np.argsort(major, kind="stable")
    deg = np.bincount(major, minlength=n_major)
    dmax = int(deg.max())
    table = np.full((n_major, dmax), -1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(deg)[:-1]])
    pos = np.arange(major.size) - np.repeat(starts, deg)
    table[major[order], pos] = order
    return table


class Decoder:
    """Flooding sum-product decoder with the exact tanh check rule.

    Works on a batch of frames; each frame stops as soon as its hard
    decision satisfies every check.
    """

    def __init__(self, h: BinaryMatrix):
        self.h = h
        coo = h.csr.tocoo()
        self.rows = coo.row.astype(np.int64)
        self.cols = coo.col.astype(np.int64)
        self.n_checks, self.n_bits = h.shape
        self.row_slots = _slots(self.rows, self.n_checks)
        self.col_slots = _slots(self.cols, self.n_bits)
        self.row_pad = self.row_slots < 0
        self.col_pad = self.col_slots < 0
        # pad slots point at an extra always-neutral message column
        e = self.rows.size
        self.row_idx = np.where(self.row_pad, e, self.row_slots)
        self.col_idx = np.where(self.col_pad, e, self.col_slots)
        valid = ~self.row_pad
        self.edge_of_row_slot = self.row_slots[valid]
        self.row_slot_valid = valid

    def decode(self, llr: np.ndarray, max_iter: int = 100):
        """Return (bits, converged, iterations) for one frame or a (F, N) batch."""
        llr = np.asarray(llr, dtype=np.float64)
        single = llr.ndim == 1
        llr = np.atleast_2d(llr)
        if llr.shape[1] != self.n_bits:
            raise ValueError(f"expected {self.n_bits} LLRs, got {llr.shape[1]}")
        f = llr.shape[0]
        bits = (llr < 0).astype(np.uint8)
        converged = np.zeros(f, dtype=bool)
        iters = np.full(f, max_iter, dtype=np.int64)
        active = np.arange(f)
        e = self.rows.size
        ch = llr
        q = ch[:, self.cols]
        for it in range(1, max_iter + 1):
            r = self._check_update(q)
            # r carries an extra trailing zero column for padded slots
            total = ch + r[:, self.col_idx].sum(axis=2)
            hard = (total < 0).astype(np.uint8)
            hb = np.concatenate([hard[:, self.cols], np.zeros((hard.shape[0], 1), np.uint8)], axis=1)
            ok = ~(hb[:, self.row_idx].sum(axis=2) & 1).any(axis=1)
            if ok.any():
                done = active[ok]
                bits[done] = hard[ok]
                converged[done] = True
                iters[done] = it
                keep = ~ok
                active, ch, total, r, hard = active[keep], ch[keep], total[keep], r[keep], hard[keep]
                if active.size == 0:
                    break
            if it == max_iter:
                bits[active] = hard
                break
            q = total[:, self.cols] - r[:, :e]
        return (bits[0], bool(converged[0]), int(iters[0])) if single else (bits, converged, iters)

    def _check_update(self, q: np.ndarray) -> np.ndarray:
        f, e = q.shape
        t = np.tanh(np.clip(q, -MSG_CLIP, MSG_CLIP) / 2)
        t = np.concatenate([t, np.ones((f, 1))], axis=1)
        slots = t[:, self.row_idx]
        ones = np.ones((f, self.n_checks, 1))
        left = np.cumprod(np.concatenate([ones, slots[:, :, :-1]], axis=2), axis=2)
        right = np.cumprod(np.concatenate([ones, slots[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
        prod = np.clip(left * right, -_TANH_CLIP, _TANH_CLIP)
        out = np.zeros((f, e + 1))
        out[:, self.edge_of_row_slot] = 2 * np.arctanh(prod[:, self.row_slot_valid])
        return out


def decode_bp(h: BinaryMatrix, llr: np.ndarray, max_iter: int = 100):
    return Decoder(h).decode(llr, max_iter)
