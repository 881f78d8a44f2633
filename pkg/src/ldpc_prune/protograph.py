"""Base matrices (protographs) of quasi-cyclic LDPC codes.

A base matrix is an m x n array of shift values in {-1, 0, ..., Z-1}.
Lifting replaces -1 with the Z x Z zero block and a shift h >= 0 with the
identity matrix cyclically right-shifted h times.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp


class BaseMatrixError(ValueError):
    """Raised for malformed or degenerate base matrices."""


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """An m x n base matrix with lifting factor ``z``.

    ``entries`` is stored as a read-only int array. Columns are addressed
    1-based everywhere outside this class.
    """

    entries: np.ndarray
    z: int

    def __post_init__(self):
        h = np.array(self.entries, dtype=np.int64, copy=True)
        if h.ndim != 2 or h.size == 0:
            raise BaseMatrixError("base matrix must be a non-empty 2-D array")
        if not isinstance(self.z, (int, np.integer)) or self.z < 1:
            raise BaseMatrixError(f"lifting factor must be a positive integer, got {self.z!r}")
        bad = (h < -1) | (h > self.z - 1)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise BaseMatrixError(
                f"entry {h[i, j]} at row {i + 1}, column {j + 1} outside [-1, {self.z - 1}]"
            )
        support = h >= 0
        empty_rows = np.flatnonzero(~support.any(axis=1))
        if empty_rows.size:
            raise BaseMatrixError(f"row {empty_rows[0] + 1} has no non-negative entry")
        empty_cols = np.flatnonzero(~support.any(axis=0))
        if empty_cols.size:
            raise BaseMatrixError(f"column {empty_cols[0] + 1} has no non-negative entry")
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "z", int(self.z))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    @property
    def support(self) -> np.ndarray:
        """Boolean m x n protograph adjacency (True where an edge exists)."""
        return self.entries >= 0

    def column_degrees(self) -> np.ndarray:
        return self.support.sum(axis=0)

    def row_degrees(self) -> np.ndarray:
        return self.support.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return self.z == other.z and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.z, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"BaseMatrix(m={self.m}, n={self.n}, z={self.z})"


def parse_base_matrix(text: str | io.TextIOBase) -> BaseMatrix:
    """Parse the ``n m Z`` header format; ``#`` lines are comments."""
    if not isinstance(text, str):
        text = text.read()
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    if not lines:
        raise BaseMatrixError("empty base-matrix file")
    header = lines[0].split()
    if len(header) != 3:
        raise BaseMatrixError(f"header must be 'n m Z', got {lines[0]!r}")
    try:
        n, m, z = (int(tok) for tok in header)
    except ValueError:
        raise BaseMatrixError(f"non-integer header {lines[0]!r}") from None
    if n < 1 or m < 1 or z < 1:
        raise BaseMatrixError(f"header values must be positive, got {lines[0]!r}")
    body = lines[1:]
    if len(body) != m:
        raise BaseMatrixError(f"expected {m} matrix rows, found {len(body)}")
    rows = []
    for i, line in enumerate(body, start=1):
        try:
            row = [int(tok) for tok in line.split()]
        except ValueError:
            raise BaseMatrixError(f"non-integer entry in row {i}") from None
        if len(row) != n:
            raise BaseMatrixError(f"row {i} has {len(row)} entries, expected {n}")
        rows.append(row)
    if n <= m:
        raise BaseMatrixError(f"need n > m, got n={n}, m={m}")
    return BaseMatrix(np.array(rows, dtype=np.int64), z)


def format_base_matrix(bm: BaseMatrix, comments: Iterable[str] = ()) -> str:
    width = max(3, len(str(bm.z - 1)) + 1)
    out = [f"# {c}" for c in comments]
    out.append(f"{bm.n} {bm.m} {bm.z}")
    for row in bm.entries:
        out.append(" ".join(f"{int(v):{width}d}" for v in row))
    return "\n".join(out) + "\n"


def load_base_matrix(path: str | Path) -> BaseMatrix:
    """Read a base matrix from disk, falling back to the bundled data files.

    ``data/11n_z81_r12.bm`` and ``11n_z81_r12.bm`` both resolve to the
    bundled copy when no such file exists relative to the working directory.
    """
    p = Path(path)
    if p.is_file():
        return parse_base_matrix(p.read_text())
    return parse_base_matrix(bundled_text(p.name))


def bundled_text(name: str) -> str:
    res = resources.files("ldpc_prune") / "data" / name
    if not res.is_file():
        raise FileNotFoundError(f"no such base-matrix file: {name}")
    return res.read_text()


def bundled_names() -> list[str]:
    root = resources.files("ldpc_prune") / "data"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".bm"))


def rescale(bm: BaseMatrix, z: int, z_master: int | None = None) -> BaseMatrix:
    """Scale shift values to a new lifting factor with ``floor(h * z / z_master)``.

    This is the 802.16e convention for deriving the shifts of a smaller
    expansion from the Z=96 master matrix. The support is unchanged.
    """
    z_master = bm.z if z_master is None else z_master
    h = bm.entries
    scaled = np.where(h >= 0, (h * z) // z_master, -1)
    return BaseMatrix(scaled, z)


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    """A lifted mZ x nZ parity-check matrix over GF(2).

    Holds the same data in CSR (row iteration) and CSC (column access) form.
    """

    csr: sp.csr_matrix
    z: int

    def __post_init__(self):
        if self.csr.shape[0] == 0 or self.csr.shape[1] == 0:
            raise ValueError("empty parity-check matrix")
        csr = sp.csr_matrix(self.csr, dtype=np.uint8)
        csr.sort_indices()
        object.__setattr__(self, "csr", csr)
        object.__setattr__(self, "csc", csr.tocsc())

    @property
    def shape(self) -> tuple[int, int]:
        return self.csr.shape

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def row(self, i: int) -> np.ndarray:
        """0-based column indices of the ones in row ``i``."""
        s, e = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[s:e]

    def col(self, j: int) -> np.ndarray:
        s, e = self.csc.indptr[j], self.csc.indptr[j + 1]
        return self.csc.indices[s:e]

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """H x^T over GF(2); ``bits`` may be a single word or a (F, N) batch."""
        x = np.asarray(bits, dtype=np.int64)
        return (self.csr @ x.T).T % 2


def lift(bm: BaseMatrix) -> BinaryMatrix:
    """Expand each base entry into a Z x Z zero block or circulant permutation.

    Inside the block for entry h, row r has its one at column (r + h) mod Z.
    """
    z = bm.z
    bi, bj = np.nonzero(bm.support)
    shifts = bm.entries[bi, bj]
    r = np.arange(z)
    rows = (bi[:, None] * z + r[None, :]).ravel()
    cols = (bj[:, None] * z + (r[None, :] + shifts[:, None]) % z).ravel()
    data = np.ones(rows.size, dtype=np.uint8)
    h = sp.csr_matrix((data, (rows, cols)), shape=(bm.m * z, bm.n * z))
    return BinaryMatrix(h, z)


def erase_columns(bm: BaseMatrix, cols: Iterable[int]) -> BaseMatrix:
    """Remove the given 1-based columns, keeping the others in order."""
    cols = set(int(c) for c in cols)
    bad = [c for c in cols if not 1 <= c <= bm.n]
    if bad:
        raise BaseMatrixError(f"column index {min(bad)} outside [1, {bm.n}]")
    keep = [j for j in range(bm.n) if j + 1 not in cols]
    h = bm.entries[:, keep]
    dead = np.flatnonzero(~(h >= 0).any(axis=1))
    if dead.size:
        raise BaseMatrixError(
            f"erasing columns {sorted(cols)} leaves check row {dead[0] + 1} with degree 0"
        )
    return BaseMatrix(h, bm.z)


def export_alist(h: BinaryMatrix) -> str:
    """MacKay alist text, neighbour lists 1-based and zero padded."""
    n_rows, n_cols = h.shape
    col_deg = np.diff(h.csc.indptr)
    row_deg = np.diff(h.csr.indptr)
    out = [
        f"{n_cols} {n_rows}",
        f"{col_deg.max()} {row_deg.max()}",
        " ".join(map(str, col_deg)),
        " ".join(map(str, row_deg)),
    ]
    dv, dc = int(col_deg.max()), int(row_deg.max())
    for j in range(n_cols):
        nb = list(h.col(j) + 1) + [0] * (dv - col_deg[j])
        out.append(" ".join(map(str, nb)))
    for i in range(n_rows):
        nb = list(h.row(i) + 1) + [0] * (dc - row_deg[i])
        out.append(" ".join(map(str, nb)))
    return "\n".join(out) + "\n"


def parse_alist(text: str) -> BinaryMatrix:
    """Inverse of :func:`export_alist` (lifting factor recorded as 1)."""
    tok = [int(t) for t in text.split()]
    n_cols, n_rows, dv, dc = tok[:4]
    pos = 4 + n_cols + n_rows
    rows, cols = [], []
    for j in range(n_cols):
        for r in tok[pos : pos + dv]:
            if r:
                rows.append(r - 1)
                cols.append(j)
        pos += dv
    data = np.ones(len(rows), dtype=np.uint8)
    return BinaryMatrix(sp.csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols)), 1)
