"""Immutable bit-packed matrices over GF(2).

Storage is row-major in 64-bit words: column ``j`` of a row lives in word
``j // 64`` at bit ``j % 64`` (little-endian within the word), so a
serialized payload is portable across platforms. Algebra is done on rows
viewed as Python integers (bit ``j`` = column ``j``), which act as
arbitrary-length bitsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .._numeric import InputError

WORD = 64


def _pack(row: int, nwords: int) -> list[int]:
    return [(row >> (WORD * w)) & 0xFFFFFFFFFFFFFFFF for w in range(nwords)]


def _unpack(words) -> int:
    out = 0
    for w, x in enumerate(words):
        out |= int(x) << (WORD * w)
    return out


@dataclass(frozen=True, eq=False)
class BitMatrix:
    rows: int
    cols: int
    words: np.ndarray

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise InputError("matrix dimensions must be nonnegative")
        w = np.ascontiguousarray(self.words, dtype=np.uint64).reshape(self.rows, self.nwords)
        w.setflags(write=False)
        object.__setattr__(self, "words", w)
        object.__setattr__(self, "_ints", tuple(_unpack(r) for r in w))
        mask = (1 << self.cols) - 1
        if any(r & ~mask for r in self._ints):
            raise InputError("payload has bits beyond the last column")

    @property
    def nwords(self) -> int:
        return max(1, -(-self.cols // WORD))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_ints(cls, rows: Sequence[int], cols: int) -> "BitMatrix":
        nwords = max(1, -(-cols // WORD))
        data = np.array([_pack(int(r), nwords) for r in rows], dtype=np.uint64).reshape(len(rows), nwords)
        return cls(len(rows), cols, data)

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "BitMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        ints = []
        for r in rows:
            if len(r) != cols:
                raise InputError("ragged bit matrix")
            v = 0
            for j, b in enumerate(r):
                if b not in (0, 1):
                    raise InputError(f"entry {b!r} is not a bit")
                v |= b << j
            ints.append(v)
        return cls.from_ints(ints, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_ints([1 << i for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls.from_ints([0] * rows, cols)

    # -- views ------------------------------------------------------------

    def row_ints(self) -> tuple[int, ...]:
        return self._ints

    def col_ints(self) -> tuple[int, ...]:
        """Columns packed as integers with bit ``i`` = row ``i``."""
        return tuple(
            sum(((r >> j) & 1) << i for i, r in enumerate(self._ints)) for j in range(self.cols)
        )

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return (self._ints[i] >> j) & 1

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.cols)] for r in self._ints]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.shape == other.shape
            and self._ints == other._ints
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self._ints))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols}, {self.to_strings()})"

    def to_strings(self) -> list[str]:
        return ["".join(str((r >> j) & 1) for j in range(self.cols)) for r in self._ints]

    # -- algebra ----------------------------------------------------------

    def apply(self, y: int) -> int:
        """``H y`` with ``y`` and the result as integers (bit i = coordinate i)."""
        out = 0
        for i, r in enumerate(self._ints):
            out |= (bin(r & y).count("1") & 1) << i
        return out

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_ints(self.col_ints(), self.rows)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise InputError(f"shape mismatch {self.shape} @ {other.shape}")
        b = other.row_ints()
        out = []
        for r in self._ints:
            acc = 0
            j = 0
            while r:
                if r & 1:
                    acc ^= b[j]
                r >>= 1
                j += 1
            out.append(acc)
        return BitMatrix.from_ints(out, other.cols)

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise InputError("vstack needs equal column counts")
        return BitMatrix.from_ints(self._ints + other.row_ints(), self.cols)

    def take_rows(self, idx: Iterable[int]) -> "BitMatrix":
        return BitMatrix.from_ints([self._ints[i] for i in idx], self.cols)

    def is_zero(self) -> bool:
        return not any(self._ints)

    def rank(self) -> int:
        return len(rref(self)[1])

    def inverse(self) -> "BitMatrix":
        return inverse(self)


def rref(m: BitMatrix, right_to_left: bool = False) -> tuple[BitMatrix, tuple[int, ...]]:
    """Reduced row echelon form and pivot columns (in discovery order).

    With ``right_to_left`` the column scan starts at the highest index, so the
    pivot of each reduced row is its last nonzero column.
    """
    rows = list(m.row_ints())
    order = range(m.cols - 1, -1, -1) if right_to_left else range(m.cols)
    pivots = []
    r = 0
    for c in order:
        bit = 1 << c
        piv = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return BitMatrix.from_ints(rows, m.cols), tuple(pivots)


def inverse(m: BitMatrix) -> BitMatrix:
    """Gauss-Jordan inverse; raises InputError for singular matrices."""
    n = m.rows
    if m.cols != n:
        raise InputError("only square matrices have inverses")
    a = list(m.row_ints())
    b = [1 << i for i in range(n)]
    for c in range(n):
        bit = 1 << c
        piv = next((i for i in range(c, n) if a[i] & bit), None)
        if piv is None:
            raise InputError("matrix is singular over GF(2)")
        a[c], a[piv] = a[piv], a[c]
        b[c], b[piv] = b[piv], b[c]
        for i in range(n):
            if i != c and a[i] & bit:
                a[i] ^= a[c]
                b[i] ^= b[c]
    return BitMatrix.from_ints(b, n)


def solve_affine(m: BitMatrix, target: int) -> int | None:
    """Some ``x`` with ``m x = target``, or None if inconsistent."""
    # Augment each row with its target bit at position ``cols``.
    aug = [r | (((target >> i) & 1) << m.cols) for i, r in enumerate(m.row_ints())]
    red, piv = rref(BitMatrix.from_ints(aug, m.cols + 1))
    if m.cols in piv:
        return None
    x = 0
    for r, c in zip(red.row_ints(), piv):
        if (r >> m.cols) & 1:
            x |= 1 << c
    return x


# -- text format ----------------------------------------------------------


def parse_bitmatrix(text: str) -> BitMatrix:
    """``bitmatrix <rows> <cols>`` header, then one 0/1 string per row."""
    from ..dists import ParseError

    lines = [(i, l.split("#", 1)[0].strip()) for i, l in enumerate(text.splitlines(), start=1)]
    lines = [(i, l) for i, l in lines if l]
    if not lines:
        raise ParseError("empty input: missing header")
    hline, header = lines[0]
    tok = header.split()
    if len(tok) != 3 or tok[0] != "bitmatrix":
        raise ParseError("expected header 'bitmatrix <rows> <cols>'", hline, header)
    try:
        nr, nc = int(tok[1]), int(tok[2])
    except ValueError:
        raise ParseError("matrix size must be an integer", hline, header) from None
    body = lines[1:]
    if len(body) != nr:
        raise ParseError(f"expected {nr} rows, found {len(body)}", hline)
    rows = []
    for i, l in body:
        s = l.replace(" ", "")
        if len(s) != nc or set(s) - {"0", "1"}:
            raise ParseError(f"row must be {nc} characters of 0/1", i, l)
        rows.append([int(ch) for ch in s])
    return BitMatrix.from_lists(rows, nc)


def dump_bitmatrix(m: BitMatrix) -> str:
    return "\n".join([f"bitmatrix {m.rows} {m.cols}"] + m.to_strings()) + "\n"


def load_bitmatrix(path) -> BitMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_bitmatrix(text)
