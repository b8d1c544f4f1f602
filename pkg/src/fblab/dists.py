"""Finite distributions, joint distributions and their text file format.

File format::

    # comment
    dist <n>
    <n whitespace-separated entries>

or ``joint <|Y|> <|Z|>`` followed by ``|Y|*|Z|`` entries in row-major
(y-major) order. Entries are decimals or ``num/den`` rationals and are
parsed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import mpmath

from ._numeric import InputError, exact, is_exact

FLOAT_NORM_TOL = mpmath.mpf(10) ** -30


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None, token: str | None = None):
        where = f"line {line}: " if line is not None else ""
        tok = f" (token {token!r})" if token is not None else ""
        super().__init__(f"{where}{message}{tok}")
        self.line = line
        self.token = token


def _mass_is_one(total) -> bool:
    if is_exact(total):
        return total == 1
    return abs(total - 1) <= FLOAT_NORM_TOL


@dataclass(frozen=True)
class Dist:
    """Nonnegative weight vector; ``normalized`` is derived from the weights."""

    weights: tuple
    normalized: bool = field(init=False)

    def __post_init__(self):
        w = tuple(self.weights)
        for x in w:
            if x < 0:
                raise InputError(f"negative weight {x}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "normalized", bool(w) and _mass_is_one(sum(w)))

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    @property
    def total(self):
        return sum(self.weights)

    @classmethod
    def of(cls, values: Sequence) -> "Dist":
        return cls(tuple(v if isinstance(v, mpmath.mpf) else exact(v) for v in values))

    @classmethod
    def uniform(cls, m: int) -> "Dist":
        return cls((Fraction(1, m),) * m)


@dataclass(frozen=True)
class JointDist:
    """Matrix ``table[y][z]`` of nonnegative weights."""

    table: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.table)
        if not rows or not rows[0]:
            raise InputError("joint distribution needs at least one row and column")
        width = len(rows[0])
        for r in rows:
            if len(r) != width:
                raise InputError("ragged joint table")
            for x in r:
                if x < 0:
                    raise InputError(f"negative weight {x}")
        object.__setattr__(self, "table", rows)

    @classmethod
    def of(cls, rows) -> "JointDist":
        return cls(tuple(tuple(v if isinstance(v, mpmath.mpf) else exact(v) for v in r) for r in rows))

    @classmethod
    def from_flat(cls, flat: Sequence, ny: int, nz: int) -> "JointDist":
        if len(flat) != ny * nz:
            raise InputError(f"expected {ny * nz} entries, got {len(flat)}")
        return cls(tuple(tuple(flat[y * nz:(y + 1) * nz]) for y in range(ny)))

    @property
    def ny(self) -> int:
        return len(self.table)

    @property
    def nz(self) -> int:
        return len(self.table[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nz

    @property
    def total(self):
        return sum(self.flat())

    @property
    def normalized(self) -> bool:
        return _mass_is_one(self.total)

    def flat(self) -> tuple:
        return tuple(x for r in self.table for x in r)

    def z_marginal(self) -> tuple:
        return tuple(sum(self.table[y][z] for y in range(self.ny)) for z in range(self.nz))

    def y_marginal(self) -> tuple:
        return tuple(sum(r) for r in self.table)

    def reference(self, qz: Sequence) -> tuple:
        """Flattened unnormalized product ``1_Y x Q_Z``."""
        if len(qz) != self.nz:
            raise InputError("Q_Z length does not match |Z|")
        return tuple(qz) * self.ny

    def product(self, other: "JointDist") -> "JointDist":
        """Joint of two independent pairs, indexed (y1 y2, z1 z2) row-major."""
        return JointDist(tuple(
            tuple(a * b for a in ra for b in rb)
            for ra in self.table for rb in other.table
        ))

    def power(self, n: int) -> "JointDist":
        if n < 1:
            raise InputError("power needs n >= 1")
        out = self
        for _ in range(n - 1):
            out = out.product(self)
        return out


def parse_text(text: str):
    """Parse the ``dist``/``joint`` format into a Dist or JointDist."""
    header = None
    entries: list[tuple[Fraction, int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if header is None:
            kind = tokens[0]
            if kind not in ("dist", "joint"):
                raise ParseError("expected header 'dist <n>' or 'joint <|Y|> <|Z|>'", lineno, kind)
            want = 2 if kind == "dist" else 3
            if len(tokens) != want:
                raise ParseError(f"header '{kind}' takes {want - 1} size argument(s)", lineno, line)
            sizes = []
            for t in tokens[1:]:
                if not t.isdigit() or int(t) < 1:
                    raise ParseError("alphabet size must be a positive integer", lineno, t)
                sizes.append(int(t))
            header = (kind, sizes, lineno)
            continue
        for t in tokens:
            try:
                v = Fraction(t)
            except (ValueError, ZeroDivisionError):
                raise ParseError("not a decimal or num/den rational", lineno, t) from None
            if v < 0:
                raise ParseError("negative probability", lineno, t)
            entries.append((v, lineno, t))
    if header is None:
        raise ParseError("empty input: missing header")
    kind, sizes, hline = header
    want = sizes[0] if kind == "dist" else sizes[0] * sizes[1]
    if len(entries) != want:
        line = entries[want][1] if len(entries) > want else hline
        tok = entries[want][2] if len(entries) > want else None
        raise ParseError(f"expected {want} entries, found {len(entries)}", line, tok)
    values = [e[0] for e in entries]
    if kind == "dist":
        return Dist(tuple(values))
    return JointDist.from_flat(values, sizes[0], sizes[1])


def load(path) -> Dist | JointDist:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}") from None
    return parse_text(text)


def dump(obj: Dist | JointDist) -> str:
    def s(x):
        x = exact(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    if isinstance(obj, Dist):
        return f"dist {len(obj)}\n" + " ".join(s(x) for x in obj.weights) + "\n"
    lines = [f"joint {obj.ny} {obj.nz}"]
    lines += [" ".join(s(x) for x in row) for row in obj.table]
    return "\n".join(lines) + "\n"
