"""Privacy amplification with linear hashes over GF(2).

Hashes are Toeplitz matrices ``T[i][j] = s[i - j + n - 1]`` built from
``n + k - 1`` diagonal bits ``s``; the family of all such matrices is exactly
two-universal. A member is identified by the integer whose bit ``d`` is
``s[d]``.

Block conventions: ``y`` in ``{0,1}^n`` is an integer whose bit ``i`` is
coordinate ``i``; a block ``z^n`` over an ``r``-ary alphabet has index
``sum_i z_i r^i``. The symbolwise joint ``P_YZ`` must have ``|Y| = 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable

import mpmath
import numpy as np

from ._numeric import GuardError, InputError, exact, hp
from .dists import JointDist
from .gf2 import BitMatrix, inverse, rref
from .hypotest import atom_spectrum, variational_distance
from .parallel import pmap, rng

MAX_FAMILY_BITS = 24
MAX_EXACT_N = 12
MAX_EXACT_CELLS = 1 << 24


# -- Toeplitz family --------------------------------------------------------


@dataclass(frozen=True)
class ToeplitzFamily:
    n: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise InputError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")

    @property
    def seed_bits(self) -> int:
        return self.n + self.k - 1

    @property
    def size(self) -> int:
        return 1 << self.seed_bits

    def member(self, s: int) -> BitMatrix:
        if not 0 <= s < self.size:
            raise InputError(f"member index {s} outside [0, 2^{self.seed_bits})")
        n, k = self.n, self.k
        rows = [
            sum(((s >> (i - j + n - 1)) & 1) << j for j in range(n)) for i in range(k)
        ]
        return BitMatrix.from_ints(rows, n)

    def members(self) -> Iterable[tuple[int, BitMatrix]]:
        if self.seed_bits > MAX_FAMILY_BITS:
            raise GuardError(
                f"exhaustive family needs n+k-1 <= {MAX_FAMILY_BITS}, got {self.seed_bits}"
            )
        for s in range(self.size):
            yield s, self.member(s)

    def sample_index(self, seed: int, index: int = 0) -> int:
        bits = rng(seed, index).integers(0, 2, size=self.seed_bits)
        return sum(int(b) << d for d, b in enumerate(bits))


def sample_toeplitz(n: int, k: int, seed: int) -> BitMatrix:
    fam = ToeplitzFamily(n, k)
    return fam.member(fam.sample_index(seed))


# -- invertible completion -----------------------------------------------------


@dataclass(frozen=True)
class InvertibleExtension:
    """``M`` stacks the completion block on top of ``H``; ``g(y) = M y``.

    ``M y`` splits as ``t`` (low ``n-k`` bits) and ``v = H y`` (high ``k``
    bits). ``generator`` is the top ``n-k`` rows of ``(M^-1)^T``.
    """

    H: BitMatrix
    M: BitMatrix
    Minv: BitMatrix
    generator: BitMatrix

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def k(self) -> int:
        return self.H.rows

    @property
    def m(self) -> int:
        return self.n - self.k

    def g(self, y: int) -> tuple[int, int]:
        w = self.M.apply(y)
        return w & ((1 << self.m) - 1), w >> self.m

    def g_inv(self, t: int, v: int) -> int:
        return self.Minv.apply(t | (v << self.m))

    def certify(self) -> dict:
        n, k = self.n, self.k
        checks = {
            "bottom_rows_equal_H": self.M.row_ints()[n - k:] == self.H.row_ints(),
            "inverse": (self.M @ self.Minv) == BitMatrix.identity(n),
            "parity_checks_generator": (
                self.k == 0 or self.m == 0 or (self.H @ self.generator.transpose()).is_zero()
            ),
            "generator_rank": self.generator.rank() == self.m,
        }
        return checks


def extend_to_invertible(H: BitMatrix) -> InvertibleExtension:
    """Complete a full-row-rank ``H`` with standard-basis rows.

    Pivots are found scanning columns from the right; each non-pivot column
    ``c`` contributes the unit row ``e_c`` to the top block.
    """
    k, n = H.shape
    if k > n:
        raise InputError("H has more rows than columns")
    _, piv = rref(H, right_to_left=True)
    if len(piv) < k:
        raise InputError(f"H is rank deficient: rank {len(piv)} < {k} rows")
    free = [c for c in range(n) if c not in set(piv)]
    top = BitMatrix.from_ints([1 << c for c in free], n)
    M = top.vstack(H)
    Minv = inverse(M)
    gen = Minv.transpose().take_rows(range(n - k))
    ext = InvertibleExtension(H, M, Minv, gen)
    bad = [name for name, ok in ext.certify().items() if not ok]
    if bad:
        raise AssertionError(f"invertible extension failed checks: {bad}")
    return ext


# -- exact output law ----------------------------------------------------------


@dataclass(frozen=True)
class IntegerJoint:
    """Symbolwise joint with a common denominator: ``P(y, z) = num[y][z] / den``."""

    num: tuple
    den: int

    @classmethod
    def from_joint(cls, joint: JointDist) -> "IntegerJoint":
        if joint.ny != 2:
            raise InputError("linear hashing needs a binary Y alphabet")
        vals = [exact(x) for x in joint.flat()]
        if sum(vals) != 1:
            raise InputError("P_YZ must be normalized")
        den = lcm(*(v.denominator for v in vals))
        nums = [v.numerator * (den // v.denominator) for v in vals]
        nz = joint.nz
        return cls((tuple(nums[:nz]), tuple(nums[nz:])), den)

    @property
    def nz(self) -> int:
        return len(self.num[0])


def _dtype_for(ij: IntegerJoint, n: int, k: int):
    # |2^k F - N_z| summed over all cells stays below 2^(k+1) den^n.
    return np.int64 if (ij.den ** n) << (k + 2) < (1 << 62) else object


def _check_exact_size(n: int, k: int, nz: int):
    if n > MAX_EXACT_N:
        raise GuardError(f"exact evaluation limited to n <= {MAX_EXACT_N}, got n={n}")
    if nz ** n * (1 << k) > MAX_EXACT_CELLS:
        raise GuardError(f"|Z|^n * 2^k = {nz ** n * (1 << k)} cells exceeds {MAX_EXACT_CELLS}")


def output_numerators(ij: IntegerJoint, n: int, H: BitMatrix) -> np.ndarray:
    """``F[z, v] = den^n * P_{V Z^n}(v, z)`` by a DP over coordinates.

    After coordinate ``i`` the state is the partial syndrome of ``y_0..y_i``;
    flipping ``y_i`` XORs column ``i`` of ``H`` into it.
    """
    k = H.rows
    if H.cols != n:
        raise InputError(f"H has {H.cols} columns, expected n={n}")
    _check_exact_size(n, k, ij.nz)
    dt = _dtype_for(ij, n, k)
    cols = H.col_ints()
    nv = 1 << k
    F = np.zeros((1, nv), dtype=dt)
    F[0, 0] = 1
    idx = np.arange(nv)
    for i in range(n):
        flipped = F[:, idx ^ cols[i]]
        F = np.concatenate([F * ij.num[0][c] + flipped * ij.num[1][c] for c in range(ij.nz)], axis=0)
    return F


def exact_output_joint(joint: JointDist, n: int, H: BitMatrix) -> JointDist:
    """``P_{V Z^n}`` as a JointDist with ``|V| = 2^k`` rows and ``|Z|^n`` columns."""
    ij = IntegerJoint.from_joint(joint)
    F = output_numerators(ij, n, H)
    D = ij.den ** n
    return JointDist(tuple(
        tuple(Fraction(int(F[z, v]), D) for z in range(F.shape[0])) for v in range(F.shape[1])
    ))


def achieved_delta(pvz: JointDist):
    """``delta(P_VZ, R_V x P_Z)``."""
    nv = pvz.ny
    ref = tuple(q / nv for q in pvz.reference(pvz.z_marginal()))
    return variational_distance(pvz.flat(), ref).value


def delta_from_numerators(F: np.ndarray, den_n: int) -> Fraction:
    """Same quantity as :func:`achieved_delta`, in integer arithmetic."""
    nv = F.shape[1]
    nzsum = F.sum(axis=1, keepdims=True)
    total = int(np.abs(F * nv - nzsum).sum())
    return Fraction(total, 2 * nv * den_n)


def expected_delta_bound(eta, v_size: int, beta) -> mpmath.mpf:
    """``eta + sqrt(eta |V| / beta) / 2``."""
    if beta <= 0:
        raise InputError("beta must be positive")
    if not 0 < eta < 1:
        raise InputError("eta must lie in (0, 1)")
    return hp(eta) + mpmath.sqrt(hp(eta) * v_size / hp(beta)) / 2


def within_expected_bound(value, eta, v_size: int, beta) -> bool:
    """Exact test of ``value <= eta + sqrt(eta |V| / beta) / 2``."""
    value, eta, beta = exact(value), exact(eta), exact(beta)
    if beta <= 0:
        raise InputError("beta must be positive")
    gap = value - eta
    return gap <= 0 or 4 * gap * gap * beta <= eta * v_size


def lhl_reference(joint: JointDist, n: int, qz=None) -> tuple[tuple, tuple]:
    """``(P_{YZ}^n, 1_{Y^n} x Q_Z^n)`` flattened in the block conventions above."""
    ij = IntegerJoint.from_joint(joint)
    _check_exact_size(n, 0, ij.nz * 2)
    nz = ij.nz
    qz = joint.z_marginal() if qz is None else tuple(exact(q) for q in qz)
    P, Q = [], []
    for y in range(1 << n):
        for zi in range(nz ** n):
            p = q = Fraction(1)
            rest = zi
            for i in range(n):
                z = rest % nz
                rest //= nz
                p *= joint.table[(y >> i) & 1][z]
                q *= qz[z]
            P.append(p)
            Q.append(q)
    return tuple(P), tuple(Q)


def best_lhl_eta(joint: JointDist, n: int, k: int, grid: int = 1000, qz=None) -> dict:
    """Minimize the expected-Delta bound over spectrum vertices and an eta grid."""
    P, Q = lhl_reference(joint, n, qz)
    spec = atom_spectrum(P, Q)
    etas = {a for a in spec.cum_p if 0 < a < 1}
    etas |= {Fraction(i, grid) for i in range(1, grid)}
    rows = []
    for eta in sorted(etas):
        beta = spec.beta(eta)
        if beta > 0:
            rows.append((expected_delta_bound(eta, 1 << k, beta), eta, beta))
    bound, eta, beta = min(rows, key=lambda r: r[0])
    return {"eta": eta, "beta": beta, "bound": bound, "candidates": [(e, b) for _, e, b in rows]}


# -- family statistics ----------------------------------------------------------


@dataclass(frozen=True)
class FamilyStats:
    n: int
    k: int
    mode: str
    count: int
    mean: Fraction
    minimum: Fraction
    argmin: int
    std_error: mpmath.mpf | None = None

    def descriptor(self) -> dict:
        return {"kind": "toeplitz", "n": self.n, "k": self.k, "member": self.argmin}


def _member_deltas(args) -> list[tuple[int, Fraction]]:
    ij, n, k, members = args
    fam = ToeplitzFamily(n, k)
    D = ij.den ** n
    return [(s, delta_from_numerators(output_numerators(ij, n, fam.member(s)), D)) for s in members]


def _chunks(xs: list, size: int) -> list[list]:
    return [xs[i:i + size] for i in range(0, len(xs), size)]


def family_delta_stats(joint: JointDist, n: int, k: int, mode: str = "exhaustive",
                       count: int = 1000, seed: int = 0, workers: int | None = None) -> FamilyStats:
    """Mean and minimum of Delta over the Toeplitz family (or a seeded sample).

    The minimizer is the concrete extractor handed to downstream protocols;
    ties go to the smallest member index.
    """
    fam = ToeplitzFamily(n, k)
    ij = IntegerJoint.from_joint(joint)
    _check_exact_size(n, k, ij.nz)
    if mode == "exhaustive":
        if fam.seed_bits > MAX_FAMILY_BITS:
            raise GuardError(f"exhaustive family needs n+k-1 <= {MAX_FAMILY_BITS}")
        members = list(range(fam.size))
    elif mode == "sampled":
        if count < 1:
            raise InputError("sample count must be positive")
        members = [fam.sample_index(seed, i) for i in range(count)]
    else:
        raise InputError(f"unknown mode {mode!r}; expected 'exhaustive' or 'sampled'")
    results = []
    for part in pmap(_member_deltas, [(ij, n, k, c) for c in _chunks(members, 64)], workers=workers):
        results.extend(part)
    deltas = [d for _, d in results]
    mean = sum(deltas, Fraction(0)) / len(deltas)
    best = min(results, key=lambda r: (r[1], r[0]))
    se = None
    if mode == "sampled" and len(deltas) > 1:
        var = sum((d - mean) ** 2 for d in deltas) / (len(deltas) - 1)
        se = mpmath.sqrt(hp(var) / len(deltas))
    return FamilyStats(n, k, mode, len(deltas), mean, min(deltas), best[0], se)


# -- descriptors ------------------------------------------------------------------


def protocol_descriptor(ext: InvertibleExtension, member: int | None = None, seed: int | None = None) -> dict:
    return {
        "n": ext.n,
        "k": ext.k,
        "member": member,
        "seed": seed,
        "H": ext.H.to_strings(),
        "M": ext.M.to_strings(),
        "generator": ext.generator.to_strings(),
    }


def descriptor_json(desc: dict) -> str:
    return json.dumps(desc, sort_keys=True, indent=2)


def extension_from_descriptor(desc: dict) -> InvertibleExtension:
    rows = desc["H"]
    n = desc["n"]
    H = BitMatrix.from_lists([[int(c) for c in r] for r in rows], n)
    ext = extend_to_invertible(H)
    if "M" in desc and ext.M.to_strings() != list(desc["M"]):
        raise InputError("descriptor M does not match the completion of H")
    return ext
