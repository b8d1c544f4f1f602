"""Channel simulation from linear privacy amplification, and lossy compression.

A channel ``W`` acting on ``X^n`` with binary outputs is simulated by hashing
the output: with ``g(y) = M y = (t, v)`` from an invertible extension, the
sender draws ``t`` from ``P(t | x, v)`` proportional to ``W^n(g^-1(t, v) | x)``
and the receiver outputs ``g^-1(t, v)``; ``v`` is shared randomness. The
simulated law is ``P_XY'(x, y) = P_XY(x, y) R_V(Hy) / P_{V|X}(Hy | x)``.

Everything below is exact: a dynamic program over coordinates carries, for
every source block ``x``, every syndrome ``v`` and every accumulated
distortion level ``w``, the integer mass ``sum W^n(y|x)`` over the coset.

Blocks ``x`` over an ``a``-ary alphabet have index ``sum_i x_i a^i`` and
outputs ``y`` are integers with bit ``i`` = coordinate ``i``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Sequence

import mpmath
import numpy as np

from ._numeric import GuardError, InputError, exact, h2, hp
from .dists import Dist, JointDist
from .gf2 import BitMatrix, coset_leader_weights, syndrome_table
from .hypotest import variational_distance
from .linear_pa import InvertibleExtension
from .parallel import rng

MAX_STATE_CELLS = 1 << 24
MAX_EXPLICIT_CELLS = 1 << 20
ERASED = 2


# -- instances ------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelInstance:
    """Source ``P_X`` and channel ``W[y][x]`` with ``|Y| = 2``."""

    px: Dist
    W: tuple

    def __post_init__(self):
        W = tuple(tuple(exact(v) for v in row) for row in self.W)
        px = self.px if isinstance(self.px, Dist) else Dist.of(self.px)
        px = Dist(tuple(exact(v) for v in px.weights))
        if len(W) != 2:
            raise InputError("the simulated channel must have a binary output alphabet")
        if any(len(r) != len(px) for r in W):
            raise InputError("channel table does not match the input alphabet")
        for x in range(len(px)):
            if W[0][x] < 0 or W[1][x] < 0 or W[0][x] + W[1][x] != 1:
                raise InputError(f"channel column {x} is not a distribution")
        if sum(px.weights) != 1:
            raise InputError("P_X must be normalized")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "px", px)

    @property
    def nx(self) -> int:
        return len(self.px)

    def joint(self) -> JointDist:
        """``P_XY`` laid out as ``table[y][x]`` (X plays the adversary role)."""
        return JointDist(tuple(tuple(self.W[y][x] * self.px[x] for x in range(self.nx)) for y in (0, 1)))

    def output_uniform(self) -> bool:
        return self.joint().y_marginal() == (Fraction(1, 2), Fraction(1, 2))

    @cached_property
    def w_den(self) -> int:
        return lcm(*(v.denominator for r in self.W for v in r))

    @cached_property
    def w_num(self) -> tuple:
        D = self.w_den
        return tuple(tuple(v.numerator * (D // v.denominator) for v in r) for r in self.W)

    def block_prob(self, xs: int, n: int) -> Fraction:
        p = Fraction(1)
        for i in range(n):
            p *= self.px[xs % self.nx]
            xs //= self.nx
        return p

    def block_symbols(self, xs: int, n: int) -> list[int]:
        out = []
        for _ in range(n):
            out.append(xs % self.nx)
            xs //= self.nx
        return out


def bsc(p) -> tuple:
    p = exact(p)
    return ((1 - p, p), (p, 1 - p))


def bsc_test_channel(dbar) -> ChannelInstance:
    """Uniform binary source through ``BSC(dbar)``."""
    return ChannelInstance(Dist.uniform(2), bsc(dbar))


def erasure_test_channel(e, dbar) -> ChannelInstance:
    """Source ``((1-e)/2, (1-e)/2, e)`` on ``{0, 1, ?}``.

    ``?`` maps to a uniform bit; known bits pass through ``BSC(dbar/(1-e))``.
    """
    e, dbar = exact(e), exact(dbar)
    if not 0 <= e < 1 or not 0 <= dbar <= (1 - e) / 2:
        raise InputError("need 0 <= e < 1 and 0 <= dbar <= (1-e)/2")
    q = dbar / (1 - e)
    half = Fraction(1, 2)
    W = ((1 - q, q, half), (q, 1 - q, half))
    return ChannelInstance(Dist(((1 - e) / 2, (1 - e) / 2, e)), W)


@dataclass(frozen=True)
class DistortionSpec:
    """Symbolwise ``d[x][x']`` in [0, 1]; ``dstar`` enables excess mode."""

    table: tuple
    dstar: Fraction | None = None

    def __post_init__(self):
        t = tuple(tuple(exact(v) for v in r) for r in self.table)
        if any(not 0 <= v <= 1 for r in t for v in r):
            raise InputError("symbolwise distortion must lie in [0, 1]")
        object.__setattr__(self, "table", t)
        if self.dstar is not None:
            object.__setattr__(self, "dstar", exact(self.dstar))

    @property
    def mode(self) -> str:
        return "average" if self.dstar is None else "excess"

    @cached_property
    def den(self) -> int:
        return lcm(*(v.denominator for r in self.table for v in r))

    @cached_property
    def num(self) -> tuple:
        D = self.den
        return tuple(tuple(v.numerator * (D // v.denominator) for v in r) for r in self.table)

    def block(self, xs: Sequence[int], y: int) -> Fraction:
        return sum((self.table[x][(y >> i) & 1] for i, x in enumerate(xs)), Fraction(0)) / len(xs)


def hamming_distortion() -> DistortionSpec:
    return DistortionSpec(((0, 1), (1, 0)))


def erasure_distortion() -> DistortionSpec:
    """Zero if the source symbol is erased or reproduced, one otherwise."""
    return DistortionSpec(((0, 1), (1, 0), (0, 0)))


# -- exact coset tables -----------------------------------------------------------


def coset_histogram(inst: ChannelInstance, n: int, H: BitMatrix, dspec: DistortionSpec | None = None) -> np.ndarray:
    """``T[x, v, w] = den_W^n * sum_{y: Hy=v, d(x,y) = w/(n den_d)} W^n(y|x)``.

    Without a distortion spec the last axis has length one.
    """
    k = H.rows
    if H.cols != n:
        raise InputError(f"H has {H.cols} columns, expected n={n}")
    dnum = dspec.num if dspec is not None else tuple((0, 0) for _ in range(inst.nx))
    if len(dnum) != inst.nx or any(len(r) != 2 for r in dnum):
        raise InputError("distortion table must be |X| x 2")
    wmax = n * max(max(r) for r in dnum)
    cells = inst.nx ** n * (1 << k) * (wmax + 1)
    if cells > MAX_STATE_CELLS:
        raise GuardError(f"exact coset table needs {cells} cells, limit {MAX_STATE_CELLS}")
    wn = inst.w_num
    # Every cell, and every distortion-weighted row sum, stays below den^n (wmax + 1) 2^k.
    dt = np.int64 if inst.w_den ** n * (wmax + 1) << k < (1 << 62) else object
    cols = H.col_ints()
    nv = 1 << k
    idx = np.arange(nv)
    T = np.zeros((1, nv, wmax + 1), dtype=dt)
    T[0, 0, 0] = 1
    for i in range(n):
        flipped = T[:, idx ^ cols[i], :]
        blocks = []
        for c in range(inst.nx):
            blk = np.zeros_like(T)
            for b, src in ((0, T), (1, flipped)):
                d = dnum[c][b]
                if wn[b][c]:
                    blk[:, :, d:] += src[:, :, :wmax + 1 - d] * wn[b][c]
            blocks.append(blk)
        T = np.concatenate(blocks, axis=0)
    return T


# -- protocol -------------------------------------------------------------------------


@dataclass
class SimProtocol:
    inst: ChannelInstance
    ext: InvertibleExtension
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.ext.n

    @property
    def m(self) -> int:
        return self.ext.m

    @property
    def r(self) -> int:
        return self.ext.k

    @property
    def rate(self) -> Fraction:
        return Fraction(self.m, self.n)

    @cached_property
    def coset_mass(self) -> np.ndarray:
        """``F[x, v] = den_W^n P_{V|X}(v | x)``."""
        return coset_histogram(self.inst, self.n, self.ext.H)[:, :, 0]

    def _cond_weights(self, xs: int) -> list[int]:
        """Integer ``den_W^n W^n(y | x)`` for every ``y``."""
        hit = self._cache.get(xs)
        if hit is None:
            sym = self.inst.block_symbols(xs, self.n)
            wn = self.inst.w_num
            hit = [1]
            for i, c in enumerate(sym):
                hit = hit + [w * wn[1][c] for w in hit]
                hit[: len(hit) // 2] = [w * wn[0][c] for w in hit[: len(hit) // 2]]
            self._cache[xs] = hit
        return hit

    def _encoder_cdf(self, xs: int, v: int) -> tuple:
        key = ("cdf", xs, v)
        if key in self._cache:
            return self._cache[key]
        w = self._cond_weights(xs)
        acc, cdf = 0, []
        for t in range(1 << self.m):
            acc += w[self.ext.g_inv(t, v)]
            cdf.append(acc)
        if acc == 0:
            raise InputError(f"W^n(.|x={xs}) vanishes on the whole coset v={v}")
        self._cache[key] = tuple(cdf)
        return self._cache[key]

    def encoder(self, xs: int, v: int) -> tuple:
        """``P(t | x, v)`` for ``t`` in ``[0, 2^m)``, exact."""
        cdf = self._encoder_cdf(xs, v)
        total = cdf[-1]
        prev = [0] + list(cdf[:-1])
        return tuple(Fraction(c - p, total) for c, p in zip(cdf, prev))

    def decoder(self, t: int, v: int) -> int:
        return self.ext.g_inv(t, v)

    def validate(self) -> dict:
        """Encoder columns sum to one and agree with the coset DP; decoder inverts g."""
        n, nx = self.n, self.inst.nx
        if nx ** n * (1 << n) > MAX_EXPLICIT_CELLS:
            raise GuardError("explicit encoder validation is limited to |X|^n 2^n <= 2^20")
        F = self.coset_mass
        cols_ok = True
        dp_ok = True
        for xs in range(nx ** n):
            for v in range(1 << self.r):
                enc = self.encoder(xs, v)
                cols_ok &= sum(enc) == 1
                dp_ok &= self._encoder_cdf(xs, v)[-1] == int(F[xs, v])
        dec_ok = all(self.decoder(*self.ext.g(y)) == y for y in range(1 << n))
        return {"encoder_normalized": cols_ok, "encoder_matches_coset_table": dp_ok, "decoder_inverts": dec_ok}


def build_protocol(inst: ChannelInstance, ext: InvertibleExtension) -> SimProtocol:
    proto = SimProtocol(inst, ext)
    F = proto.coset_mass
    zero = np.argwhere(F == 0)
    if len(zero):
        xs, v = (int(a) for a in zero[0])
        raise InputError(f"P_(V|X)(v={v} | x={xs}) = 0: W^n vanishes on a whole coset")
    return proto


def _block_probs(inst: ChannelInstance, n: int) -> list[Fraction]:
    probs = [Fraction(1)]
    for _ in range(n):
        probs = [p * q for q in inst.px.weights for p in probs]
    return probs


def pa_delta(proto: SimProtocol) -> Fraction:
    """``delta(P_XV, P_X x R_V)``: the PA security of ``H`` against ``X``."""
    F = proto.coset_mass
    nv = 1 << proto.r
    D = proto.inst.w_den ** proto.n
    px = _block_probs(proto.inst, proto.n)
    total = Fraction(0)
    for xs, p in enumerate(px):
        if p:
            total += p * Fraction(sum(abs(int(f) * nv - D) for f in F[xs]), nv * D)
    return total / 2


def simulated_joint(proto: SimProtocol) -> tuple[tuple, tuple]:
    """``(P_XY, P_XY')`` flattened over ``(x, y)``, summing over ``v`` and ``t``."""
    n, nx = proto.n, proto.inst.nx
    if nx ** n * (1 << n) > MAX_EXPLICIT_CELLS:
        raise GuardError("explicit simulated joint is limited to |X|^n 2^n <= 2^20")
    D = proto.inst.w_den ** n
    px = _block_probs(proto.inst, n)
    nv = 1 << proto.r
    P, Q = [], []
    for xs in range(nx ** n):
        w = proto._cond_weights(xs)
        out = [Fraction(0)] * (1 << n)
        for v in range(nv):
            for t, pt in enumerate(proto.encoder(xs, v)):
                out[proto.decoder(t, v)] += pt / nv
        P.extend(px[xs] * Fraction(wy, D) for wy in w)
        Q.extend(px[xs] * o for o in out)
    return tuple(P), tuple(Q)


def simulation_distance(proto: SimProtocol, explicit: bool | None = None) -> Fraction:
    """``delta(P_XY, P_XY')``.

    The explicit path builds ``P_XY'`` from the encoder; otherwise the
    closed form via the coset masses is used. Both are exact; the result is
    checked against the PA security ``delta(P_XV, P_X x R_V)``.
    """
    if explicit is None:
        explicit = proto.inst.nx ** proto.n * (1 << proto.n) <= (1 << 16)
    delta_pa = pa_delta(proto)
    if explicit:
        P, Q = simulated_joint(proto)
        d = variational_distance(P, Q).value
    else:
        d = delta_pa  # P_XY' reweights each coset, so the two distances coincide
    if d > delta_pa:
        raise AssertionError(f"simulation distance {d} exceeds the PA security {delta_pa}")
    return d


def _random_below(gen: np.random.Generator, total: int) -> int:
    """Uniform integer in ``[0, total)`` by exact rejection sampling."""
    bits = total.bit_length()
    nbytes = (bits + 7) // 8
    while True:
        r = int.from_bytes(gen.bytes(nbytes), "little") >> (8 * nbytes - bits)
        if r < total:
            return r


def sample_roundtrip(proto: SimProtocol, xs: int, seed: int, index: int = 0) -> tuple[int, int, int]:
    """Draw ``v`` uniform and ``t ~ P(t|x,v)``; return ``(v, t, y')``."""
    gen = rng(seed, index)
    v = int(gen.integers(0, 1 << proto.r))
    cdf = proto._encoder_cdf(xs, v)
    t = bisect_right(cdf, _random_below(gen, cdf[-1]))
    return v, t, proto.decoder(t, v)


def sample_roundtrips(proto: SimProtocol, xs: int, count: int, seed: int) -> list[int]:
    return [sample_roundtrip(proto, xs, seed, i)[2] for i in range(count)]


def simulated_conditional(proto: SimProtocol, xs: int) -> list[Fraction]:
    """Exact ``P_{Y'|X}(y | x)`` from the closed form."""
    w = proto._cond_weights(xs)
    F = proto.coset_mass
    syn = syndrome_table(proto.ext.H)
    nv = 1 << proto.r
    return [Fraction(wy, nv * int(F[xs, int(syn[y])])) for y, wy in enumerate(w)]


# -- lossy compression ----------------------------------------------------------------


DERAND_LEVELS = ("none", "bestv", "bestvt")


@dataclass(frozen=True)
class LossySchemeReport:
    n: int
    k: int
    rate: Fraction
    dbar: Fraction
    delta: Fraction
    randomized: Fraction
    best_v: tuple | None
    best_vt: tuple | None
    excess: dict | None
    checks: dict
    flags: tuple

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _channel_distortion(inst: ChannelInstance, dspec: DistortionSpec) -> Fraction:
    return sum(
        (inst.px[x] * inst.W[y][x] * dspec.table[x][y] for x in range(inst.nx) for y in (0, 1)),
        Fraction(0),
    )


def _coset_minimum(proto: SimProtocol, dspec: DistortionSpec, v: int) -> list[int]:
    """``min_{y : Hy = v} n den_d d(x, y)`` for every source block ``x``."""
    n, nx = proto.n, proto.inst.nx
    H = proto.ext.H
    syn = syndrome_table(H)
    if dspec.table == hamming_distortion().table and nx == 2:
        leaders = coset_leader_weights(H, syn)
        return [int(leaders[int(syn[xs]) ^ v]) for xs in range(1 << n)]
    if nx ** n * (1 << proto.m) > MAX_STATE_CELLS:
        raise GuardError("coset search exceeds the enumeration limit")
    coset = np.flatnonzero(syn == v)
    bits = (coset[:, None] >> np.arange(n)) & 1
    dn = np.array(dspec.num, dtype=np.int64)
    out = []
    for xs in range(nx ** n):
        sym = proto.inst.block_symbols(xs, n)
        cost = dn[np.array(sym)[None, :], bits].sum(axis=1)
        out.append(int(cost.min()))
    return out


def lossy_from_simulation(proto: SimProtocol, dspec: DistortionSpec,
                          derandomize: Sequence[str] = DERAND_LEVELS) -> LossySchemeReport:
    """Exact distortion of the simulation-based scheme and its derandomizations."""
    for lvl in derandomize:
        if lvl not in DERAND_LEVELS:
            raise InputError(f"unknown derandomization {lvl!r}; expected {DERAND_LEVELS}")
    inst, n, k = proto.inst, proto.n, proto.r
    T = coset_histogram(inst, n, proto.ext.H, dspec)
    F = T.sum(axis=2)
    levels = np.arange(T.shape[2])
    G = (T * levels).sum(axis=2)
    scale = n * dspec.den
    px = _block_probs(inst, n)
    nv = 1 << k
    per_v = [Fraction(0)] * nv
    for xs, p in enumerate(px):
        if p:
            for v in range(nv):
                per_v[v] += p * Fraction(int(G[xs, v]), int(F[xs, v]) * scale)
    randomized = sum(per_v, Fraction(0)) / nv
    delta = simulation_distance(proto)
    dbar = _channel_distortion(inst, dspec)
    checks = {
        "rate_identity": Fraction(proto.m, n) == 1 - Fraction(k, n),
        "average_within_dbar_plus_delta": randomized <= dbar + delta,
    }
    best_v = best_vt = None
    if "bestv" in derandomize or "bestvt" in derandomize:
        vstar = min(range(nv), key=lambda v: (per_v[v], v))
        best_v = (vstar, per_v[vstar])
        checks["bestv_not_worse"] = per_v[vstar] <= randomized
    if "bestvt" in derandomize:
        best = None
        for v in range(nv):
            mins = _coset_minimum(proto, dspec, v)
            val = sum((p * Fraction(mm, scale) for p, mm in zip(px, mins) if p), Fraction(0))
            if best is None or val < best[1]:
                best = (v, val)
        best_vt = best
        checks["bestvt_not_worse"] = best[1] <= best_v[1]
    excess = None
    if dspec.dstar is not None:
        cut = dspec.dstar * scale  # excess iff accumulated level > cut
        hi = levels > cut
        D = inst.w_den ** n
        sim = Fraction(0)
        chan = Fraction(0)
        for xs, p in enumerate(px):
            if not p:
                continue
            tail = T[xs][:, hi].sum(axis=1)
            chan += p * Fraction(int(tail.sum()), D)
            sim += p * sum((Fraction(int(tl), int(f)) for tl, f in zip(tail, F[xs])), Fraction(0)) / nv
        excess = {"dstar": dspec.dstar, "simulated": sim, "channel": chan}
        checks["excess_within_channel_plus_delta"] = sim <= chan + delta
    flags = () if inst.output_uniform() else ("non-uniform channel output: rate is not optimal without concatenation",)
    return LossySchemeReport(n, k, proto.rate, dbar, delta, randomized, best_v, best_vt, excess, checks, flags)


# -- rate-distortion references ---------------------------------------------------------


@dataclass(frozen=True)
class RDPoint:
    distortion: Fraction
    rate: object


def rd_hamming(dbar) -> RDPoint:
    d = exact(dbar)
    if not 0 <= d <= Fraction(1, 2):
        raise InputError("Hamming rate-distortion needs 0 <= dbar <= 1/2")
    if d == 0:
        return RDPoint(d, Fraction(1))
    if d == Fraction(1, 2):
        return RDPoint(d, Fraction(0))
    return RDPoint(d, 1 - h2(d))


def rd_erasure_quantization(e, dbar) -> RDPoint:
    """``(1-e)(1 - h2(dbar/(1-e)))`` for the erased-binary source."""
    e, d = exact(e), exact(dbar)
    if not 0 <= e <= 1:
        raise InputError("erasure probability must lie in [0, 1]")
    if not 0 <= d <= (1 - e) / 2:
        raise InputError("need 0 <= dbar <= (1-e)/2")
    if e == 1:
        return RDPoint(d, Fraction(0))
    inner = rd_hamming(d / (1 - e)).rate
    return RDPoint(d, (1 - e) * inner if isinstance(inner, Fraction) else hp(1 - e) * inner)


# -- erasure quantization with a dual code --------------------------------------------


EXTENDED_HAMMING_8_4 = BitMatrix.from_lists([
    [1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 1, 1, 1, 1, 0, 0],
    [0, 0, 0, 0, 1, 1, 1, 1],
    [0, 1, 0, 1, 0, 1, 0, 1],
])

MAX_QUANT_N = 16


@dataclass(frozen=True)
class QuantizationResult:
    index: int
    reconstruction: tuple
    distortion: int


def parse_erasure_block(text: str) -> tuple[int, ...]:
    table = {"0": 0, "1": 1, "?": ERASED}
    try:
        return tuple(table[c] for c in text.strip())
    except KeyError as exc:
        raise InputError(f"erasure block symbol {exc.args[0]!r} is not 0, 1 or ?") from None


def erasure_quantize_dual_code(source: Sequence[int], G: BitMatrix, offset: int = 0) -> QuantizationResult:
    """Nearest element of ``offset + span(G)`` on the non-erased positions.

    Searches all ``2^rows(G)`` messages; ties go to the smallest message.
    ``distortion`` counts mismatches on known positions.
    """
    n = G.cols
    if len(source) != n:
        raise InputError(f"source block has length {len(source)}, code length is {n}")
    if n > MAX_QUANT_N:
        raise GuardError(f"exhaustive quantization limited to n <= {MAX_QUANT_N}")
    if any(s not in (0, 1, ERASED) for s in source):
        raise InputError("source symbols must be 0, 1 or 2 (erased)")
    known = sum(1 << i for i, s in enumerate(source) if s != ERASED)
    target = sum(1 << i for i, s in enumerate(source) if s == 1)
    rows = G.row_ints()
    best = None
    for u in range(1 << len(rows)):
        cw = offset
        for j, r in enumerate(rows):
            if (u >> j) & 1:
                cw ^= r
        miss = bin((cw ^ target) & known).count("1")
        if best is None or miss < best[1]:
            best = (u, miss, cw)
            if miss == 0:
                break
    u, miss, cw = best
    return QuantizationResult(u, tuple((cw >> i) & 1 for i in range(n)), miss)
