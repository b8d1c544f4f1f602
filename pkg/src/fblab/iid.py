"""Theorem-1 bounds for i.i.d. uniform-input BSC instances at large blocklength.

For ``Y`` uniform and ``Z = Y xor N`` with ``N ~ Bern(p)``, every outcome in
``{0,1}^n x {0,1}^n`` with ``k`` disagreements has the same likelihood ratio
against ``1_Y x P_Z``, so the atom spectrum collapses to ``n + 1`` binomial
shells. Shell masses are kept as exact integers over the common denominator
``den(p)^n``; high-precision floats are used only to *select* candidates,
never to report a bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import mpmath

from ._numeric import HIPREC_BITS, InputError, exact, h2, hp, log2, mpf_to_fraction, normal_quantile
from .parallel import pmap

SELECT_BITS = 256


@dataclass(frozen=True)
class BSCInstance:
    p: Fraction
    n: int
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", exact(self.p))
        object.__setattr__(self, "epsilon", exact(self.epsilon))
        if not 0 < self.p < Fraction(1, 2):
            raise InputError(f"crossover probability must lie in (0, 1/2), got {self.p}")
        if self.n < 1:
            raise InputError("blocklength must be at least 1")
        if not 0 < self.epsilon < 1:
            raise InputError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class ShellSpectrum:
    """Shell ``k`` holds all pairs at Hamming distance ``k``.

    ``p_num[k] / denom`` is its P-mass and ``q_mass[k] = C(n, k)`` its mass
    under ``1_{Y^n} x R_{Z^n}``.
    """

    n: int
    p: Fraction
    denom: int
    counts: tuple
    p_num: tuple
    q_mass: tuple

    def p_mass(self, k: int) -> Fraction:
        return Fraction(self.p_num[k], self.denom)

    def ratio(self, k: int) -> Fraction:
        """Likelihood ratio against the unnormalized reference."""
        return Fraction(self.p_num[k], self.denom * self.q_mass[k])

    @property
    def cum_p_num(self) -> tuple:
        return _cumsum(self.p_num)

    @property
    def cum_q(self) -> tuple:
        return _cumsum(self.q_mass)


def _cumsum(xs) -> tuple:
    out, acc = [], 0
    for x in xs:
        acc += x
        out.append(acc)
    return tuple(out)


def build_shells(p, n: int, reference: str = "marginal") -> ShellSpectrum:
    """Exact binomial shells; for this symmetric instance both references coincide."""
    if reference not in ("marginal", "uniform"):
        raise InputError(f"unknown reference {reference!r}")
    p = exact(p)
    if not 0 < p < Fraction(1, 2) or n < 1:
        raise InputError("need 0 < p < 1/2 and n >= 1")
    a, m = p.numerator, p.denominator
    b = m - a
    counts = [1]
    nums = [b ** n]
    for k in range(n):
        counts.append(counts[-1] * (n - k) // (k + 1))
        nums.append(nums[-1] * (n - k) * a // ((k + 1) * b))
    return ShellSpectrum(n, p, m ** n, tuple(counts), tuple(nums), tuple(counts))


def beta_alpha_iid(spec: ShellSpectrum, alpha) -> Fraction:
    """Exact beta_alpha(P^n, 1_{Y^n} x R_{Z^n}) by a greedy prefix over shells."""
    alpha = exact(alpha)
    if not 0 <= alpha <= 1:
        raise InputError("alpha must lie in [0, 1]")
    target = alpha * spec.denom
    acc_p = 0
    acc_q = 0
    for k in range(spec.n + 1):
        nxt = acc_p + spec.p_num[k]
        if nxt >= target:
            return acc_q + (target - acc_p) * Fraction(spec.q_mass[k], spec.p_num[k])
        acc_p, acc_q = nxt, acc_q + spec.q_mass[k]
    return Fraction(acc_q)


def _to_mpf(num: int, den: int) -> mpmath.mpf:
    return mpmath.mpf(num) / den


def converse_k_iid(inst: BSCInstance, spec: ShellSpectrum | None = None) -> tuple[Fraction, Fraction]:
    """Exact ``min_eta beta_{eps+eta}/eta`` over shell vertices; returns (K, eta*)."""
    spec = spec or build_shells(inst.p, inst.n)
    D = spec.denom
    en, ed = inst.epsilon.numerator, inst.epsilon.denominator
    cands = []
    with mpmath.workprec(SELECT_BITS):
        for A, B in zip(spec.cum_p_num, spec.cum_q):
            gap = A * ed - en * D  # (alpha - eps) * D * ed
            if gap <= 0:
                continue
            num, den = B * D * ed, gap
            cands.append((_to_mpf(num, den), num, den, gap))
        vmin = min(c[0] for c in cands)
        tol = vmin * mpmath.mpf(2) ** (-SELECT_BITS + 32)
    close = [c for c in cands if c[0] - vmin <= tol]
    best = min(close, key=lambda c: Fraction(c[1], c[2]))
    return Fraction(best[1], best[2]), Fraction(best[3], D * ed)


def achievability_k_iid(inst: BSCInstance, spec: ShellSpectrum | None = None) -> tuple[int, Fraction]:
    """Exact floor of the achievability objective with uniform Q_Z; returns (K, eta*).

    On each shell segment ``beta = a + b alpha`` the objective
    ``4 (eps - alpha)^2 beta / alpha`` is unimodal with stationary point
    ``(-a + sqrt(a^2 - 8 a b eps)) / (4 b)``.
    """
    spec = spec or build_shells(inst.p, inst.n)
    eps = inst.epsilon
    D = spec.denom
    bits = max(HIPREC_BITS, D.bit_length() + eps.denominator.bit_length() + inst.n + 128)
    best = None
    with mpmath.workprec(bits):
        e = hp(eps)
        Dh = mpmath.mpf(D)
        lo_p, lo_q = 0, 0
        for k in range(spec.n + 1):
            if lo_p * eps.denominator >= eps.numerator * D:
                break
            b = mpmath.mpf(spec.q_mass[k]) * Dh / spec.p_num[k]
            lo_a = mpmath.mpf(lo_p) / Dh
            a = lo_q - b * lo_a
            seg_hi = min(mpmath.mpf(lo_p + spec.p_num[k]) / Dh, e)
            if lo_p == 0:
                cands = [(None, 4 * e * e * b)]
            else:
                cands = [(Fraction(lo_p, D), 4 * (e - lo_a) ** 2 * (a + b * lo_a) / lo_a)]
            x = (-a + mpmath.sqrt(a * a - 8 * a * b * e)) / (4 * b)
            if lo_a < x < seg_hi:
                cands.append((x, 4 * (e - x) ** 2 * (a + b * x) / x))
            for alpha, g in cands:
                if best is None or g > best[1]:
                    best = (alpha, g, k, lo_p, lo_q)
            lo_p += spec.p_num[k]
            lo_q += spec.q_mass[k]
    alpha, _, k, lo_p, lo_q = best
    slope = Fraction(spec.q_mass[k] * D, spec.p_num[k])
    if alpha is None:
        alpha = Fraction(0)
        g = 4 * eps * eps * slope
    else:
        alpha = exact(alpha)
        g = 4 * (eps - alpha) ** 2 * (lo_q + slope * (alpha - Fraction(lo_p, D))) / alpha
    return max(int(g), 1), eps - alpha


def converse_rate(inst: BSCInstance) -> mpmath.mpf:
    K, _ = converse_k_iid(inst)
    return log2(K) / inst.n


def achievability_rate(inst: BSCInstance) -> mpmath.mpf:
    K, _ = achievability_k_iid(inst)
    return log2(K) / inst.n


def dispersion(p) -> mpmath.mpf:
    p = hp(exact(p))
    return p * (1 - p) * mpmath.log((1 - p) / p, 2) ** 2


def normal_approx_rate(inst: BSCInstance) -> mpmath.mpf:
    """``h2(p) + sqrt(V/n) * Phi^{-1}(eps)``."""
    p = exact(inst.p)
    return h2(p) + mpmath.sqrt(dispersion(p) / inst.n) * normal_quantile(inst.epsilon)


@dataclass(frozen=True)
class SweepRow:
    n: int
    converse_rate: mpmath.mpf
    achievability_rate: mpmath.mpf
    normal_approx_rate: mpmath.mpf


def sweep_row(p, epsilon, n: int) -> SweepRow:
    inst = BSCInstance(exact(p), n, exact(epsilon))
    spec = build_shells(inst.p, n)
    kc, _ = converse_k_iid(inst, spec)
    ka, _ = achievability_k_iid(inst, spec)
    return SweepRow(n, log2(kc) / n, log2(ka) / n, normal_approx_rate(inst))


def _row_task(args):
    return sweep_row(*args)


def sweep(p, epsilon, n_list: Iterable[int], workers: int | None = None) -> Iterator[SweepRow]:
    """Rows in ``n_list`` order, yielded as they complete in that order."""
    ns = list(n_list)
    if not ns:
        raise InputError("empty blocklength list")
    p, epsilon = exact(p), exact(epsilon)
    yield from pmap(_row_task, [(p, epsilon, n) for n in ns], workers=workers)


CSV_HEADER = "n,converse_rate,achievability_rate,normal_approx_rate"
