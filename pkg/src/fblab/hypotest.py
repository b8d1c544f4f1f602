"""Exact Neyman-Pearson machinery on finite alphabets.

All functions are generic over the scalar type: feed Fractions for exact
results, mpf for high-precision floats. ``Q`` may be unnormalized (e.g. the
reference ``1_Y x P_Z`` has mass ``|Y|``), in which case beta can exceed 1.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from ._numeric import INF, InputError, is_exact, zero_like
from .dists import Dist, JointDist


def _vec(x) -> tuple:
    if isinstance(x, JointDist):
        return x.flat()
    if isinstance(x, Dist):
        return x.weights
    return tuple(x)


def _pair(P, Q) -> tuple[tuple, tuple]:
    p, q = _vec(P), _vec(Q)
    if len(p) != len(q):
        raise InputError(f"shape mismatch: {len(p)} vs {len(q)} outcomes")
    if isinstance(P, JointDist) and isinstance(Q, JointDist) and P.shape != Q.shape:
        raise InputError(f"shape mismatch: {P.shape} vs {Q.shape}")
    return p, q


def _check_nonneg(v, name):
    for x in v:
        if x < 0:
            raise InputError(f"{name} has a negative entry {x}")


class Distance(NamedTuple):
    value: object
    test: tuple


def variational_distance(P, Q) -> Distance:
    """Return half the L1 distance and the indicator test of ``P > Q``."""
    p, q = _pair(P, Q)
    value = sum((abs(a - b) for a, b in zip(p, q)), zero_like(p[0]) if p else 0) / 2
    test = tuple(1 if a > b else 0 for a, b in zip(p, q))
    return Distance(value, test)


def one_sided_delta(P, Q):
    """Positive-part mass ``sum max(P - Q, 0)``; Q may be unnormalized."""
    p, q = _pair(P, Q)
    _check_nonneg(p, "P")
    _check_nonneg(q, "Q")
    z = zero_like(p[0]) if p else 0
    return sum((a - b for a, b in zip(p, q) if a > b), z)


@dataclass(frozen=True)
class Atom:
    ratio: object  # P/Q, or INF when Q == 0 < P
    p: object
    q: object


@dataclass(frozen=True)
class AtomSpectrum:
    """Likelihood-ratio atoms, merged and sorted by strictly decreasing ratio."""

    atoms: tuple
    residual_q: object

    def __post_init__(self):
        cum_p, cum_q = [], []
        a = b = zero_like(self.residual_q)
        for atom in self.atoms:
            a = a + atom.p
            b = b + atom.q
            cum_p.append(a)
            cum_q.append(b)
        object.__setattr__(self, "cum_p", tuple(cum_p))
        object.__setattr__(self, "cum_q", tuple(cum_q))

    @property
    def total_p(self):
        return self.cum_p[-1] if self.cum_p else zero_like(self.residual_q)

    @property
    def total_q(self):
        return (self.cum_q[-1] if self.cum_q else 0) + self.residual_q

    def vertices(self) -> list[tuple]:
        z = zero_like(self.residual_q)
        return [(z, z)] + list(zip(self.cum_p, self.cum_q))

    def locate(self, alpha) -> tuple[int, object]:
        """Index of the boundary atom for ``alpha`` and the fraction of it taken.

        Returns ``(-1, 0)`` for ``alpha == 0``.
        """
        if alpha < 0 or alpha > self.total_p:
            raise InputError(f"alpha={alpha} outside [0, {self.total_p}]")
        if alpha == 0:
            return -1, zero_like(self.residual_q)
        j = bisect_left(self.cum_p, alpha)
        prev = self.cum_p[j - 1] if j else zero_like(alpha)
        return j, (alpha - prev) / self.atoms[j].p

    def beta(self, alpha):
        j, frac = self.locate(alpha)
        if j < 0:
            return zero_like(self.residual_q)
        prev_q = self.cum_q[j - 1] if j else zero_like(self.residual_q)
        return prev_q + frac * self.atoms[j].q


def atom_spectrum(P, Q) -> AtomSpectrum:
    """Merge outcomes by likelihood ratio ``P/Q`` (``INF`` where Q = 0 < P)."""
    p, q = _pair(P, Q)
    _check_nonneg(p, "P")
    _check_nonneg(q, "Q")
    zero = zero_like(p[0]) if p else zero_like(0)
    groups: dict = {}
    residual = zero
    for a, b in zip(p, q):
        if a == 0:
            residual += b
            continue
        r = INF if b == 0 else a / b
        acc = groups.get(r)
        groups[r] = (a, b) if acc is None else (acc[0] + a, acc[1] + b)
    order = sorted(groups, reverse=True)
    atoms = tuple(Atom(r, groups[r][0], groups[r][1]) for r in order)
    return AtomSpectrum(atoms, residual)


def _outcome_ratio(a, b):
    if a == 0:
        return None
    return INF if b == 0 else a / b


@dataclass(frozen=True)
class BetaCertificate:
    """Optimal test and dual pair ``(mu, S)`` for beta_alpha(P, Q)."""

    alpha: object
    beta: object
    mu: object
    S: tuple
    boundary_fraction: object
    test: tuple

    def dual_value(self):
        return self.mu * self.alpha - sum(self.S, zero_like(self.beta))

    def check(self, P, Q) -> bool:
        """Primal feasibility, dual feasibility and strong duality, exactly."""
        p, q = _pair(P, Q)
        if any(not (0 <= t <= 1) for t in self.test):
            return False
        z = zero_like(self.beta)
        if sum((t * a for t, a in zip(self.test, p)), z) != self.alpha:
            return False
        if sum((t * b for t, b in zip(self.test, q)), z) != self.beta:
            return False
        if self.mu < 0 or any(s < 0 for s in self.S):
            return False
        if any(self.mu * a - s > b for a, b, s in zip(p, q, self.S)):
            return False
        return self.dual_value() == self.beta


def beta_alpha(P, Q, alpha, spectrum: AtomSpectrum | None = None) -> BetaCertificate:
    """Minimal ``<L, Q>`` over tests with ``<L, P> >= alpha``, with certificates."""
    p, q = _pair(P, Q)
    spec = spectrum if spectrum is not None else atom_spectrum(p, q)
    j, frac = spec.locate(alpha)
    beta = spec.beta(alpha)
    zero = zero_like(beta)
    if j < 0:
        return BetaCertificate(alpha, beta, zero, (zero,) * len(p), zero, (zero,) * len(p))
    cut = spec.atoms[j].ratio
    test = []
    for a, b in zip(p, q):
        r = _outcome_ratio(a, b)
        if r is None or r < cut:
            test.append(zero)
        elif r > cut:
            test.append(zero + 1)
        else:
            test.append(frac)
    if cut == INF:
        mu = zero
        S = (zero,) * len(p)
    else:
        mu = 1 / cut
        S = tuple(max(mu * a - b, zero) for a, b in zip(p, q))
    return BetaCertificate(alpha, beta, mu, S, frac, tuple(test))


def e_gamma(P, Q, gamma):
    """``sum over {P >= gamma Q}`` of ``P - gamma Q``."""
    if gamma < 0:
        raise InputError("gamma must be nonnegative")
    p, q = _pair(P, Q)
    z = zero_like(p[0]) if p else 0
    return sum((a - gamma * b for a, b in zip(p, q) if a >= gamma * b), z)


def e_gamma_spectrum(spec: AtomSpectrum, gamma):
    z = zero_like(spec.residual_q)
    total = z
    for atom in spec.atoms:
        if atom.ratio < gamma:
            break
        total += atom.p - gamma * atom.q
    return total


def testing_region_vertices(P, Q) -> list[tuple]:
    return atom_spectrum(P, Q).vertices()


def beta_upper_bound(P, Q, alpha):
    """``alpha / gamma*`` with gamma* the largest vertex ratio whose tail holds alpha."""
    spec = atom_spectrum(P, Q)
    if alpha > spec.total_p:
        raise InputError(f"no feasible gamma: alpha={alpha} exceeds P mass {spec.total_p}")
    j, _ = spec.locate(alpha)
    if j < 0:
        return zero_like(spec.residual_q)
    gamma = spec.atoms[j].ratio
    if gamma == INF:
        return zero_like(spec.residual_q)
    return alpha / gamma


def sandwich_check(P, Q, alpha) -> tuple:
    """Lower and upper bounds on beta_alpha from alpha and the variational distance."""
    d = variational_distance(P, Q).value
    return alpha - d, alpha * (1 - (1 - alpha) * d)


def apply_stochastic_map(W: Sequence[Sequence], P):
    """``W @ P`` for a column-stochastic table ``W[out][in]``."""
    p = _vec(P)
    rows = [tuple(r) for r in W]
    if not rows or any(len(r) != len(p) for r in rows):
        raise InputError("stochastic map shape does not match the input distribution")
    for x in range(len(p)):
        col = sum(r[x] for r in rows)
        if any(r[x] < 0 for r in rows):
            raise InputError(f"column {x} has a negative entry")
        if is_exact(col):
            if col != 1:
                raise InputError(f"column {x} sums to {col}, not 1")
        elif abs(col - 1) > 1e-30:
            raise InputError(f"column {x} is not normalized")
    out = tuple(sum((r[x] * p[x] for x in range(len(p))), zero_like(p[0])) for r in rows)
    return Dist(out)
