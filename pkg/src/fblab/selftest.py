"""Seeded property suite: equivalences, E_gamma identities, sandwiches, DPI.

Used by ``fblab selftest`` and by the test-suite; every check is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .dists import JointDist
from .hypotest import (
    apply_stochastic_map,
    atom_spectrum,
    beta_alpha,
    beta_upper_bound,
    e_gamma,
    sandwich_check,
    variational_distance,
)
from .pabounds import PAInstance, equivalence_suite
from .parallel import rng

EPSILONS = (Fraction(3, 10), Fraction(1, 10), Fraction(1, 100))
ALPHA_GRID = tuple(Fraction(i, 20) for i in range(21))


def random_joint(seed: int, index: int, max_size: int = 6, zero_prob: float = 0.2) -> JointDist:
    """Rational joint with ``|Y|, |Z| <= max_size`` and some zero cells."""
    g = rng(seed, index)
    ny, nz = (int(v) for v in g.integers(1, max_size + 1, size=2))
    w = [int(v) for v in g.integers(1, 20, size=ny * nz)]
    zeros = g.random(ny * nz) < zero_prob
    w = [0 if z else v for v, z in zip(w, zeros)]
    if not any(w):
        w[0] = 1
    total = sum(w)
    return JointDist.from_flat([Fraction(v, total) for v in w], ny, nz)


def random_channel(seed: int, index: int, n_in: int, n_out: int) -> tuple:
    g = rng(seed, index, 1)
    cols = []
    for _ in range(n_in):
        w = [int(v) for v in g.integers(0, 10, size=n_out)]
        if not any(w):
            w[0] = 1
        cols.append([Fraction(v, sum(w)) for v in w])
    return tuple(tuple(cols[x][y] for x in range(n_in)) for y in range(n_out))


@dataclass
class Tally:
    passed: int = 0
    failed: list = field(default_factory=list)

    def record(self, ok: bool, what):
        if ok:
            self.passed += 1
        else:
            self.failed.append(what)

    @property
    def ok(self) -> bool:
        return not self.failed


def check_equivalences(joints, epsilons=EPSILONS) -> Tally:
    t = Tally()
    for i, j in enumerate(joints):
        for eps in epsilons:
            rep = equivalence_suite(PAInstance(j, eps))
            for name, ok in rep.checks.items():
                t.record(ok, (i, str(eps), name))
    return t


def check_egamma_identity(joints) -> Tally:
    """``E_gamma = alpha(gamma) - gamma beta_{alpha(gamma)}`` at every vertex; ``E_1 = delta``."""
    t = Tally()
    for i, j in enumerate(joints):
        P = j.flat()
        Q = j.reference(j.z_marginal())
        Qn = tuple(q / j.ny for q in Q)
        spec = atom_spectrum(P, Q)
        for a, atom in zip(spec.cum_p, spec.atoms):
            if atom.ratio == float("inf"):
                continue
            gamma = atom.ratio
            alpha_g = sum((p for p, q in zip(P, Q) if p >= gamma * q), Fraction(0))
            t.record(e_gamma(P, Q, gamma) == alpha_g - gamma * spec.beta(alpha_g), (i, "vertex", gamma))
        t.record(e_gamma(P, Qn, 1) == variational_distance(P, Qn).value, (i, "E1"))
    return t


def check_sandwich(joints, grid=ALPHA_GRID) -> Tally:
    """Variational-distance sandwich and the ``alpha / gamma*`` upper bound."""
    t = Tally()
    for i, j in enumerate(joints):
        P = j.flat()
        Qn = tuple(q / j.ny for q in j.reference(j.z_marginal()))
        spec = atom_spectrum(P, Qn)
        for a in grid:
            b = spec.beta(a)
            lo, hi = sandwich_check(P, Qn, a)
            t.record(lo <= b <= hi, (i, "sandwich", a))
            t.record(b <= beta_upper_bound(P, Qn, a), (i, "ratio_bound", a))
            cert = beta_alpha(P, Qn, a, spec)
            t.record(cert.check(P, Qn), (i, "certificate", a))
    return t


def check_dpi(joints, seed: int = 0, grid=ALPHA_GRID) -> Tally:
    """``beta_alpha`` cannot decrease under a common stochastic map."""
    t = Tally()
    for i, j in enumerate(joints):
        P = j.flat()
        Qn = tuple(q / j.ny for q in j.reference(j.z_marginal()))
        W = random_channel(seed, i, len(P), 3)
        WP, WQ = apply_stochastic_map(W, P), apply_stochastic_map(W, Qn)
        s0, s1 = atom_spectrum(P, Qn), atom_spectrum(WP, WQ)
        for a in grid:
            t.record(s1.beta(a) >= s0.beta(a), (i, "dpi", a))
        t.record(variational_distance(WP, WQ).value <= variational_distance(P, Qn).value, (i, "dpi_tv"))
    return t


def run_selftest(count: int = 100, seed: int = 0) -> dict:
    joints = [random_joint(seed, i) for i in range(count)]
    return {
        "equivalences": check_equivalences(joints),
        "egamma_identity": check_egamma_identity(joints),
        "sandwich_and_ratio_bound": check_sandwich(joints),
        "data_processing": check_dpi(joints, seed),
    }
