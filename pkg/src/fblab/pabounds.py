"""One-shot privacy amplification bounds for a known joint ``P_YZ``.

The converse is ``min_eta beta_{eps+eta}(P_YZ, 1_Y x P_Z) / eta`` and the
achievability bound is ``max_eta floor(4 eta^2/(eps-eta) beta_{eps-eta}(P_YZ,
1_Y x Q_Z))``. Both are evaluated exactly by walking the vertices of the
testing region; the smoothed min-entropy quantities and the E_gamma form of
the converse are provided so the equivalences can be checked as executable
identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from ._numeric import INF, InputError, exact, hp, is_exact, log2, mpf_to_fraction, zero_like
from .dists import JointDist
from .hypotest import AtomSpectrum, atom_spectrum, e_gamma, e_gamma_spectrum

QZ_POLICIES = ("marginal", "uniform")


@dataclass(frozen=True)
class PAInstance:
    joint: JointDist
    epsilon: object

    def __post_init__(self):
        if not self.joint.normalized:
            raise InputError("P_YZ must be normalized")

    @property
    def pz(self) -> tuple:
        return self.joint.z_marginal()

    def reference(self, qz=None) -> tuple:
        return self.joint.reference(self.pz if qz is None else qz)


@dataclass(frozen=True)
class BoundReport:
    kind: str
    value: object
    witness: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MinEntropyValue:
    lam: object
    witness_T: tuple | None = None

    @property
    def h_min(self) -> mpmath.mpf:
        return -log2(self.lam)


def floor_int(x) -> int:
    if is_exact(x):
        return math.floor(x)
    return int(mpmath.floor(x))


def _check_eps(eps, allow_zero=False):
    lo_ok = eps >= 0 if allow_zero else eps > 0
    if not (lo_ok and eps < 1):
        raise InputError(f"epsilon={eps} must lie in {'[0' if allow_zero else '(0'}, 1)")


def _resolve_qz(inst: PAInstance, q_policy) -> tuple:
    if isinstance(q_policy, str):
        if q_policy == "marginal":
            qz = inst.pz
        elif q_policy == "uniform":
            nz = inst.joint.nz
            one = zero_like(inst.joint.table[0][0]) + 1
            qz = (one / nz,) * nz
        else:
            raise InputError(f"unknown Q_Z policy {q_policy!r}; expected {QZ_POLICIES} or a distribution")
    else:
        qz = tuple(q_policy)
        if len(qz) != inst.joint.nz:
            raise InputError("explicit Q_Z has the wrong length")
    # Only symbols Z actually takes need positive reference mass; a zero
    # column of P_YZ contributes nothing to the spectrum.
    if any(q < 0 or (q == 0 and pz > 0) for q, pz in zip(qz, inst.pz)):
        raise InputError("Q_Z must be positive wherever P_Z is")
    return qz


def converse_spectrum(inst: PAInstance) -> AtomSpectrum:
    return atom_spectrum(inst.joint.flat(), inst.reference())


def converse_k(inst: PAInstance, spectrum: AtomSpectrum | None = None) -> BoundReport:
    """Upper bound on the largest extractable alphabet size ``K``.

    The objective ``beta_{eps+eta}/eta`` is monotone on every linear piece of
    beta, so only the testing-region vertices beyond ``eps`` are candidates.
    """
    eps = inst.epsilon
    _check_eps(eps)
    spec = spectrum if spectrum is not None else converse_spectrum(inst)
    best = None
    for j, (a, b) in enumerate(zip(spec.cum_p, spec.cum_q)):
        if a <= eps:
            continue
        eta = a - eps
        val = b / eta
        if best is None or val < best[0]:
            best = (val, eta, j)
    val, eta, j = best
    return BoundReport("converseK", val, {"eta": eta, "vertex": j + 1, "alpha": eps + eta})


def _segment_argmax(a, b, eps):
    """Stationary point of ``4 (eps-x)^2 (a + b x)/x`` on x > 0 (a <= 0 < b)."""
    disc = a * a - 8 * a * b * eps
    if is_exact(a) and is_exact(b) and is_exact(eps):
        bits = max(mpmath.mp.prec, 4 * max(_bitlen(a), _bitlen(b), _bitlen(eps)) + 128)
        with mpmath.workprec(bits):
            root = mpmath.sqrt(hp(disc))
            return mpf_to_fraction((hp(-a) + root) / (4 * hp(b)))
    return (-a + mpmath.sqrt(disc)) / (4 * b)


def _bitlen(x) -> int:
    x = exact(x)
    return max(x.numerator.bit_length(), x.denominator.bit_length())


def _achievability_objective(spec: AtomSpectrum, eps, alpha):
    return 4 * (eps - alpha) ** 2 * spec.beta(alpha) / alpha


def achievability_candidates(spec: AtomSpectrum, eps) -> list[tuple]:
    """(alpha, value) pairs covering the maximum of the achievability objective.

    ``alpha = eps - eta`` ranges over [0, eps); alpha = 0 stands for the limit
    eta -> eps, where the objective tends to ``4 eps^2 / r_max``.
    """
    out = []
    zero = zero_like(spec.residual_q)
    lo_a = zero
    lo_b = zero
    for j, atom in enumerate(spec.atoms):
        if lo_a >= eps:
            break
        hi_a = spec.cum_p[j]
        if atom.ratio == INF:
            lo_a, lo_b = hi_a, spec.cum_q[j]
            continue
        slope = atom.q / atom.p
        icpt = lo_b - slope * lo_a
        seg_hi = min(hi_a, eps)
        if lo_a == 0:
            out.append((zero, 4 * eps * eps * slope))
        else:
            out.append((lo_a, _achievability_objective(spec, eps, lo_a)))
        x = _segment_argmax(icpt, slope, eps)
        if lo_a < x < seg_hi:
            out.append((x, 4 * (eps - x) ** 2 * (icpt + slope * x) / x))
        lo_a, lo_b = hi_a, spec.cum_q[j]
    return out


def achievability_k(inst: PAInstance, q_policy="marginal") -> BoundReport:
    """Constructible alphabet size from two-universal hashing, at least 1.

    The real-valued objective is maximized exactly per linear piece of beta
    (closed-form stationary point), then floored; the floor is monotone so
    ``max floor = floor max``.
    """
    eps = inst.epsilon
    _check_eps(eps)
    qz = _resolve_qz(inst, q_policy)
    spec = atom_spectrum(inst.joint.flat(), inst.joint.reference(qz))
    cands = achievability_candidates(spec, eps)
    alpha, g = max(cands, key=lambda c: c[1]) if cands else (zero_like(eps), zero_like(eps))
    raw = floor_int(g)
    return BoundReport(
        "achievabilityK",
        max(raw, 1),
        {"eta": eps - alpha, "alpha": alpha, "objective": g, "floor": raw, "qz": qz},
    )


def egamma_converse_eps(inst_or_joint, K):
    """Smallest epsilon any protocol with alphabet size K can reach.

    ``E_{|Y|/K}(P_YZ, R_Y x P_Z)``, evaluated as ``E_{1/K}(P_YZ, 1_Y x P_Z)``.
    """
    joint = inst_or_joint.joint if isinstance(inst_or_joint, PAInstance) else inst_or_joint
    if K <= 0:
        raise InputError("K must be positive")
    ny = joint.ny
    ry_pz = tuple(x / ny for x in joint.reference(joint.z_marginal()))
    return e_gamma(joint.flat(), ry_pz, Fraction(ny) / K if is_exact(K) else hp(ny) / K)


def lambda_bar_min(inst: PAInstance, spectrum: AtomSpectrum | None = None) -> MinEntropyValue:
    """Smallest cap lambda with ``sum max(P - lambda P_Z, 0) <= eps``."""
    eps = inst.epsilon
    _check_eps(eps, allow_zero=True)
    spec = spectrum if spectrum is not None else converse_spectrum(inst)
    lam = None
    for j, atom in enumerate(spec.atoms):
        nxt = spec.atoms[j + 1].ratio if j + 1 < len(spec.atoms) else 0
        tail_at_next = spec.cum_p[j] - nxt * spec.cum_q[j]
        if tail_at_next > eps or j + 1 == len(spec.atoms):
            lam = (spec.cum_p[j] - eps) / spec.cum_q[j]
            break
    if lam is None or lam < 0:
        raise InputError("degenerate joint: empty support")
    pz = inst.pz
    T = tuple(max(v - lam * pz[i % inst.joint.nz], 0 * v) for i, v in enumerate(inst.joint.flat()))
    return MinEntropyValue(lam, T)


def normalized_witness(inst: PAInstance, lam_bar: MinEntropyValue) -> JointDist | None:
    """Normalized Q with ``P - T <= Q <= lambda 1_Y P_Z``, or None if lambda |Y| < 1."""
    lam = lam_bar.lam
    ny, nz = inst.joint.shape
    if lam * ny < 1:
        return None
    lower = [v - t for v, t in zip(inst.joint.flat(), lam_bar.witness_T)]
    upper = [lam * q for q in inst.reference()]
    room = sum(u - lo for u, lo in zip(upper, lower))
    deficit = 1 - sum(lower)
    theta = deficit / room if room else zero_like(lam)
    Q = [lo + theta * (u - lo) for lo, u in zip(lower, upper)]
    return JointDist.from_flat(Q, ny, nz)


def pushforward(joint: JointDist, f: Sequence[int], nv: int | None = None) -> JointDist:
    """``P_VZ(v, z) = sum_{y: f(y) = v} P(y, z)``."""
    if len(f) != joint.ny:
        raise InputError("function table must cover every y")
    nv = (max(f) + 1) if nv is None else nv
    zero = zero_like(joint.table[0][0])
    rows = [[zero] * joint.nz for _ in range(nv)]
    for y, v in enumerate(f):
        if not 0 <= v < nv:
            raise InputError(f"f({y}) = {v} outside the output alphabet")
        row = rows[v]
        for z, x in enumerate(joint.table[y]):
            row[z] += x
    return JointDist(tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class EquivalenceReport:
    converse: object
    lambda_bar: object
    egamma_at_converse: object
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def equivalence_suite(inst: PAInstance) -> EquivalenceReport:
    """Check the E_gamma, lambda-bar and normalized-witness equivalences exactly."""
    eps = inst.epsilon
    spec = converse_spectrum(inst)
    K = converse_k(inst, spec).value
    checks = {}
    e_at_k = egamma_converse_eps(inst, K)
    checks["egamma_at_converse_equals_eps"] = e_at_k == eps
    kf = floor_int(K)
    checks["integer_inverse_consistent"] = (
        egamma_converse_eps(inst, kf) <= eps < egamma_converse_eps(inst, kf + 1)
    )
    lb = lambda_bar_min(inst, spec)
    checks["lambda_bar_is_inverse_converse"] = lb.lam * K == 1
    checks["lambda_bar_feasible"] = e_gamma_spectrum(spec, lb.lam) <= eps and sum(lb.witness_T) <= eps
    ny = inst.joint.ny
    if lb.lam * ny >= 1:
        Q = normalized_witness(inst, lb)
        cap = [lb.lam * q for q in inst.reference()]
        lower = [v - t for v, t in zip(inst.joint.flat(), lb.witness_T)]
        qf = Q.flat()
        checks["normalized_witness_valid"] = (
            Q.total == 1
            and all(lo <= q <= c for lo, q, c in zip(lower, qf, cap))
        )
    return EquivalenceReport(K, lb.lam, e_at_k, checks)
