from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fblab._numeric import InputError, to_backend
from fblab.dists import JointDist
from fblab.hypotest import atom_spectrum, beta_alpha, e_gamma
from fblab.pabounds import (
    PAInstance,
    achievability_k,
    converse_k,
    egamma_converse_eps,
    equivalence_suite,
    floor_int,
    lambda_bar_min,
    normalized_witness,
    pushforward,
)
from fblab.selftest import random_joint

from oracles import dense_converse_grid

P011 = F(11, 100)


def z_equals_y(m=2):
    return JointDist(tuple(tuple(F(1, m) if y == z else F(0) for z in range(m)) for y in range(m)))


def z_constant(m):
    return JointDist(tuple((F(1, m),) for _ in range(m)))


def bsc_bit(p=P011):
    return JointDist(((F(1, 2) * (1 - p), F(1, 2) * p), (F(1, 2) * p, F(1, 2) * (1 - p))))


RANDOM_JOINTS = [random_joint(7, i) for i in range(20)]


class TestConverse:
    def test_z_equals_y(self):
        assert converse_k(PAInstance(z_equals_y(), F(1, 10))).value == F(10, 9)

    @pytest.mark.parametrize("m,eps", [(2, F(1, 10)), (5, F(3, 10)), (16, F(1, 100))])
    def test_z_constant(self, m, eps):
        assert converse_k(PAInstance(z_constant(m), eps)).value == m / (1 - eps)

    def test_witness_reports_vertex(self):
        rep = converse_k(PAInstance(z_equals_y(), F(1, 10)))
        assert rep.witness["eta"] == F(9, 10) and rep.witness["alpha"] == 1

    def test_epsilon_range(self):
        with pytest.raises(InputError):
            converse_k(PAInstance(z_equals_y(), F(0)))
        with pytest.raises(InputError):
            converse_k(PAInstance(z_equals_y(), F(1)))

    def test_unnormalized_rejected(self):
        with pytest.raises(InputError):
            PAInstance(JointDist(((F(1, 2), F(1, 4)),)), F(1, 10))

    @pytest.mark.parametrize("index", range(20))
    def test_dense_grid_oracle(self, index):
        # A 10^6-point eta grid can only land on or above the vertex minimum.
        joint = RANDOM_JOINTS[index]
        eps = F(1, 10)
        inst = PAInstance(joint, eps)
        K = converse_k(inst).value
        spec = atom_spectrum(joint.flat(), inst.reference())
        grid = dense_converse_grid(spec.cum_p, spec.cum_q, float(eps))
        assert grid >= float(K) * (1 - 1e-12)
        assert grid <= float(K) * (1 + 1e-5)

    def test_bsc_single_use_dense_grid(self):
        eps = F(1, 10 ** 10)
        inst = PAInstance(bsc_bit(), eps)
        K = converse_k(inst).value
        spec = atom_spectrum(bsc_bit().flat(), inst.reference())
        grid = dense_converse_grid(spec.cum_p, spec.cum_q, float(eps))
        assert abs(grid - float(K)) <= 1e-5 * float(K)
        # The diagonal atom (P-mass 0.89, reference mass 1) is the minimizing vertex.
        assert K == 1 / (F(89, 100) - eps)

    def test_hiprec_matches_rational(self):
        j = RANDOM_JOINTS[3]
        exact_k = converse_k(PAInstance(j, F(1, 10))).value
        jh = JointDist(tuple(tuple(to_backend(x, "hiprec") for x in row) for row in j.table))
        approx = converse_k(PAInstance(jh, to_backend(F(1, 10), "hiprec"))).value
        assert abs(approx - mpmath.mpf(exact_k.numerator) / exact_k.denominator) < mpmath.mpf(10) ** -40


class TestAchievability:
    def test_z_equals_y_collapses_to_one(self):
        for eps in (F(1, 100), F(1, 2), F(7, 10)):
            assert achievability_k(PAInstance(z_equals_y(), eps)).value == 1

    def test_z_equals_y_large_epsilon(self):
        # beta_alpha = alpha, so the objective is 4 (eps - alpha)^2 with
        # supremum 4 eps^2 approached as alpha -> 0.
        rep = achievability_k(PAInstance(z_equals_y(), F(99, 100)))
        assert rep.value == floor_int(4 * F(99, 100) ** 2) == 3
        assert rep.witness["objective"] == 4 * F(99, 100) ** 2

    def test_z_constant_large_alphabet(self):
        inst = PAInstance(z_constant(2 ** 10), F(1, 5))
        ach = achievability_k(inst).value
        assert 1 <= ach <= converse_k(inst).value
        # beta_alpha = 1024 alpha, so the objective 4 (eps-a)^2 1024 peaks as a -> 0.
        assert ach == floor_int(4 * F(1, 5) ** 2 * 1024) == 163

    def test_exhaustive_eta_grid(self):
        inst = PAInstance(z_constant(2 ** 10), F(1, 5))
        ach = achievability_k(inst, "uniform").value
        spec = atom_spectrum(inst.joint.flat(), inst.reference())
        eps = inst.epsilon
        grid = max(
            floor_int(4 * (eps - a) ** 2 * spec.beta(a) / a)
            for a in (eps * F(i, 2000) for i in range(1, 2000))
        )
        assert grid <= ach
        assert ach - grid <= 1

    @pytest.mark.parametrize("index", range(20))
    @pytest.mark.parametrize("policy", ["marginal", "uniform"])
    def test_below_converse(self, index, policy):
        for eps in (F(3, 10), F(1, 10), F(1, 100)):
            inst = PAInstance(RANDOM_JOINTS[index], eps)
            assert achievability_k(inst, policy).value <= converse_k(inst).value

    @pytest.mark.parametrize("index", range(5))
    def test_grid_never_beats_closed_form(self, index):
        inst = PAInstance(RANDOM_JOINTS[index], F(3, 10))
        rep = achievability_k(inst)
        spec = atom_spectrum(inst.joint.flat(), inst.reference())
        eps = inst.epsilon
        for i in range(1, 300):
            a = eps * F(i, 300)
            assert 4 * (eps - a) ** 2 * spec.beta(a) / a <= rep.witness["objective"]

    def test_bad_policy(self):
        with pytest.raises(InputError):
            achievability_k(PAInstance(z_equals_y(), F(1, 10)), "bogus")
        with pytest.raises(InputError):
            achievability_k(PAInstance(z_equals_y(), F(1, 10)), (F(1), F(0)))

    def test_zero_column_allowed_under_marginal(self):
        j = JointDist(((F(1, 2), F(0)), (F(1, 4), F(1, 4)), (F(0), F(0))))
        inst = PAInstance(j, F(1, 10))
        assert achievability_k(inst).value <= converse_k(inst).value
        j0 = JointDist(((F(1, 2), F(0)), (F(1, 2), F(0))))
        inst0 = PAInstance(j0, F(1, 10))
        assert achievability_k(inst0).value == achievability_k(inst0, (F(1), F(0))).value

    def test_explicit_policy(self):
        inst = PAInstance(z_constant(4), F(1, 10))
        assert achievability_k(inst, (F(1),)).value == achievability_k(inst, "uniform").value


class TestEGammaConverse:
    def test_full_extraction_z_equals_y(self):
        assert egamma_converse_eps(PAInstance(z_equals_y(), F(1, 10)), 2) == F(1, 2)

    def test_k_one_independent(self):
        assert egamma_converse_eps(z_constant(4), 1) == 0

    def test_nonpositive_k(self):
        with pytest.raises(InputError):
            egamma_converse_eps(z_constant(4), 0)

    @pytest.mark.parametrize("index", range(20))
    def test_integer_inverse(self, index):
        inst = PAInstance(RANDOM_JOINTS[index], F(1, 10))
        K = floor_int(converse_k(inst).value)
        ok = [k for k in range(1, K + 3) if egamma_converse_eps(inst, k) <= inst.epsilon]
        assert max(ok) == K


class TestLambdaBar:
    def test_epsilon_zero_is_max_ratio(self):
        j = RANDOM_JOINTS[0]
        inst = PAInstance(j, F(0))
        spec = atom_spectrum(j.flat(), inst.reference())
        assert lambda_bar_min(inst).lam == spec.atoms[0].ratio

    @pytest.mark.parametrize("m", [2, 3, 8])
    def test_z_constant(self, m):
        eps = F(3, 10)
        lb = lambda_bar_min(PAInstance(z_constant(m), eps))
        assert lb.lam == (1 - eps) / m
        assert normalized_witness(PAInstance(z_constant(m), eps), lb) is None

    def test_z_equals_y_witness(self):
        inst = PAInstance(z_equals_y(), F(1, 10))
        lb = lambda_bar_min(inst)
        # lambda-bar is the reciprocal of converseK = 10/9; cap mass 2 * 9/10 = 1.8.
        assert lb.lam == F(9, 10)
        Q = normalized_witness(inst, lb)
        assert Q is not None and Q.total == 1
        for v, t, q, r in zip(inst.joint.flat(), lb.witness_T, Q.flat(), inst.reference()):
            assert v - t <= q <= lb.lam * r

    @pytest.mark.parametrize("index", range(20))
    def test_inverse_of_converse(self, index):
        for eps in (F(3, 10), F(1, 10), F(1, 100)):
            inst = PAInstance(RANDOM_JOINTS[index], eps)
            assert lambda_bar_min(inst).lam * converse_k(inst).value == 1

    def test_monotone_in_epsilon(self):
        j = RANDOM_JOINTS[4]
        lams = [lambda_bar_min(PAInstance(j, F(i, 20))).lam for i in range(20)]
        assert all(a >= b for a, b in zip(lams, lams[1:]))


class TestPushforward:
    def test_identity(self):
        j = RANDOM_JOINTS[1]
        assert pushforward(j, list(range(j.ny))) == j

    def test_constant(self):
        j = RANDOM_JOINTS[2]
        out = pushforward(j, [0] * j.ny)
        assert out.shape == (1, j.nz) and out.table[0] == j.z_marginal()

    def test_bad_table(self):
        with pytest.raises(InputError):
            pushforward(z_equals_y(), [0])
        with pytest.raises(InputError):
            pushforward(z_equals_y(), [0, 3], nv=2)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.lists(st.integers(0, 2), min_size=6, max_size=6))
    def test_functions_cannot_increase_beta(self, idx, f):
        # Merging rows of Y never increases beta against the counting reference.
        j = random_joint(11, idx)
        ft = f[: j.ny]
        out = pushforward(j, ft, nv=3)
        P, Q = j.flat(), j.reference(j.z_marginal())
        Pv, Qv = out.flat(), out.reference(out.z_marginal())
        for i in range(11):
            a = F(i, 10)
            assert beta_alpha(Pv, Qv, a).beta <= beta_alpha(P, Q, a).beta


class TestEquivalenceSuite:
    @pytest.mark.parametrize("joint", [z_equals_y(), z_constant(3), bsc_bit()])
    def test_named_instances(self, joint):
        for eps in (F(3, 10), F(1, 10), F(1, 100)):
            rep = equivalence_suite(PAInstance(joint, eps))
            assert rep.passed, rep.checks

    @pytest.mark.parametrize("index", range(20))
    def test_random(self, index):
        rep = equivalence_suite(PAInstance(RANDOM_JOINTS[index], F(1, 10)))
        assert rep.passed, rep.checks
        assert rep.egamma_at_converse == F(1, 10)


def test_e_gamma_matches_definition_on_bsc():
    j = bsc_bit()
    P = j.flat()
    Q = tuple(q / 2 for q in j.reference(j.z_marginal()))
    assert e_gamma(P, Q, 1) == F(39, 100)
