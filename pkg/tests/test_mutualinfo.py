import math

import numpy as np
import pytest

import oneshotsim as o
from oneshotsim.errors import EpsilonOutOfRange
from oneshotsim.mutualinfo import classical_i_up
from oneshotsim.solver import SearchConfig
from oneshotsim.states import random_channel, random_density


def random_cq(rng, n_symbols, dims, rank=None):
    probs = rng.random(n_symbols)
    probs /= probs.sum()
    conds = tuple(random_density(dims, rng, rank=rank) for _ in range(n_symbols))
    return o.CQState(probs, conds)


class TestFlavors:
    def test_product_state_all_zero(self, rand_state):
        joint = o.tensor(rand_state([2]), rand_state([2]))
        for flavor in ("vn", "upup", "up", "down"):
            assert o.mi(joint, [0], flavor) == pytest.approx(0.0, abs=1e-6)
        eps = 0.3
        assert o.mi(joint, [0], "hypo", eps) == pytest.approx(-math.log2(1 - eps), abs=1e-6)

    def test_perfect_correlation_bit(self):
        chi = o.perfect_correlation([0.5, 0.5])
        assert o.mi(chi, [0], "vn") == pytest.approx(1.0, abs=1e-9)
        assert o.mi(chi, [0], "upup") == pytest.approx(1.0, abs=1e-9)

    def test_ordering_on_random_states(self, rng):
        for _ in range(30):
            rho = random_density([2, 2], rng)
            down = o.mi(rho, [0], "down")
            up = o.mi(rho, [0], "up")
            upup = o.mi(rho, [0], "upup")
            vn = o.mi(rho, [0], "vn")
            assert down <= up + 1e-6
            assert up <= upup + 1e-6
            assert vn <= upup + 1e-6

    def test_hypo_requires_eps(self):
        chi = o.perfect_correlation([0.5, 0.5])
        with pytest.raises(EpsilonOutOfRange):
            o.mi(chi, [0], "hypo")


class TestCQClosedForm:
    def test_orthogonal_bit(self):
        cq = o.CQState(np.array([0.5, 0.5]),
                       (o.classical_state([1.0, 0]), o.classical_state([0, 1.0])))
        assert o.mi_up_cq_closed_form(cq) == pytest.approx(1.0, abs=1e-9)

    def test_identical_conditionals(self, rand_state):
        c = rand_state([2])
        cq = o.CQState(np.array([0.3, 0.7]), (c, c))
        assert o.mi_up_cq_closed_form(cq) == pytest.approx(0.0, abs=1e-9)

    def test_matches_sdp(self, rng):
        for _ in range(5):
            cq = random_cq(rng, 3, [2])
            closed = o.mi_up_cq_closed_form(cq)
            joint = cq.assemble(classical_first=False)
            sdp = o.mi(joint, [0], "up")
            assert closed == pytest.approx(sdp, abs=1e-6)

    def test_upup_cq_side_is_max(self, rng):
        # two-sided flavor on the (A : X) cut collapses to the per-symbol max
        cq = random_cq(rng, 4, [2])
        joint = cq.assemble(classical_first=False)
        upup = o.mi(joint, [0], "upup")
        avg = cq.average()
        expected = max(o.d_max(c, avg).value_bits for c in cq.conditionals)
        assert upup == pytest.approx(expected, abs=1e-8)


class TestClassicalSmoothing:
    def test_eps_zero_is_unsmoothed(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        assert o.mi_classical_smoothed_up(chi, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_eps(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        v_small = o.mi_classical_smoothed_up(chi, 0.1)
        v_large = o.mi_classical_smoothed_up(chi, 0.9)
        assert v_large <= v_small + 1e-9
        assert v_small <= 1.0 + 1e-12

    def test_against_ball_grid_oracle(self):
        # exhaustive grid over normalized 2x2 distributions plus a deficit axis
        joint = np.array([[0.4, 0.1], [0.2, 0.3]])
        eps = 0.25
        from oneshotsim._kernels import purified_distance_classical
        flat = joint.ravel()
        best = classical_i_up(joint)
        grid = np.linspace(0.0, 1.0, 41)
        for a in grid:
            for b in grid:
                for c in grid:
                    if a + b + c > 1.0 + 1e-12:
                        continue
                    q = np.array([a, b, c, 1.0 - a - b - c])
                    for deficit in (0.0, eps * eps / 2, eps * eps):
                        qd = q * (1.0 - deficit)
                        if purified_distance_classical(qd, flat) <= eps:
                            best = min(best, classical_i_up(qd.reshape(2, 2)))
        ours = o.mi_classical_smoothed_up(joint, eps,
                                          cfg=SearchConfig(restarts=8, max_iters=200, seed=2))
        assert ours <= classical_i_up(joint) + 1e-12
        assert abs(ours - best) <= 5e-3


class TestRenyiDecomposition:
    def test_single_symbol(self, rng):
        cq = random_cq(rng, 1, [2, 2])
        lhs, rhs = o.renyi_cq_decomposition(cq, 2.0)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_random_cq_agreement(self, rng):
        for flavor in ("petz", "sandwiched"):
            cq = random_cq(rng, 3, [2, 2])
            lhs, rhs = o.renyi_cq_decomposition(cq, 2.0, flavor)
            assert lhs == pytest.approx(rhs, abs=1e-6)

    def test_product_conditionals_zero(self, rand_state):
        a = rand_state([2])
        b = rand_state([2])
        prod = o.tensor(a, b)
        cq = o.CQState(np.array([0.5, 0.5]), (prod, prod))
        lhs, rhs = o.renyi_cq_decomposition(cq, 2.0)
        assert lhs == pytest.approx(0.0, abs=1e-9)
        assert rhs == pytest.approx(0.0, abs=1e-9)


class TestSymmetries:
    def test_symmetric_state(self):
        chi = o.perfect_correlation([0.5, 0.5])
        rep = o.check_mi_symmetries(chi, 0.25)
        assert rep["ih_gap"] == pytest.approx(0.0, abs=1e-10)
        assert rep["ds_gap"] == pytest.approx(0.0, abs=1e-10)

    def test_random_state(self, rng):
        rho = random_density([2, 2], rng)
        rep = o.check_mi_symmetries(rho, 0.25)
        assert rep["ih_gap"] <= 1e-6
        assert rep["ds_gap"] <= 1e-6

    def test_classical_asymmetric(self):
        joint = o.classical_state(np.array([[0.5, 0.2], [0.1, 0.2]]), (2, 2))
        rep = o.check_mi_symmetries(joint, 0.3)
        assert rep["ih_gap"] <= 1e-8
        assert rep["ds_gap"] <= 1e-8


class TestHypoExpectationClaim:
    def test_single_symbol_gap_zero(self, rng):
        cq = random_cq(rng, 1, [2, 2])
        rep = o.check_hypo_expectation_claim(cq, 0.2)
        assert rep["gap"] == pytest.approx(0.0, abs=1e-8)

    def test_identical_conditionals(self, rand_state):
        c = o.tensor(rand_state([2]), rand_state([2]))
        cq = o.CQState(np.array([0.5, 0.5]), (c, c))
        rep = o.check_hypo_expectation_claim(cq, 0.2)
        assert rep["direct_exp"] == pytest.approx(0.8, abs=1e-6)
        assert rep["per_symbol_exp"] == pytest.approx(0.8, abs=1e-6)

    def test_direct_never_exceeds_per_symbol(self, rng):
        for _ in range(5):
            cq = random_cq(rng, 2, [2, 2])
            rep = o.check_hypo_expectation_claim(cq, 0.25)
            assert rep["direct_exp"] <= rep["per_symbol_exp"] + 1e-9


class TestChainRule:
    def test_up_bounded_by_hr_minus_hmin(self, rng):
        # classical Markov extensions: I_up(AC : X) <= H_R(AC) - H_min(AC|X)
        for _ in range(20):
            nx = int(rng.integers(2, 5))
            seed = rng.random(nx)
            seed /= seed.sum()
            conds_a = rng.random((nx, 2))
            conds_a /= conds_a.sum(axis=1, keepdims=True)
            conds_c = rng.random((nx, 2))
            conds_c /= conds_c.sum(axis=1, keepdims=True)
            joint = np.einsum("x,xa,xc->acx", seed, conds_a, conds_c)
            i_up = classical_i_up(joint)
            recon = joint.sum(axis=2).ravel()
            h_r_val = -math.log2(float(np.min(recon[recon > 1e-15])))
            h_min = -math.log2(float(sum(
                seed[x] * np.max(np.outer(conds_a[x], conds_c[x]))
                for x in range(nx))))
            assert i_up <= h_r_val - h_min + 1e-6


class TestDownClassicalOracle:
    def test_nested_min_max_zooming_grid(self):
        # classical instance: I_down = min over product references of the
        # worst per-symbol ratio; deterministic zooming grid over both factors
        p_x = np.array([0.3, 0.7])
        conds = np.array([[0.9, 0.1], [0.2, 0.8]])  # rho_A^x rows
        joint = np.diag((p_x[:, None] * conds).ravel())
        rho = o.make_state(joint, (2, 2))  # registers (X, A)
        ours = o.mi(rho, [1], "down")  # cut A side; optimizes both marginals

        def value(qa, ta):
            q = np.array([qa, 1 - qa])
            t = np.array([ta, 1 - ta])
            return math.log2(max(
                (p_x[x] / q[x]) * np.max(conds[x] / t) for x in range(2)))

        lo_q, hi_q, lo_t, hi_t = 1e-6, 1 - 1e-6, 1e-6, 1 - 1e-6
        best = math.inf
        for _zoom in range(6):
            qs = np.linspace(lo_q, hi_q, 41)
            ts = np.linspace(lo_t, hi_t, 41)
            vals = [(value(qa, ta), qa, ta) for qa in qs for ta in ts]
            best, q_star, t_star = min(vals)
            span_q = (hi_q - lo_q) / 8
            span_t = (hi_t - lo_t) / 8
            lo_q, hi_q = max(1e-6, q_star - span_q), min(1 - 1e-6, q_star + span_q)
            lo_t, hi_t = max(1e-6, t_star - span_t), min(1 - 1e-6, t_star + span_t)
        assert ours <= best + 1e-6   # the oracle restricts to its grid
        assert abs(ours - best) <= 1e-4


class TestChainRuleViaPackageOps:
    def test_assembled_state_route(self, rng):
        # same inequality driven through mi/h_r/h_min_cond_cq instead of the
        # closed forms, so the dense operators and kernels cross-validate
        probs = np.array([0.25, 0.35, 0.4])
        conds = tuple(
            o.tensor(o.classical_state(r / r.sum()), o.classical_state(s / s.sum()))
            for r, s in ((rng.random(2), rng.random(2)) for _ in range(3)))
        cq = o.CQState(probs, conds)
        joint = cq.assemble(classical_first=False)  # (A, C, X)
        i_up = o.mi(joint, [0, 1], "up")
        h_r_val = o.h_r(o.partial_trace(joint, [0, 1]))
        h_min = o.h_min_cond_cq(cq)
        assert i_up <= h_r_val - h_min + 1e-6


class TestLocalDPI:
    def test_flavors_nonincreasing_under_local_channels(self, rng):
        for _ in range(20):
            rho = random_density([2, 2], rng)
            ks = random_channel(2, 2, 2, rng)
            out = o.apply_channel_local(rho, ks, 1)
            for flavor in ("vn", "upup", "up"):
                before = o.mi(rho, [0], flavor)
                after = o.mi(out, [0], flavor)
                assert after <= before + 1e-6
