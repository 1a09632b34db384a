import math

import numpy as np
import pytest

import oneshotsim as o
from oneshotsim.entropies import neyman_pearson_classical
from oneshotsim.errors import AlphaOutOfRange, EpsilonOutOfRange
from oneshotsim.states import haar_unitary, random_channel, random_density


def co_diagonal_pair(rng, d=4):
    """Random commuting (shared eigenbasis) normalized pair."""
    u = haar_unitary(d, rng)
    p = rng.random(d)
    q = rng.random(d)
    p /= p.sum()
    q /= q.sum()
    rho = o.make_state((u * p) @ u.conj().T, [d])
    sig = o.make_state((u * q) @ u.conj().T, [d])
    return rho, sig, p, q


class TestRelEntropy:
    def test_self(self, rand_state):
        rho = rand_state([3])
        assert o.rel_entropy(rho, rho) == pytest.approx(0.0, abs=1e-9)

    def test_classical_kl(self):
        h = o.classical_state([0.5, 0.5])
        r = o.classical_state([0.25, 0.75])
        expected = 0.5 * math.log2(2.0) + 0.5 * math.log2(2.0 / 3.0)
        assert o.rel_entropy(h, r) == pytest.approx(expected, abs=1e-12)

    def test_support_violation(self):
        p = o.classical_state([1.0, 0.0])
        q = o.classical_state([0.0, 1.0])
        assert o.rel_entropy(p, q) == math.inf


class TestDMax:
    def test_self(self, rand_state):
        rho = rand_state([3])
        assert o.d_max(rho, rho).value_bits == pytest.approx(0.0, abs=1e-9)

    def test_classical_max_ratio(self):
        h = o.classical_state([0.5, 0.5])
        r = o.classical_state([0.25, 0.75])
        assert o.d_max(h, r).value_bits == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_infinite(self):
        p = o.classical_state([1.0, 0.0])
        q = o.classical_state([0.0, 1.0])
        assert o.d_max(p, q).value_bits == math.inf

    def test_witness_domination(self, rng):
        for _ in range(10):
            p = random_density([3], rng)
            q = random_density([3], rng)
            lam = o.d_max(p, q).value_bits
            gap = (2.0 ** lam) * q.mat - p.mat
            assert np.linalg.eigvalsh(gap)[0] >= -1e-9


class TestDHypo:
    def test_identical_args(self, rand_state):
        rho = rand_state([3])
        for eps in (0.0, 0.25, 0.7):
            got = o.d_hypo(rho, rho, eps).value_bits
            assert got == pytest.approx(-math.log2(1 - eps) if eps else 0.0, abs=1e-9)

    def test_classical_sort_fill(self):
        p = o.classical_state([1.0, 0.0])
        q = o.classical_state([0.5, 0.5])
        assert o.d_hypo(p, q, 0.0).value_bits == pytest.approx(1.0, abs=1e-12)

    def test_eps_zero_equals_petz_zero(self, rng):
        # the gap closes like sqrt(eps) on rank-deficient first arguments
        for _ in range(20):
            p = random_density([3], rng, rank=2)
            q = random_density([3], rng)
            direct = o.d_bar_zero(p, q)
            via_hypo = o.d_hypo(p, q, 1e-12).value_bits
            assert via_hypo == pytest.approx(direct, abs=1e-4)
            exact_zero = o.d_hypo(p, q, 0.0).value_bits
            assert exact_zero == pytest.approx(direct, abs=1e-6)

    def test_dual_matches_neyman_pearson(self, rng):
        for _ in range(50):
            rho, sig, p, q = co_diagonal_pair(rng)
            eps = float(rng.uniform(0.05, 0.9))
            np_val = o.d_hypo(rho, sig, eps).value_bits
            dual_val = o.d_hypo(rho, sig, eps, force_dual=True).value_bits
            assert dual_val == pytest.approx(np_val, abs=1e-6)

    def test_witness_feasible(self, rng):
        for _ in range(10):
            rho = random_density([3], rng)
            sig = random_density([3], rng)
            eps = 0.2
            res = o.d_hypo(rho, sig, eps)
            lam = res.witness
            vals = np.linalg.eigvalsh(lam)
            assert vals[0] >= -1e-8 and vals[-1] <= 1 + 1e-8
            assert np.real(np.trace(lam @ rho.mat)) >= 1 - eps - 1e-8
            beta = np.real(np.trace(lam @ sig.mat))
            assert beta == pytest.approx(2.0 ** -res.value_bits, abs=1e-6)

    def test_eps_out_of_range(self, rand_state):
        rho = rand_state([2])
        with pytest.raises(EpsilonOutOfRange):
            o.d_hypo(rho, rho, 1.0)


class TestDBarZero:
    def test_full_rank(self, rand_state):
        rho = rand_state([3])
        sig = rand_state([3])
        assert o.d_bar_zero(rho, sig) == pytest.approx(0.0, abs=1e-9)

    def test_projector_trace(self):
        p = o.classical_state([1.0, 0.0])
        pi = o.classical_state([0.5, 0.5])
        assert o.d_bar_zero(p, pi) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        p = o.classical_state([1.0, 0.0])
        q = o.classical_state([0.0, 1.0])
        assert o.d_bar_zero(p, q) == math.inf


class TestInfoSpectrum:
    def test_classical_threshold(self):
        p = o.classical_state([0.7, 0.3])
        q = o.classical_state([0.5, 0.5])
        assert o.d_info_spectrum(p, q, 0.2) == pytest.approx(math.log2(0.6), abs=1e-9)

    def test_equal_args_step(self, rand_state):
        rho = rand_state([2])
        for eps in (0.1, 0.5, 0.9):
            assert o.d_info_spectrum(rho, rho, eps) == pytest.approx(0.0, abs=1e-6)

    def test_monotone_in_eps(self, rng):
        for _ in range(10):
            p = random_density([3], rng)
            q = random_density([3], rng)
            vals = [o.d_info_spectrum(p, q, e) for e in (0.1, 0.3, 0.6)]
            assert vals[0] <= vals[1] + 1e-6 <= vals[2] + 2e-6


class TestRenyi:
    def test_equal_args(self, rand_state):
        rho = rand_state([3])
        for flavor in ("petz", "sandwiched"):
            assert o.renyi(rho, rho, 2.0, flavor) == pytest.approx(0.0, abs=1e-9)

    def test_commuting_flavors_agree(self, rng):
        for _ in range(10):
            rho, sig, _, _ = co_diagonal_pair(rng, 3)
            a = o.renyi(rho, sig, 1.7, "petz")
            b = o.renyi(rho, sig, 1.7, "sandwiched")
            assert a == pytest.approx(b, abs=1e-9)

    def test_large_alpha_approaches_dmax(self, rng):
        for _ in range(5):
            p = random_density([2], rng)
            q = random_density([2], rng)
            dm = o.d_max(p, q).value_bits
            approx = o.renyi(p, q, 200.0, "sandwiched")
            assert abs(approx - dm) < 0.05

    def test_alpha_range(self, rand_state):
        rho = rand_state([2])
        with pytest.raises(AlphaOutOfRange):
            o.renyi(rho, rho, 1.0)


class TestEntropies:
    def test_h0(self):
        psi = o.make_pure([1, 0], [2]).density()
        assert o.h0(psi) == pytest.approx(0.0)
        assert o.h0(o.make_state(np.eye(4) / 4, [4])) == pytest.approx(2.0)
        assert o.h0(o.classical_state([0.5, 0.25, 0.25, 0.0])) == pytest.approx(math.log2(3))

    def test_h_r(self):
        assert o.h_r(o.make_state(np.eye(4) / 4, [4])) == pytest.approx(2.0)
        assert o.h_r(o.classical_state([0.75, 0.25])) == pytest.approx(2.0)
        assert o.h_r(o.make_pure([0, 1], [2]).density()) == pytest.approx(0.0)

    def test_von_neumann(self):
        assert o.von_neumann(o.make_state(np.eye(2) / 2, [2])) == pytest.approx(1.0)

    def test_conditional_duality_bell(self):
        v = np.array([1, 0, 0, 1]) / math.sqrt(2)
        bell = o.make_pure(v, [2, 2]).density()
        assert o.cond_von_neumann(bell, [0]) == pytest.approx(-1.0, abs=1e-9)

    def test_conditional_product(self, rand_state):
        a, b = rand_state([2]), rand_state([3])
        joint = o.tensor(a, b)
        assert o.cond_von_neumann(joint, [0]) == pytest.approx(o.von_neumann(a), abs=1e-9)

    def test_chain_rule(self, rng):
        rho = random_density([2, 2], rng)
        lhs = o.mi(rho, [0], "vn")
        ha = o.von_neumann(o.partial_trace(rho, [0]))
        assert lhs == pytest.approx(ha - o.cond_von_neumann(rho, [0]), abs=1e-9)


class TestHMin:
    def test_product_uniform(self, rand_state):
        pi = o.make_state(np.eye(2) / 2, [2])
        joint = o.tensor(pi, rand_state([2]))
        assert o.h_min_cond(joint, [0]) == pytest.approx(1.0, abs=1e-7)

    def test_bell(self):
        v = np.array([1, 0, 0, 1]) / math.sqrt(2)
        bell = o.make_pure(v, [2, 2]).density()
        assert o.h_min_cond(bell, [0]) == pytest.approx(-1.0, abs=1e-7)

    def test_cq_fast_path_matches_sdp(self, rng):
        conds = tuple(random_density([2], rng) for _ in range(3))
        probs = np.array([0.2, 0.5, 0.3])
        cq = o.CQState(probs, conds)
        fast = o.h_min_cond_cq(cq)
        joint = cq.assemble(classical_first=False)  # (A, X)
        sdp = o.h_min_cond(joint, [0])
        assert fast == pytest.approx(sdp, abs=1e-6)

    def test_orthogonal_pure_cq(self):
        cq = o.CQState(np.array([0.5, 0.5]),
                       (o.classical_state([1.0, 0]), o.classical_state([0, 1.0])))
        assert o.h_min_cond_cq(cq) == pytest.approx(0.0, abs=1e-12)

    def test_product_identity(self, rng):
        a = random_density([2], rng)
        b = random_density([2], rng)
        joint = o.tensor(a, b)
        expected = -math.log2(float(np.linalg.eigvalsh(a.mat)[-1]))
        assert o.h_min_cond(joint, [0]) == pytest.approx(expected, abs=1e-7)


class TestDataProcessing:
    def test_dpi_full_channels(self, rng):
        for _ in range(50):
            p = random_density([2, 2], rng)
            q = random_density([2, 2], rng)
            ks = random_channel(4, 3, 2, rng)
            ep = o.apply_channel(p, ks)
            eq = o.apply_channel(q, ks)
            assert o.d_max(ep, eq).value_bits <= o.d_max(p, q).value_bits + 1e-8
            assert o.rel_entropy(ep, eq) <= o.rel_entropy(p, q) + 1e-8
            eps = 0.25
            assert (o.d_hypo(ep, eq, eps).value_bits
                    <= o.d_hypo(p, q, eps).value_bits + 1e-6)

    def test_ordering(self, rng):
        for _ in range(20):
            p = random_density([3], rng)
            q = random_density([3], rng)
            kl = o.rel_entropy(p, q)
            dm = o.d_max(p, q).value_bits
            dh0 = o.d_hypo(p, q, 0.0).value_bits
            assert kl <= dm + 1e-8
            assert dh0 <= dm + 1e-8


def test_neyman_pearson_exact_fill():
    beta, lam = neyman_pearson_classical(
        np.array([0.5, 0.3, 0.2]), np.array([0.1, 0.4, 0.5]), 0.25)
    # take ratio-5 outcome fully (mass .5), then quarter of the ratio-0.75 one
    assert beta == pytest.approx(0.1 + (0.25 / 0.3) * 0.4, abs=1e-12)
    assert np.all(lam >= 0) and np.all(lam <= 1)
