import math

import numpy as np
import pytest

import oneshotsim as o
from oneshotsim.states import haar_unitary, random_density

BELL = None


def setup_module(module):
    global BELL
    BELL = o.make_schmidt([2 ** -0.5, 2 ** -0.5])


class TestCatalyst:
    def test_single(self):
        cat = o.mu_state(1)
        assert np.allclose(cat.spectrum.amplitudes, [1.0])

    def test_three(self):
        cat = o.mu_state(3)
        assert np.allclose(cat.spectrum.probs(), [6 / 11, 3 / 11, 2 / 11], atol=1e-12)

    def test_normalization_large(self):
        cat = o.mu_state(10 ** 4)
        assert float(np.sum(cat.spectrum.probs())) == pytest.approx(1.0, abs=1e-12)


class TestMaxLocalUnitaryFidelity:
    def test_equal_spectra(self):
        assert o.max_local_unitary_fidelity(BELL, BELL) == pytest.approx(1.0, abs=1e-12)

    def test_product_versus_bell(self):
        prod = o.make_schmidt([1.0])
        assert o.max_local_unitary_fidelity(prod, BELL) == pytest.approx(2 ** -0.5, abs=1e-12)

    def test_dominates_sampled_unitaries(self, rng):
        for _ in range(10):
            a = np.sort(np.abs(rng.standard_normal(3)))[::-1]
            a /= np.linalg.norm(a)
            b = np.sort(np.abs(rng.standard_normal(3)))[::-1]
            b /= np.linalg.norm(b)
            sa = o.make_schmidt(a)
            sb = o.make_schmidt(b)
            bound = o.max_local_unitary_fidelity(sa, sb)
            psi = sum(a[i] * np.kron(_e(3, i), _e(3, i)) for i in range(3))
            phi = sum(b[i] * np.kron(_e(3, i), _e(3, i)) for i in range(3))
            for _ in range(20):
                u = haar_unitary(3, rng)
                w = haar_unitary(3, rng)
                overlap = abs(np.vdot(phi, np.kron(u, w) @ psi))
                assert overlap <= bound + 1e-9


def _e(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


class TestEmbezzleFidelity:
    def test_exact_small_catalysts(self):
        assert o.embezzle_fidelity(BELL, 1).fidelity == pytest.approx(2 ** -0.5, abs=1e-12)
        assert o.embezzle_fidelity(BELL, 2).fidelity == pytest.approx(
            (math.sqrt(2.0) + 1.0) / 3.0, abs=1e-12)

    def test_threshold_bell(self):
        rep = o.embezzle_fidelity(BELL, 33, 0.2)
        assert rep.fidelity >= 0.8
        assert rep.satisfied

    def test_monotone_in_n(self, rng):
        spec = np.abs(rng.standard_normal(3))
        spec /= np.linalg.norm(spec)
        target = o.make_schmidt(spec)
        fids = [o.embezzle_fidelity(target, n).fidelity for n in range(1, 65)]
        for lo, hi in zip(fids[:-1], fids[1:]):
            assert hi >= lo - 1e-12

    def test_nonincreasing_in_rank(self):
        n = 8
        f2 = o.embezzle_fidelity(o.make_schmidt(np.full(2, 2 ** -0.5)), n).fidelity
        f3 = o.embezzle_fidelity(o.make_schmidt(np.full(3, 3 ** -0.5)), n).fidelity
        assert f3 <= f2 + 1e-12

    @pytest.mark.parametrize("m,eps", [(2, 0.5), (2, 0.25), (3, 0.5)])
    def test_theorem_desk_check(self, m, eps):
        target = o.make_schmidt(np.full(m, m ** -0.5))
        n = int(math.ceil(m ** (1.0 / eps))) + 1
        rep = o.embezzle_fidelity(target, n, eps)
        assert rep.fidelity >= 1.0 - eps


class TestMinCatalyst:
    def test_loose_eps_single(self):
        assert o.min_catalyst_size(BELL, 0.99) == 1

    def test_bell_guarantee(self):
        n = o.min_catalyst_size(BELL, 0.2)
        assert n <= 33

    def test_minimality(self):
        n = o.min_catalyst_size(BELL, 0.2)
        assert o.embezzle_fidelity(BELL, n).fidelity >= 0.8
        if n > 1:
            assert o.embezzle_fidelity(BELL, n - 1).fidelity < 0.8


class TestPurificationRanks:
    def test_pure_state_both_equal(self, rng):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        rho = o.make_pure(v, [2, 2]).density()
        sr = o.schmidt(o.make_pure(v, [2, 2]), [0]).rank
        ar_b, a_br = o.purification_schmidt_ranks(rho)
        assert ar_b == sr
        assert a_br == sr

    @pytest.mark.parametrize("db", [2, 3, 4])
    def test_gap_is_db_minus_one(self, db):
        phi = o.make_pure([1.0] + [0.0], [2]).density()
        pi_b = o.make_state(np.eye(db) / db, [db])
        rho = o.tensor(phi, pi_b)
        ar_b, a_br = o.purification_schmidt_ranks(rho)
        assert {ar_b, a_br} == {1, db} or abs(ar_b - a_br) == db - 1

    def test_matches_reshaped_svd(self, rng):
        rho = random_density([2, 2], rng, rank=2)
        psi = o.purify(rho)
        da, db, dr = 2, 2, psi.dims[-1]
        amps = psi.amplitudes.reshape(da, db, dr)
        r1 = np.linalg.matrix_rank(np.transpose(amps, (0, 2, 1)).reshape(da * dr, db), tol=1e-9)
        r2 = np.linalg.matrix_rank(amps.reshape(da, db * dr), tol=1e-9)
        assert o.purification_schmidt_ranks(rho) == (r1, r2)

    def test_rank_multiplicative_over_copies(self, rng):
        rho = random_density([2, 2], rng, rank=2)
        single = o.purification_schmidt_ranks(rho)
        two = o.tensor(rho, rho)
        double = o.purification_schmidt_ranks(
            o.permute_subsystems(two, [0, 2, 1, 3]))  # group A copies, then B copies
        # bipartition for the doubled state: A = first two subsystems
        da = 4
        psi = o.purify(o.permute_subsystems(two, [0, 2, 1, 3]))
        amps = psi.amplitudes.reshape(da, 4, psi.dims[-1])
        r1 = np.linalg.matrix_rank(np.transpose(amps, (0, 2, 1)).reshape(-1, 4), tol=1e-9)
        assert r1 == single[0] ** 2


class TestApproxEntRank:
    def test_bell_eps_zero(self):
        assert o.approx_ent_rank_pure(BELL, 0.0) == 2

    def test_bell_truncation_threshold(self):
        eps = 1.0 - 2 ** -0.5  # (1-eps)^2 = 1/2 exactly
        assert o.approx_ent_rank_pure(BELL, eps + 1e-12) == 1
        assert o.approx_ent_rank_pure(BELL, eps - 1e-3) == 2

    def test_minimality(self, rng):
        spec = np.sort(np.abs(rng.standard_normal(5)))[::-1]
        spec /= np.linalg.norm(spec)
        s = o.make_schmidt(spec)
        eps = 0.2
        r = o.approx_ent_rank_pure(s, eps)
        probs = s.probs()
        assert float(np.sum(probs[:r])) >= (1 - eps) ** 2 - 1e-12
        if r > 1:
            assert float(np.sum(probs[:r - 1])) < (1 - eps) ** 2


class TestFlaggedBounds:
    def test_pure_product(self):
        res = o.flagged_embezzle_bounds([1.0], [o.make_schmidt([1.0])], 0.2)
        assert res.lower_bits == 0.0
        assert res.upper_bits == 0.0
        assert res.achieved_fidelity == pytest.approx(1.0, abs=1e-12)

    def test_single_bell(self):
        res = o.flagged_embezzle_bounds([1.0], [BELL], 0.2)
        assert res.upper_bits == pytest.approx(5.0, abs=1e-12)
        assert res.catalyst_size == 33
        assert res.achieved_fidelity >= 0.8
        assert res.lower_bits == pytest.approx(1.0)
        assert res.lower_bits <= res.upper_bits

    def test_mixture_concavity(self):
        res = o.flagged_embezzle_bounds([0.5, 0.5], [BELL, o.make_schmidt([1.0])], 0.2)
        assert res.achieved_fidelity >= 0.8
        assert res.lower_bits <= res.upper_bits
