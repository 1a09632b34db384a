import math

import numpy as np
import pytest

import oneshotsim as o
from oneshotsim.covering import lifted_cq, _decomposition_of_classical
from oneshotsim.errors import BadSymbol, BudgetViolated, EtaOutOfRange


def orthogonal_qubit_source():
    return o.CQState(np.array([0.5, 0.5]),
                     (o.classical_state([1.0, 0.0]), o.classical_state([0.0, 1.0])))


def constant_source():
    c = o.classical_state([0.3, 0.7])
    return o.CQState(np.array([0.5, 0.5]), (c, c))


class TestCoveringError:
    def test_rational_full_alphabet_codebook(self):
        cq = o.CQState(np.array([0.25, 0.75]),
                       (o.classical_state([1.0, 0.0]), o.classical_state([0.0, 1.0])))
        cb = o.Codebook((0, 1, 1, 1))
        assert o.covering_error(cq, cb) == pytest.approx(0.0, abs=1e-12)

    def test_constant_source_any_codebook(self):
        cq = constant_source()
        for cb in (o.Codebook((0,)), o.Codebook((1, 1, 0))):
            assert o.covering_error(cq, cb) == pytest.approx(0.0, abs=1e-12)

    def test_repeated_symbol_error_one(self):
        assert o.covering_error(orthogonal_qubit_source(), o.Codebook((0, 0))) == pytest.approx(1.0)

    def test_bad_symbol(self):
        with pytest.raises(BadSymbol):
            o.covering_error(orthogonal_qubit_source(), o.Codebook((0, 7)))


class TestExpectedError:
    def test_exact_enumeration_m2(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, seed=0)
        mean, stderr = o.expected_covering_error(exp, 2)
        assert mean == pytest.approx(0.5, abs=1e-12)
        assert stderr == 0.0

    def test_m1_is_one(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, seed=0)
        mean, _ = o.expected_covering_error(exp, 1)
        assert mean == pytest.approx(1.0, abs=1e-12)

    def test_monte_carlo_within_three_stderr(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, trials=10 ** 4,
                                   seed=42, exact_cap=1)
        mean, stderr = o.expected_covering_error(exp, 2)
        assert abs(mean - 0.5) <= 3.0 * stderr

    def test_deterministic_given_seed(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, trials=500,
                                   seed=9, exact_cap=1)
        assert o.expected_covering_error(exp, 3) == o.expected_covering_error(exp, 3)

    def test_nonincreasing_in_m(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, trials=2000, seed=5)
        means = [o.expected_covering_error(exp, m)[0] for m in (1, 2, 4, 8)]
        for lo, hi in zip(means[1:], means[:-1]):
            assert lo <= hi + 1e-9


class TestMinCodebookSize:
    def test_constant_source(self):
        exp = o.CoveringExperiment(constant_source(), 0.1, seed=0)
        assert o.min_codebook_size(exp) == 1

    def test_orthogonal_eps_point_six(self):
        exp = o.CoveringExperiment(orthogonal_qubit_source(), 0.6, seed=0)
        assert o.min_codebook_size(exp) == 2

    def test_nonincreasing_in_eps(self):
        sizes = []
        for eps in (0.2, 0.4, 0.8):
            exp = o.CoveringExperiment(orthogonal_qubit_source(), eps, seed=1)
            sizes.append(o.min_codebook_size(exp))
        assert sizes == sorted(sizes, reverse=True)


class TestBounds:
    def test_g_value(self):
        assert o.g_conversion(0.5) == pytest.approx(5.899968626952991, abs=1e-9)

    def test_nu_of_uniform(self):
        cq = orthogonal_qubit_source()
        consts, _ = o.soft_cover_bounds(cq, 0.3, 0.28)
        assert consts.nu == 1
        assert consts.nu_prime == 1

    def test_empirical_below_bound(self):
        cq = orthogonal_qubit_source()
        consts, rhs = o.soft_cover_bounds(cq, 0.3, 0.28)
        exp = o.CoveringExperiment(cq, 0.3, trials=2000, seed=7)
        m = o.min_codebook_size(exp)
        assert math.log2(m) <= rhs

    def test_eta_window(self):
        with pytest.raises(EtaOutOfRange):
            o.soft_cover_bounds(orthogonal_qubit_source(), 0.3, 0.2)

    def test_outside_proof_range_flag(self):
        consts, _ = o.soft_cover_bounds(orthogonal_qubit_source(), 0.6, 0.58)
        assert consts.outside_proof_range

    def test_kappa_formula(self):
        # direct re-evaluation of the displayed constant at the default eta
        eps2 = 0.05
        eta = eps2 * 15.0 / 16.0
        eps_tilde = math.sqrt(eps2 / 8.0) - math.sqrt(eps2 - eta)
        eps_bar = 2.0 + eps_tilde - 2.0 * math.sqrt(1.0 + eps_tilde)
        g = math.log2((2 * (1 - eps_bar) + 3) / ((1 - eps_bar) * (1 - math.sqrt(1 - eps_bar ** 2))))
        expected = g - math.log2(1 / eps2 - 0.125) + 3 * math.log2(3.0) + 7.0
        assert o.kappa(eps2) == pytest.approx(expected, abs=1e-9)
        assert math.isfinite(o.kappa(0.5))

    def test_ihypo_bound_finite(self):
        consts, rhs = o.soft_cover_bounds(orthogonal_qubit_source(), 0.3, bound_kind="ihypo")
        assert math.isfinite(rhs)

    def test_classical_smoother_tightens(self):
        cq = orthogonal_qubit_source()
        _, rhs_plain = o.soft_cover_bounds(cq, 0.3, 0.28)
        _, rhs_smooth = o.soft_cover_bounds(cq, 0.3, 0.28, smooth_classical=True)
        assert rhs_smooth <= rhs_plain + 1e-9


class TestProtocols:
    def test_product_target_single_symbol(self):
        prod = np.outer([0.6, 0.4], [0.3, 0.7])
        dec = _decomposition_of_classical(prod)
        proto = o.build_dss_protocol(dec, 0.1, (0.02, 0.02), seed=0)
        assert proto.size == 1
        assert proto.achieved_one_norm <= 1e-9

    def test_correlated_bit(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        dec = _decomposition_of_classical(chi)
        proto = o.build_dss_protocol(dec, 0.05, (0.01, 0.01), seed=0)
        assert proto.achieved_one_norm <= 0.05
        wy = o.wyner_ci(chi).value_bits
        assert proto.bits >= wy - 5e-2

    def test_achieved_equals_lifted_covering_error(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        dec = _decomposition_of_classical(chi)
        proto = o.build_dss_protocol(dec, 0.05, (0.01, 0.01), seed=0)
        lifted = lifted_cq(dec)
        assert proto.achieved_one_norm == pytest.approx(
            o.covering_error(lifted, proto.codebook), abs=1e-14)
        assert proto.achieved_td == pytest.approx(0.5 * proto.achieved_one_norm, abs=1e-14)

    def test_markov_structure_preserved(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        dec = _decomposition_of_classical(chi)
        proto = o.build_dss_protocol(dec, 0.05, (0.01, 0.01), seed=0)
        # uniform seed over the codebook, preparation per symbol
        mix = np.zeros((2, 2))
        for s in proto.codebook.symbols:
            mix += np.outer(dec.party_conditionals[0][s].diagonal(),
                            dec.party_conditionals[1][s].diagonal()) / proto.size
        joint = np.zeros((2, len(proto.codebook.symbols), 2))
        for j, s in enumerate(proto.codebook.symbols):
            joint[:, j, :] = np.outer(dec.party_conditionals[0][s].diagonal(),
                                      dec.party_conditionals[1][s].diagonal()) / proto.size
        rep = o.check_markov(o.classical_state(joint, joint.shape))
        assert rep["is_markov"]

    def test_budget_violation(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        dec = _decomposition_of_classical(chi)
        with pytest.raises(BudgetViolated):
            o.build_dss_protocol(dec, 0.05, (0.02, 0.02))

    def test_derandomized_best_beats_mean(self):
        # existence argument: the kept codebook's error never exceeds the
        # Monte Carlo expectation at the same size
        p = np.array([[0.45, 0.05], [0.05, 0.45]])
        dec = _decomposition_of_classical(p)
        proto = o.build_dss_protocol(dec, 0.4, (0.05, 0.25), seed=3)
        cq = lifted_cq(dec)
        mean, _ = o.expected_covering_error(
            o.CoveringExperiment(cq, 0.4, seed=3), proto.size)
        assert proto.achieved_one_norm <= mean + 1e-12


class TestBoundsReport:
    def test_product_target(self):
        prod = np.outer([0.6, 0.4], [0.3, 0.7])
        rep = o.one_shot_bounds_report(prod, 0.2, 0.05, 0.05, seed=0)
        assert rep["lower_bits"] == pytest.approx(0.0, abs=1e-6)
        assert rep["achieved_bits"] == 0.0
        assert rep["ordered"]

    def test_correlated_bit_sandwich(self):
        chi = np.diag([0.5, 0.5]).reshape(2, 2)
        rep = o.one_shot_bounds_report(chi, 0.2, 0.05, 0.05, seed=0)
        assert rep["lower_bits"] <= rep["achieved_bits"] + 5e-2
        assert rep["achieved_bits"] <= rep["upper_bits"] + 5e-2
        assert rep["kappa_bits"] == pytest.approx(o.kappa(0.05, nu=rep["nu"]), abs=1e-12)
