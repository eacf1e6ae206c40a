import json
import math
import random

import pytest

from conftest import random_tree
from noisygates import (Allocation, ConvergenceError, EnergyFailureModel,
                        InfeasibleError, balanced_tree, certify_kkt,
                        closed_form_symmetric, line_circuit, max_reliability_alloc,
                        maximal_paths, min_energy_alloc, oracle_min_energy,
                        parse_circuit, printed_childsum_alloc,
                        symmetric_level_ratio, threshold_energy)

EXP = EnergyFailureModel.exponential
POLY = EnergyFailureModel.polynomial
SEXP = EnergyFailureModel.stretched_exponential

M_EXP = EXP(0.5, 1.0)

TOTAL_B21_015 = 2 * math.log(5) + math.log(10)   # balanced(2,1), budget 0.15


def lopsided_tree():
    """Root over a leaf gate and a 5-gate chain; the shapes' depths differ."""
    doc = {"n_inputs": 8, "root": 0, "gates": [
        {"id": 0, "kind": "AND", "children": [{"gate": 1}, {"gate": 2}]},
        {"id": 1, "kind": "AND", "children": [{"input": 0}, {"input": 1}]},
        {"id": 2, "kind": "AND", "children": [{"gate": 3}, {"input": 2}]},
        {"id": 3, "kind": "AND", "children": [{"gate": 4}, {"input": 3}]},
        {"id": 4, "kind": "AND", "children": [{"gate": 5}, {"input": 4}]},
        {"id": 5, "kind": "AND", "children": [{"gate": 6}, {"input": 5}]},
        {"id": 6, "kind": "AND", "children": [{"input": 6}, {"input": 7}]},
    ]}
    return parse_circuit(json.dumps(doc))


class TestMinEnergy:
    def test_balanced_exponential_point(self):
        tree = balanced_tree(2, 1)
        alloc, kkt = min_energy_alloc(tree, M_EXP, 0.15)
        assert alloc.eps == pytest.approx((0.1, 0.1, 0.05), rel=1e-12)
        assert alloc.energy == pytest.approx(
            (math.log(5), math.log(5), math.log(10)), rel=1e-12)
        assert alloc.total_energy == pytest.approx(TOTAL_B21_015, rel=1e-12)
        assert kkt.certified(1e-8)

    def test_line_gives_uniform(self):
        for model in (M_EXP, POLY(0.5, 2.0), SEXP(0.5, 1.0, 0.5)):
            alloc, kkt = min_energy_alloc(line_circuit(3), model, 0.15)
            assert alloc.eps == pytest.approx((0.05, 0.05, 0.05), rel=1e-9)
            assert kkt.certified(1e-8)

    def test_single_gate(self):
        alloc, _ = min_energy_alloc(balanced_tree(2, 0), M_EXP, 0.05)
        assert alloc.eps == (0.05,)
        assert alloc.total_energy == pytest.approx(math.log(10), rel=1e-12)

    def test_accepts_reliability_target(self):
        from noisygates import ReliabilityTarget
        target = ReliabilityTarget.from_path_budget(0.15)
        alloc, _ = min_energy_alloc(balanced_tree(2, 1), M_EXP, target)
        assert alloc.total_energy == pytest.approx(TOTAL_B21_015, rel=1e-12)

    def test_rejects_nonpositive_budget(self):
        with pytest.raises(ValueError):
            min_energy_alloc(balanced_tree(2, 1), M_EXP, 0.0)

    def test_rejects_vacuous_budget(self):
        with pytest.raises(InfeasibleError, match="vacuous"):
            min_energy_alloc(balanced_tree(2, 1), M_EXP, 1.2)

    def test_rejects_when_box_would_bind(self):
        # Feasible by path lengths (0.9 < 2 * 0.5) but the leaf-gate side of
        # the lopsided tree would need eps above eps0.
        with pytest.raises(InfeasibleError):
            min_energy_alloc(lopsided_tree(), M_EXP, 0.9)

    def test_tolerance_validation(self):
        with pytest.raises(ValueError):
            min_energy_alloc(balanced_tree(2, 1), M_EXP, 0.15, eta=0.5)

    def test_monotone_in_budget(self):
        tree = balanced_tree(3, 2)
        totals = [min_energy_alloc(tree, M_EXP, g)[0].total_energy
                  for g in (0.05, 0.1, 0.2, 0.3, 0.45)]
        assert all(a > b for a, b in zip(totals, totals[1:]))

    def test_path_sums_exact(self):
        rng = random.Random(17)
        for _ in range(30):
            tree = random_tree(rng, 40)
            for model in (M_EXP, POLY(0.5, 0.5)):
                alloc, kkt = min_energy_alloc(tree, model, 0.3)
                for p in maximal_paths(tree):
                    s = sum(alloc.eps[g] for g in p)
                    assert s == pytest.approx(0.3, rel=1e-8)
                assert kkt.certified(1e-8)

    def test_stretched_exponential_asymmetric(self):
        model = SEXP(0.5, 1.0, 0.5)
        doc = {"n_inputs": 5, "root": 0, "gates": [
            {"id": 0, "kind": "AND", "children": [{"gate": 1}, {"gate": 2}]},
            {"id": 1, "kind": "AND", "children": [{"input": 0}, {"input": 1}]},
            {"id": 2, "kind": "OR", "children": [{"gate": 3}, {"input": 2}]},
            {"id": 3, "kind": "AND", "children": [{"input": 3}, {"input": 4}]},
        ]}
        tree = parse_circuit(json.dumps(doc))
        alloc, kkt = min_energy_alloc(tree, model, 0.2)
        assert kkt.max_child_sum_residual <= 1e-7
        assert kkt.max_path_residual <= 1e-7
        oracle = oracle_min_energy(tree, model, 0.2)
        assert alloc.total_energy == pytest.approx(oracle.total_energy, rel=1e-6)

    def test_stretched_beta_one_matches_exponential(self):
        rng = random.Random(23)
        for _ in range(5):
            tree = random_tree(rng, 10)
            a_exp, _ = min_energy_alloc(tree, M_EXP, 0.25)
            a_sexp, _ = min_energy_alloc(tree, SEXP(0.5, 1.0, 1.0), 0.25)
            assert a_sexp.eps == pytest.approx(a_exp.eps, rel=1e-8)

    def test_iterations_linear_in_gates(self):
        for d in range(1, 9):
            tree = balanced_tree(2, d)
            _, kkt = min_energy_alloc(tree, M_EXP, 0.3)
            assert kkt.iterations <= 4 * tree.n_gates


class TestThresholdEnergy:
    def test_balanced(self):
        expect = 2 * math.log(1.5) + math.log(3)
        assert threshold_energy(balanced_tree(2, 1), M_EXP) == pytest.approx(
            expect, rel=1e-12)

    def test_single_gate_is_free(self):
        assert threshold_energy(balanced_tree(2, 0), M_EXP) == 0.0

    def test_line_two(self):
        assert threshold_energy(line_circuit(2), M_EXP) == pytest.approx(
            2 * math.log(2), rel=1e-12)


class TestMaxReliability:
    def test_round_trip_balanced(self):
        res = max_reliability_alloc(balanced_tree(2, 1), M_EXP, TOTAL_B21_015)
        assert res.y_min == pytest.approx(0.15, rel=1e-5)
        assert res.delta_min == pytest.approx(0.0944613, abs=1e-5)
        assert res.kkt.budget_residual <= 1e-6
        assert res.kkt.certified(1e-8, theta=1e-6)

    def test_line_uniform(self):
        res = max_reliability_alloc(line_circuit(3), M_EXP, 3 * math.log(10))
        assert res.allocation.eps == pytest.approx((0.05, 0.05, 0.05), rel=1e-5)
        assert res.y_min == pytest.approx(0.15, rel=1e-5)

    def test_strictly_decreasing_in_budget(self):
        tree = balanced_tree(2, 2)
        ys = [max_reliability_alloc(tree, M_EXP, e).y_min
              for e in (3.0, 5.0, 8.0, 13.0, 21.0)]
        assert all(a > b for a, b in zip(ys, ys[1:]))

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            max_reliability_alloc(balanced_tree(2, 1), M_EXP, 0.0)
        with pytest.raises(ValueError):
            max_reliability_alloc(balanced_tree(2, 1), M_EXP, -3.0)

    def test_budget_below_feasible_range(self):
        with pytest.raises(InfeasibleError, match="threshold_energy"):
            max_reliability_alloc(balanced_tree(2, 1), M_EXP, 0.3)

    def test_stretched_family_needs_threshold_budget(self):
        model = SEXP(0.5, 1.0, 0.5)
        tree = balanced_tree(2, 1)
        floor = threshold_energy(tree, model)
        res = max_reliability_alloc(tree, model, 2.0 * floor)
        assert res.kkt.certified(1e-7, theta=1e-6)
        with pytest.raises(InfeasibleError):
            max_reliability_alloc(tree, model, 0.5 * floor)

    def test_line_below_threshold_budget_is_fine(self):
        # Lines stay interior at any positive budget even below the threshold
        # energy, and the sweep range relies on that.
        tree = line_circuit(3)
        budget = 2.0
        assert budget < threshold_energy(tree, M_EXP)
        res = max_reliability_alloc(tree, M_EXP, budget)
        assert res.y_min == pytest.approx(3 * M_EXP.failure(budget / 3), rel=1e-5)

    def test_round_trip_inverse_pair(self):
        rng = random.Random(31)
        for _ in range(10):
            tree = random_tree(rng, 24)
            model = rng.choice([M_EXP, POLY(0.5, 1.0), POLY(0.5, 2.0)])
            budget = threshold_energy(tree, model) * rng.uniform(1.0, 8.0) + 1.0
            res = max_reliability_alloc(tree, model, budget)
            back, _ = min_energy_alloc(tree, model, res.y_min)
            assert abs(back.total_energy - budget) <= 1e-5 * budget


class TestClosedFormSymmetric:
    def test_exponential_min_energy_levels(self):
        cf = closed_form_symmetric(2, 1, M_EXP, path_budget=0.15)
        assert cf.level_eps == pytest.approx((0.05, 0.10), rel=1e-12)
        assert cf.path_sum == pytest.approx(0.15, rel=1e-12)

    def test_exponential_depth_two(self):
        cf = closed_form_symmetric(2, 2, M_EXP, path_budget=0.175)
        assert cf.level_eps == pytest.approx((0.025, 0.05, 0.10), rel=1e-12)

    def test_exponential_budget_mode(self):
        cf = closed_form_symmetric(2, 1, M_EXP, energy_budget=TOTAL_B21_015)
        assert cf.level_eps[-1] == pytest.approx(0.10, rel=1e-10)
        assert cf.path_sum == pytest.approx(0.15, rel=1e-10)
        assert cf.total_energy == pytest.approx(TOTAL_B21_015, rel=1e-10)

    def test_matches_solver_on_balanced_trees(self):
        for model in (M_EXP, POLY(0.5, 0.5), POLY(0.5, 2.0)):
            for k, d in ((2, 1), (2, 3), (3, 2)):
                tree = balanced_tree(k, d)
                cf = closed_form_symmetric(k, d, model, path_budget=0.3)
                alloc, _ = min_energy_alloc(tree, model, 0.3)
                assert alloc.eps == pytest.approx(cf.gate_eps(tree), rel=1e-10)
                assert alloc.total_energy == pytest.approx(cf.total_energy, rel=1e-10)

    def test_budget_mode_matches_search(self):
        model = POLY(0.5, 2.0)
        tree = balanced_tree(2, 2)
        budget = 2.5 * threshold_energy(tree, model)
        cf = closed_form_symmetric(2, 2, model, energy_budget=budget)
        res = max_reliability_alloc(tree, model, budget)
        assert cf.path_sum == pytest.approx(res.y_min, rel=1e-5)
        assert cf.total_energy == pytest.approx(budget, rel=1e-10)

    def test_level_ratios(self):
        assert symmetric_level_ratio(2, M_EXP) == pytest.approx(0.5, rel=1e-12)
        m = POLY(0.5, 0.5)
        assert symmetric_level_ratio(2, m) == pytest.approx(2 ** (-1.0 / 3), rel=1e-12)
        cf = closed_form_symmetric(2, 1, m, path_budget=0.1)
        assert cf.level_ratio == pytest.approx(2 ** (-1.0 / 3), rel=1e-12)
        # The printed variant would make parents noisier than children.
        assert cf.printed_level_ratio == pytest.approx(2.0, rel=1e-12)

    def test_rejects_out_of_range_level(self):
        with pytest.raises(ValueError, match="level 0"):
            closed_form_symmetric(2, 0, M_EXP, path_budget=0.6)

    def test_mode_exclusivity(self):
        with pytest.raises(ValueError):
            closed_form_symmetric(2, 1, M_EXP)
        with pytest.raises(ValueError):
            closed_form_symmetric(2, 1, M_EXP, path_budget=0.1, energy_budget=1.0)

    def test_stretched_rejected(self):
        with pytest.raises(ValueError):
            closed_form_symmetric(2, 1, SEXP(0.5, 1.0, 0.5), path_budget=0.1)


class TestCertify:
    def test_solver_output_certifies(self):
        tree = balanced_tree(2, 1)
        alloc, kkt = min_energy_alloc(tree, M_EXP, 0.15)
        again = certify_kkt(tree, M_EXP, alloc, path_budget=0.15)
        assert again.certified(1e-8)

    def test_uniform_on_tree_fails_child_sum(self):
        tree = balanced_tree(2, 1)
        alloc = Allocation.from_eps(M_EXP, (0.075, 0.075, 0.075))
        kkt = certify_kkt(tree, M_EXP, alloc, path_budget=0.15)
        assert kkt.max_path_residual <= 1e-12
        assert kkt.max_child_sum_residual == pytest.approx(1.0, rel=1e-9)

    def test_hand_built_optimum(self):
        tree = balanced_tree(2, 1)
        alloc = Allocation.from_eps(M_EXP, (0.10, 0.10, 0.05))
        kkt = certify_kkt(tree, M_EXP, alloc, path_budget=0.15)
        assert kkt.max_child_sum_residual <= 1e-12
        assert kkt.max_path_residual <= 1e-12

    def test_budget_residual(self):
        tree = balanced_tree(2, 1)
        alloc, _ = min_energy_alloc(tree, M_EXP, 0.15)
        kkt = certify_kkt(tree, M_EXP, alloc, path_budget=0.15,
                          energy_budget=alloc.total_energy * 1.01)
        assert kkt.budget_residual == pytest.approx(0.01 / 1.01, rel=1e-9)

    def test_allocation_consistency(self):
        alloc = Allocation.from_eps(M_EXP, (0.1, 0.2))
        assert alloc.total_energy == pytest.approx(sum(alloc.energy), rel=1e-12)
        for e, en in zip(alloc.eps, alloc.energy):
            assert M_EXP.energy(e) == pytest.approx(en, rel=1e-10)


class TestOracle:
    def test_single_gate_saturates_constraint(self):
        alloc = oracle_min_energy(balanced_tree(2, 0), M_EXP, 0.2)
        assert alloc.eps[0] == pytest.approx(0.2, rel=1e-6)

    def test_balanced_agrees_with_closed_form(self):
        alloc = oracle_min_energy(balanced_tree(2, 1), M_EXP, 0.15)
        assert alloc.total_energy == pytest.approx(TOTAL_B21_015, rel=1e-6)

    def test_size_cap(self):
        with pytest.raises(ValueError, match="12"):
            oracle_min_energy(balanced_tree(2, 3), M_EXP, 0.2)

    def test_solver_never_beats_oracle_and_matches(self):
        rng = random.Random(41)
        checked = 0
        while checked < 25:
            tree = random_tree(rng, rng.randint(2, 12))
            if tree.n_gates > 12:
                continue
            model = rng.choice([M_EXP, POLY(0.5, 0.5), POLY(0.5, 1.0), POLY(0.5, 2.0)])
            alloc, _ = min_energy_alloc(tree, model, 0.3)
            oracle = oracle_min_energy(tree, model, 0.3)
            assert alloc.total_energy <= oracle.total_energy * (1 + 1e-6)
            assert alloc.total_energy == pytest.approx(oracle.total_energy, rel=1e-5)
            checked += 1

    def test_printed_polynomial_exponent_is_not_optimal(self):
        # The derivative-consistent child sum matches the reference solver;
        # the printed exponent gives a strictly costlier allocation.
        tree = balanced_tree(2, 1)
        for beta in (0.5, 2.0):
            model = POLY(0.5, beta)
            solver, _ = min_energy_alloc(tree, model, 0.1)
            oracle = oracle_min_energy(tree, model, 0.1)
            printed = printed_childsum_alloc(tree, model, 0.1)
            assert solver.total_energy == pytest.approx(oracle.total_energy, rel=1e-5)
            assert printed.total_energy > oracle.total_energy * 1.01
            # The printed variant still satisfies the path constraint, so it is
            # feasible; it simply is not the optimum.
            for p in maximal_paths(tree):
                assert sum(printed.eps[g] for g in p) == pytest.approx(0.1, rel=1e-9)

    def test_printed_variant_undefined_at_beta_one(self):
        with pytest.raises(ValueError, match="beta=1"):
            printed_childsum_alloc(balanced_tree(2, 1), POLY(0.5, 1.0), 0.1)
