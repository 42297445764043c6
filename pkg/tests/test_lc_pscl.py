import itertools
from math import inf

import numpy as np
import pytest

from polarlab.channel import ChannelParams
from polarlab.codes import build_code_spec
from polarlab.decode_list import Counters, _subtree_plan, list_decode, pscl_decode
from polarlab.encode import polar_transform
from polarlab.ga import pruning_thresholds
from polarlab.lc_pscl import (
    DiscardedMass,
    LcConfig,
    lc_pscl_decode,
    log_phi_hat,
    r_metric,
    select_min_list,
)
from polarlab.polar_tree import build_sub_polar_tree, residual_log_kappa

from conftest import make_frame


def table_for(spec, tau, ebn0_db, eps_tol):
    tree = build_sub_polar_tree(spec, tau)
    return pruning_thresholds(
        tree, ChannelParams(ebn0_db=ebn0_db, rate=spec.k_dim / spec.n_block), eps_tol
    )


class TestRMetric:
    def test_all_zero_word_is_mean(self):
        assert r_metric(np.array([1.0, 1.0]), np.zeros(2, dtype=np.int8)) == 1.0

    def test_complement_flips_sign(self):
        rng = np.random.default_rng(60)
        for _ in range(100):
            alpha = rng.normal(size=8)
            b = rng.integers(0, 2, 8)
            assert r_metric(alpha, b) == pytest.approx(-r_metric(alpha, 1 - b))

    def test_hand_value(self):
        assert r_metric(np.array([2.0, -0.5]), np.array([0, 0])) == pytest.approx(0.75)

    def test_bounded_by_max_abs_llr(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            alpha = rng.normal(scale=4, size=6)
            b = rng.integers(0, 2, 6)
            assert abs(r_metric(alpha, b)) <= np.abs(alpha).max() + 1e-12


class TestLogPhiHat:
    def test_complete_path_is_minus_q(self, spec8):
        tree = build_sub_polar_tree(spec8, 1)
        lk = residual_log_kappa(tree, tree.m_count)
        assert log_phi_hat(2.25, lk) == pytest.approx(-2.25)

    def test_fig3_level2_zero_q(self, spec8):
        tree = build_sub_polar_tree(spec8, 1)
        assert log_phi_hat(0.0, residual_log_kappa(tree, 2)) == pytest.approx(0.0)


def f_naive(a, b):
    return np.log((1 + np.exp(a + b)) / (np.exp(a) + np.exp(b)))


def forced_walk(tree, llrs, segments):
    """Reference Q accumulation along a forced path (naive kernels)."""
    leaf_by_start = {lf.node.start0: lf for lf in tree.leaves}
    alphas = {}

    def walk(alpha, start):
        lf = leaf_by_start.get(start)
        if lf is not None and lf.length == alpha.size:
            alphas[lf.index_r] = alpha.copy()
            return np.asarray(segments[lf.index_r - 1], dtype=np.int8)
        half = alpha.size // 2
        bl = walk(f_naive(alpha[:half], alpha[half:]), start)
        br = walk(alpha[half:] + (1 - 2 * bl) * alpha[:half], start + half)
        return np.concatenate([bl ^ br, br])

    walk(np.asarray(llrs, dtype=np.float64), 0)
    q, qs = 0.0, [0.0]
    for r in range(1, tree.m_count + 1):
        w = np.asarray(segments[r - 1], dtype=np.float64)
        q += np.logaddexp(0.0, -(1 - 2 * w) * alphas[r]).sum()
        qs.append(q)
    return qs


def all_valid_paths(spec, tree):
    from polarlab.encode import encode

    paths = []
    k = spec.k_dim
    for m in range(1 << k):
        payload = np.array([(m >> s) & 1 for s in range(k - 1, -1, -1)], dtype=np.int8)
        v = encode(payload, spec).v_seq
        paths.append(
            [
                polar_transform(v[lf.node.start0 : lf.node.start0 + lf.length])
                for lf in tree.leaves
            ]
        )
    return paths


class TestCompletionSumOracle:
    def test_symmetric_fixture_exact(self, spec8):
        # all-zero LLRs make every completion equally likely, so the
        # equal-probability premise holds exactly
        tree = build_sub_polar_tree(spec8, 1)
        paths = all_valid_paths(spec8, tree)
        llr = np.zeros(8)
        full_q = {tuple(map(tuple, p)): forced_walk(tree, llr, p)[-1] for p in paths}
        for r in range(1, tree.m_count + 1):
            for p in paths:
                prefix = tuple(map(tuple, p[:r]))
                exact = sum(
                    np.exp(-q) for key, q in full_q.items() if key[:r] == prefix
                )
                approx = np.exp(
                    log_phi_hat(forced_walk(tree, llr, p)[r], residual_log_kappa(tree, r))
                )
                assert approx == pytest.approx(exact, rel=1e-12)

    def test_random_llrs_within_factor_two(self, spec8):
        # low-SNR-like magnitudes; the premise degrades as LLRs grow
        tree = build_sub_polar_tree(spec8, 1)
        paths = all_valid_paths(spec8, tree)
        rng = np.random.default_rng(3)
        for _ in range(20):
            llr = rng.normal(loc=0.8, scale=0.6, size=8) * rng.choice([-1, 1], 8)
            full_q = {tuple(map(tuple, p)): forced_walk(tree, llr, p)[-1] for p in paths}
            for r in range(1, tree.m_count + 1):
                for p in paths:
                    prefix = tuple(map(tuple, p[:r]))
                    exact = sum(
                        np.exp(-q) for key, q in full_q.items() if key[:r] == prefix
                    )
                    approx = np.exp(
                        log_phi_hat(
                            forced_walk(tree, llr, p)[r], residual_log_kappa(tree, r)
                        )
                    )
                    assert exact / 2 <= approx <= exact * 2


class TestSelectMinList:
    def make_cfg(self, spec8, eps_tol, cap=8):
        return LcConfig(thresholds=table_for(spec8, 1, 0.0, eps_tol), list_cap=cap)

    def test_two_path_hand_example(self, spec8):
        # two survivors carrying 99.95% / 0.05% of the mass, eta = 0.999:
        # the first alone reaches the threshold (kept clear of the exact
        # Gamma == eta boundary, which float rounding can tip either way)
        cfg = self.make_cfg(spec8, 1e-3)
        c = 5.0
        log_phi = np.array([np.log(0.9995) + c, np.log(0.0005) + c])
        k, mass = select_min_list(log_phi, -inf, DiscardedMass(), cfg)
        assert k == 1
        assert mass.log_d == pytest.approx(np.log(0.0005) + c)

    def test_threshold_one_unreachable(self, spec8):
        cfg = self.make_cfg(spec8, 0.0, cap=2)  # eta_selection == 1
        log_phi = np.array([0.0, -0.1, -0.2])
        k, _ = select_min_list(log_phi, np.log(0.5), DiscardedMass(), cfg)
        assert k == 2  # keep min(L, all)

    def test_keeps_all_when_threshold_never_reached(self, spec8):
        cfg = self.make_cfg(spec8, 1e-6, cap=8)
        # large prior discarded mass dominates: no prefix reaches eta
        log_phi = np.array([0.0, -0.5, -1.0])
        k, _ = select_min_list(log_phi, -inf, DiscardedMass(10.0), cfg)
        assert k == 3

    def test_full_set_gamma_is_one(self, spec8):
        cfg = self.make_cfg(spec8, 1e-9)
        log_phi = np.array([-1.0, -2.0, -3.5])
        total = np.logaddexp.reduce(log_phi)
        gamma_full = np.exp(np.logaddexp.reduce(log_phi) - total)
        assert gamma_full == 1.0
        k, _ = select_min_list(log_phi, -inf, DiscardedMass(), cfg)
        assert k == 3  # eta = 1 - 1e-9 needs essentially everything

    def test_prefix_beats_every_same_size_subset(self, spec8):
        # among all subsets of size m, the m smallest-Q paths maximize
        # Gamma: exhaustive check
        rng = np.random.default_rng(62)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            log_phi = np.sort(rng.normal(size=n))[::-1]  # descending = Q ascending
            denom_extra = float(rng.normal())
            total = np.logaddexp(np.logaddexp.reduce(log_phi), denom_extra)
            for m in range(1, n + 1):
                prefix = np.logaddexp.reduce(log_phi[:m])
                for subset in itertools.combinations(range(n), m):
                    val = np.logaddexp.reduce(log_phi[list(subset)])
                    assert prefix >= val - 1e-12

    def test_discarded_mass_monotone(self):
        mass = DiscardedMass()
        seen = [mass.log_d]
        for x in (-5.0, -np.inf, -1.0, 0.3):
            mass = mass.absorb(x)
            seen.append(mass.log_d)
        assert all(b >= a for a, b in zip(seen, seen[1:]))


class TestLcPsclDecode:
    def test_strategies_off_equals_pscl(self, spec128):
        params = ChannelParams(ebn0_db=2.0, rate=0.5)
        cfg = LcConfig(
            thresholds=table_for(spec128, 2, 2.0, 1e-3),
            list_cap=8,
            enable_pruning=False,
            enable_selection=False,
        )
        for i in range(100):
            _, _, llr = make_frame(spec128, params, 63, i)
            c1, c2 = Counters(), Counters()
            o1 = pscl_decode(llr, spec128, 2, 8, c1)
            o2 = lc_pscl_decode(llr, spec128, 2, cfg, c2)
            assert np.array_equal(o1.v_hat, o2.v_hat)
            assert c1.flops.total == c2.flops.total
            assert c1.sorts.total_sorted_paths == c2.sorts.total_sorted_paths
            assert c1.sorts.per_step == c2.sorts.per_step

    def test_eps_tol_zero_limit_equals_pscl(self, spec128):
        params = ChannelParams(ebn0_db=2.0, rate=0.5)
        cfg = LcConfig(thresholds=table_for(spec128, 2, 2.0, 0.0), list_cap=8)
        for i in range(300):
            _, _, llr = make_frame(spec128, params, 64, i)
            c1, c2 = Counters(), Counters()
            o1 = pscl_decode(llr, spec128, 2, 8, c1)
            o2 = lc_pscl_decode(llr, spec128, 2, cfg, c2)
            assert np.array_equal(o1.v_hat, o2.v_hat)
            assert c1.flops.total == c2.flops.total
            assert c1.sorts.total_sorted_paths == c2.sorts.total_sorted_paths

    def test_aggressive_eps_causes_premature_termination(self, spec128):
        params = ChannelParams(ebn0_db=2.0, rate=0.5)
        cfg = LcConfig(thresholds=table_for(spec128, 2, 2.0, 0.5), list_cap=8)
        statuses = set()
        for i in range(300):
            _, _, llr = make_frame(spec128, params, 65, i)
            statuses.add(lc_pscl_decode(llr, spec128, 2, cfg, Counters()).status)
        assert "premature_termination" in statuses

    def test_kept_never_exceeds_pscl(self, spec128):
        params = ChannelParams(ebn0_db=2.0, rate=0.5)
        cfg = LcConfig(thresholds=table_for(spec128, 2, 2.0, 1e-4), list_cap=8)
        plan = _subtree_plan(spec128, 2)
        for i in range(40):
            _, _, llr = make_frame(spec128, params, 66, i)
            kept_pscl, kept_lc = [], []
            list_decode(
                llr, spec128, plan, 8,
                trace_hook=lambda lvl, w, q: kept_pscl.append(len(q)),
            )
            list_decode(
                llr, spec128, plan, 8, lc_cfg=cfg,
                trace_hook=lambda lvl, w, q: kept_lc.append(len(q)),
            )
            assert all(n <= 8 for n in kept_lc)
            for a, b in zip(kept_lc, kept_pscl):
                assert a <= b

    def test_threshold_table_mismatch_rejected(self, spec128):
        cfg = LcConfig(thresholds=table_for(spec128, 2, 2.0, 1e-3), list_cap=8)
        with pytest.raises(ValueError):
            lc_pscl_decode(np.zeros(128), spec128, 3, cfg)
