import numpy as np
import pytest

from polarlab.channel import ChannelParams
from polarlab.codes import CRC11_POLY, attach_crc, build_code_spec
from polarlab.decode_list import (
    Counters,
    _subtree_plan,
    extend_metric,
    finalize,
    list_decode,
    pscl_decode,
    scl_decode,
)
from polarlab.decode_sc import psc_decode, sc_decode
from polarlab.encode import polar_transform

from conftest import make_frame
from test_encode import kron_generator

LN2 = float(np.log(2.0))


def all_codewords(spec):
    gn = kron_generator(spec.n_block)
    rows = gn[spec.active_idx0()]
    k = spec.k_dim
    msgs = ((np.arange(1 << k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)
    return (msgs @ rows) % 2


def channel_penalty(codewords, llr):
    """Exact per-codeword negative log-likelihood up to a constant."""
    return np.logaddexp(0.0, -(1.0 - 2.0 * codewords) * llr).sum(axis=1)


class TestExtendMetric:
    def test_zero_llrs_add_ln2_per_bit(self):
        q = extend_metric(1.5, np.zeros(6), np.zeros(6, dtype=np.int8))
        assert q == pytest.approx(1.5 + 6 * LN2)

    def test_matched_sign_huge_llr_adds_nothing(self):
        q = extend_metric(0.0, np.array([1e4, -1e4]), np.array([0, 1]))
        assert q == pytest.approx(0.0, abs=1e-12)

    def test_single_bit_value(self):
        assert extend_metric(0.0, np.array([1.0]), np.array([1])) == pytest.approx(
            np.log1p(np.e), abs=1e-12
        )

    def test_increments_nonnegative(self):
        rng = np.random.default_rng(40)
        for _ in range(200):
            alpha = rng.normal(scale=8, size=4)
            b = rng.integers(0, 2, 4)
            assert extend_metric(0.0, alpha, b) >= 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            extend_metric(0.0, np.zeros(3), np.zeros(2, dtype=np.int8))


class TestDegenerations:
    def test_scl1_equals_sc(self, spec8, spec128):
        params8 = ChannelParams(ebn0_db=0.0, rate=0.5)
        params128 = ChannelParams(ebn0_db=1.0, rate=0.5)
        for spec, params in ((spec8, params8), (spec128, params128)):
            for i in range(200):
                _, _, llr = make_frame(spec, params, 41, i)
                assert np.array_equal(
                    scl_decode(llr, spec, 1).v_hat, sc_decode(llr, spec)
                )

    @pytest.mark.parametrize("tau", [1, 2])
    def test_pscl1_equals_psc(self, spec128, tau):
        params = ChannelParams(ebn0_db=1.0, rate=0.5)
        for i in range(200):
            _, _, llr = make_frame(spec128, params, 42, i)
            assert np.array_equal(
                pscl_decode(llr, spec128, tau, 1).v_hat, psc_decode(llr, spec128, tau)
            )

    def test_pscl1_equals_psc_pac(self):
        spec = build_code_spec(64, 32, "reed_muller", kind="pac")
        params = ChannelParams(ebn0_db=1.5, rate=0.5)
        for i in range(150):
            _, _, llr = make_frame(spec, params, 43, i)
            assert np.array_equal(
                pscl_decode(llr, spec, 2, 1).v_hat, psc_decode(llr, spec, 2)
            )

    def test_all_frozen_single_path(self):
        spec = build_code_spec(8, 0, "fiveg")
        out = scl_decode(np.random.default_rng(0).normal(size=8), spec, 4)
        assert out.status == "ok"
        assert not out.v_hat.any()
        assert len(out.snapshot) == 1


class TestMlOracle:
    def test_full_list_is_ml(self, spec8):
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        cws = all_codewords(spec8)
        ties = 0
        for i in range(1500):
            _, _, llr = make_frame(spec8, params, 44, i)
            pen = channel_penalty(cws, llr)
            best = np.sort(pen)
            if best[1] - best[0] < 1e-9:
                ties += 1
                continue
            ml = cws[np.argmin(pen)]
            for out in (
                scl_decode(llr, spec8, 16),
                pscl_decode(llr, spec8, 1, 16),
            ):
                assert np.array_equal(polar_transform(out.v_hat), ml)
        assert ties < 100

    def test_final_list_is_all_valid_paths(self, spec8):
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        _, _, llr = make_frame(spec8, params, 45, 0)
        out = pscl_decode(llr, spec8, 1, 16)
        assert len(out.snapshot) == 16
        cws = {tuple(c) for c in all_codewords(spec8)}
        assert {tuple(polar_transform(v)) for _, v in out.snapshot} == cws

    def test_q_equals_channel_penalty(self, spec8):
        # exp(-Q_complete) is proportional to the true path likelihood
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        cws = all_codewords(spec8)
        for i in range(100):
            _, _, llr = make_frame(spec8, params, 46, i)
            pen = channel_penalty(cws, llr)
            out = scl_decode(llr, spec8, 16)
            for q, v in out.snapshot:
                cw = polar_transform(v)
                j = np.flatnonzero((cws == cw).all(axis=1))[0]
                assert q == pytest.approx(pen[j], abs=1e-9)


class TestSortCounter:
    def test_zero_when_list_never_exceeded(self, spec8):
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        _, _, llr = make_frame(spec8, params, 47, 0)
        ctrs = Counters()
        pscl_decode(llr, spec8, 1, 16, ctrs)
        assert ctrs.sorts.total_sorted_paths == 0

    def test_counts_candidates_entering_sort(self, spec8):
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        _, _, llr = make_frame(spec8, params, 47, 1)
        ctrs = Counters()
        pscl_decode(llr, spec8, 1, 2, ctrs)
        # walk: 2 paths after leaf 1, 4 after leaf 2 (sort 4), then 4
        # candidates at each single-bit leaf (sort 4 twice)
        assert ctrs.sorts.total_sorted_paths == 12
        assert ctrs.sorts.per_step == {2: [4, 1], 3: [4, 1], 4: [4, 1]}

    def test_q_nondecreasing_along_paths(self, spec128):
        params = ChannelParams(ebn0_db=2.0, rate=0.5)
        seen = []

        def hook(level, words, q):
            seen.append(q.min())

        _, _, llr = make_frame(spec128, params, 48, 0)
        plan = _subtree_plan(spec128, 2)
        list_decode(llr, spec128, plan, 8, trace_hook=hook)
        assert all(b >= a - 1e-12 for a, b in zip(seen, seen[1:]))


class TestPsclWalkthrough:
    def test_first_two_levels(self, spec8):
        params = ChannelParams(ebn0_db=0.0, rate=0.5)
        _, _, llr = make_frame(spec8, params, 49, 3)
        levels = {}

        def hook(level, words, q):
            levels[level] = [tuple(w) for w in words]

        plan = _subtree_plan(spec8, 1)
        list_decode(llr, spec8, plan, 2, trace_hook=hook)
        assert set(levels[1]) == {(0, 0, 0, 0), (1, 1, 1, 1)}
        assert len(levels[2]) == 2  # two of the four valid paths survive
        assert set(levels[2]) <= {(0, 0), (1, 1)}


class TestFinalize:
    def test_single_path(self, spec8):
        v = np.zeros(8, dtype=np.int8)
        v_hat, payload, status = finalize([(0.7, v, None)], spec8)
        assert status == "ok"
        assert np.array_equal(v_hat, v)
        assert payload.tolist() == [0, 0, 0, 0]

    def test_min_q_selection(self, spec8):
        v1 = np.zeros(8, dtype=np.int8)
        v2 = np.ones(8, dtype=np.int8)
        v_hat, _, status = finalize([(3.2, v1, None), (1.1, v2, None)], spec8)
        assert np.array_equal(v_hat, v2)
        assert status == "ok"

    def test_crc_filter_prefers_valid_path(self):
        spec = build_code_spec(64, 32, "fiveg", kind="crc_polar")
        payload = np.arange(21, dtype=np.int8) % 2
        occupied = attach_crc(payload, CRC11_POLY)
        good = np.zeros(64, dtype=np.int8)
        good[spec.active_idx0()] = occupied
        bad = good.copy()
        bad[spec.active_idx0()[0]] ^= 1  # breaks the CRC
        v_hat, payload_hat, status = finalize(
            [(1.1, bad, None), (3.2, good, None)], spec
        )
        assert status == "ok"
        assert np.array_equal(v_hat, good)
        assert np.array_equal(payload_hat, payload)

    def test_crc_best_effort_when_none_pass(self):
        spec = build_code_spec(64, 32, "fiveg", kind="crc_polar")
        bad1 = np.zeros(64, dtype=np.int8)
        bad1[spec.active_idx0()[0]] = 1
        bad2 = np.zeros(64, dtype=np.int8)
        bad2[spec.active_idx0()[1]] = 1
        v_hat, _, status = finalize([(2.0, bad1, None), (1.0, bad2, None)], spec)
        assert status == "crc_fail_best_effort"
        assert np.array_equal(v_hat, bad2)

    def test_empty_list_raises(self, spec8):
        with pytest.raises(ValueError):
            finalize([], spec8)


class TestCrcAndPacPipelines:
    def test_crc_scl_noiseless_round_trip(self):
        spec = build_code_spec(128, 64, "fiveg", kind="crc_polar")
        params = ChannelParams(ebn0_db=1.0, rate=0.5, noise_scale=0.0)
        for i in range(50):
            payload, _, llr = make_frame(spec, params, 50, i)
            out = scl_decode(llr, spec, 4)
            assert out.status == "ok"
            assert np.array_equal(out.payload_hat, payload)

    def test_pac_scl_noiseless_round_trip(self):
        spec = build_code_spec(128, 64, "reed_muller", kind="pac")
        params = ChannelParams(ebn0_db=1.0, rate=0.5, noise_scale=0.0)
        for i in range(50):
            payload, _, llr = make_frame(spec, params, 51, i)
            out = scl_decode(llr, spec, 4)
            assert np.array_equal(out.payload_hat, payload)

    def test_pac_pscl_beats_or_equals_pscl1(self):
        # list growth must help the PAC code under noise
        spec = build_code_spec(64, 32, "reed_muller", kind="pac")
        params = ChannelParams(ebn0_db=1.5, rate=0.5)
        err1 = err8 = 0
        for i in range(400):
            payload, _, llr = make_frame(spec, params, 52, i)
            err1 += not np.array_equal(pscl_decode(llr, spec, 2, 1).payload_hat, payload)
            err8 += not np.array_equal(pscl_decode(llr, spec, 2, 8).payload_hat, payload)
        assert err8 < err1
