import csv
import io
from fractions import Fraction

import numpy as np
import pytest

from ldpc_prune.codec import LLR_SAT
from ldpc_prune.pruning import PruningPattern, load_pattern
from ldpc_prune.sim import CSV_FIELDS, PlanError, SimPlan, SimPoint, _Link, parse_snr_range, run_sim, to_csv


def test_snr_range():
    assert parse_snr_range("1.0:0.25:2.0") == (1.0, 1.25, 1.5, 1.75, 2.0)
    assert parse_snr_range("1.5") == (1.5,)
    assert parse_snr_range("0:0.1:0.3") == (0.0, 0.1, 0.2, 0.3)
    with pytest.raises(PlanError):
        parse_snr_range("1:0:2")
    with pytest.raises(PlanError):
        parse_snr_range("1:2")


class TestPlan:
    def test_validation(self, h11n_r12):
        with pytest.raises(PlanError):
            SimPlan(h11n_r12, PruningPattern(), 0, 0, (1.0,), max_frames=0)
        with pytest.raises(PlanError):
            SimPlan(h11n_r12, PruningPattern(), 0, 0, ())
        with pytest.raises(ValueError):
            SimPlan(h11n_r12, PruningPattern([13], []), 81, 0, (1.0,))

    def test_r23_rate_and_length(self, h11n_r23):
        plan = SimPlan.from_prefix(h11n_r23, load_pattern("opt_11n_r23"), 4, 2, (2.0,))
        s = plan.schedule()
        assert s.rate_tx == Fraction(12, 18) == Fraction(2, 3)
        assert s.n_tx == 1458 < 1944


class TestLink:
    def test_energy_bookkeeping(self, h11n_r12):
        plan = SimPlan(h11n_r12, PruningPattern([1, 2, 8], [5, 9]), 200, 100, (1.0,))
        link = _Link(plan)
        assert link.tx.sum() == 24 * 81 - 200 - 100
        assert link.unknown.size == 972 - 200
        assert link.rate_tx == pytest.approx((972 - 200) / (1944 - 300))

    def test_frame_llrs(self, h11n_r12):
        plan = SimPlan(h11n_r12, PruningPattern([1], [5]), 81, 40, (1.0,))
        link = _Link(plan)
        info, llr = link.frames(0, 1.0, 0, 4)
        assert not info[:, :81].any()
        assert (llr[:, :81] == LLR_SAT).all()
        assert (llr[:, 4 * 81:4 * 81 + 40] == 0).all()
        assert (llr[:, 4 * 81 + 40:5 * 81] != 0).all()

    def test_frames_independent_of_batching(self, h11n_r12):
        link = _Link(SimPlan(h11n_r12, PruningPattern(), 0, 0, (1.0,)))
        info_a, llr_a = link.frames(0, 1.0, 0, 6)
        info_b, llr_b = link.frames(0, 1.0, 4, 2)
        np.testing.assert_array_equal(info_a[4:], info_b)
        np.testing.assert_array_equal(llr_a[4:], llr_b)

    def test_noise_variance(self, h11n_r12):
        # sigma^2 = 1 / (2 R Eb/N0) at R = 1/2 and 3 dB
        link = _Link(SimPlan(h11n_r12, PruningPattern(), 0, 0, (3.0,)))
        info, llr = link.frames(0, 3.0, 0, 200)
        aligned = llr * (1.0 - 2.0 * link.encoder.encode(info))
        sigma2 = 1.0 / 10 ** 0.3
        # sign-aligned channel LLRs are N(2/sigma^2, 4/sigma^2)
        assert aligned.mean() == pytest.approx(2.0 / sigma2, rel=0.01)
        assert aligned.var() == pytest.approx(4.0 / sigma2, rel=0.02)


class TestRun:
    def test_noiseless(self, h11n_r12):
        plan = SimPlan(
            h11n_r12, load_pattern("opt_11n_r12"), 324, 324, (-5.0, 0.0),
            max_frames=64, noiseless=True,
        )
        for pt in run_sim(plan):
            assert pt.frames == 64 and pt.ber == 0 and pt.fer == 0

    def test_thread_determinism(self, h16e_r12_z40):
        pat = load_pattern("opt_16e_r12")
        kw = dict(max_frames=96, min_frame_errors=10**6, batch=32, max_iter=30, seed=5)
        serial = run_sim(SimPlan.from_prefix(h16e_r12_z40, pat, 0, 6, (1.0, 1.5), threads=1, **kw))
        parallel = run_sim(SimPlan.from_prefix(h16e_r12_z40, pat, 0, 6, (1.0, 1.5), threads=4, **kw))
        assert serial == parallel
        assert serial[0].frame_errors > 0

    def test_seed_matters(self, h16e_r12_z40):
        kw = dict(max_frames=64, min_frame_errors=10**6, max_iter=20)
        a = run_sim(SimPlan(h16e_r12_z40, PruningPattern(), 0, 0, (0.5,), seed=1, **kw))
        b = run_sim(SimPlan(h16e_r12_z40, PruningPattern(), 0, 0, (0.5,), seed=2, **kw))
        assert a[0].bit_errors != b[0].bit_errors

    def test_stop_rule(self, h16e_r12_z40):
        plan = SimPlan(h16e_r12_z40, PruningPattern(), 0, 0, (-1.0,), min_frame_errors=10, batch=8)
        pt = run_sim(plan)[0]
        # stops at the first batch boundary after 10 frame errors
        assert 10 <= pt.frame_errors and pt.frames <= 16

    def test_csv(self):
        pts = [SimPoint(1.0, 100, 5, 2, 50, 0.5)]
        rows = list(csv.reader(io.StringIO(to_csv(pts))))
        assert rows[0] == CSV_FIELDS
        assert float(rows[1][4]) == pytest.approx(5 / 5000)
        assert float(rows[1][5]) == pytest.approx(0.02)
