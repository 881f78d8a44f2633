"""End-to-end acceptance criteria.

Each test prints one ``[criterion N] PASS|FAIL ...`` line. Criteria 4 and 5
run the beam search and Monte Carlo simulations and take several minutes.
"""

import math
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from ldpc_prune.codec import Decoder, Encoder
from ldpc_prune.pexit import J, J_inv, ThresholdQuery, pattern_threshold, pexit_converges, threshold
from ldpc_prune.protograph import BaseMatrix, lift, load_base_matrix, rescale
from ldpc_prune.pruning import PruningPattern, bit_schedule, load_pattern, sub_pattern
from ldpc_prune.search import SearchConfig, evaluate_patterns, run_search, stage1_candidates
from ldpc_prune.sim import SimPlan, run_sim

TOL_DB = 0.05

# threshold tables: gamma_{a;a} for a = 1..4
OPT_11N_R12 = [0.571, 0.544, 0.497, 0.461]
IEEE_11N_R12 = [0.667, 0.720, 0.780, 0.967]

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(capsys, number, label):
    notes = []
    try:
        yield notes
    except AssertionError as exc:
        with capsys.disabled():
            print(f"\n[criterion {number}] FAIL {label}: {'; '.join(notes)} | {exc}".rstrip())
        raise
    with capsys.disabled():
        print(f"\n[criterion {number}] PASS {label}: {'; '.join(notes)}")


def close(value, target):
    return abs(value - target) <= TOL_DB


def test_criterion_1_unpruned_thresholds(capsys):
    with criterion(capsys, 1, "unpruned thresholds") as notes:
        r12 = threshold(ThresholdQuery(load_base_matrix("11n_z81_r12.bm"), Fraction(1, 2)))
        r23 = threshold(ThresholdQuery(load_base_matrix("11n_z81_r23.bm"), Fraction(2, 3)))
        notes.append(f"11n R1/2 {r12.threshold_db:.3f} dB (0.626)")
        notes.append(f"11n R2/3 {r23.threshold_db:.3f} dB (1.472)")
        assert close(r12.threshold_db, 0.626), "11n R1/2 outside tolerance"
        assert close(r23.threshold_db, 1.472), "R2/3 outside tolerance"


def test_criterion_2_table_patterns(capsys, h11n_r12):
    with criterion(capsys, 2, "pruned-pattern thresholds") as notes:
        opt, ieee = load_pattern("opt_11n_r12"), load_pattern("ieee_11n_r12")
        bad = []
        for a in range(1, 5):
            go = pattern_threshold(h11n_r12, sub_pattern(opt, a, a)).threshold_db
            gi = pattern_threshold(h11n_r12, sub_pattern(ieee, a, a)).threshold_db
            notes.append(f"{{{a};{a}}} opt {go:.3f} ({OPT_11N_R12[a - 1]}) 11n {gi:.3f} ({IEEE_11N_R12[a - 1]})")
            if not close(go, OPT_11N_R12[a - 1]):
                bad.append(f"opt {a} off")
            if not close(gi, IEEE_11N_R12[a - 1]):
                bad.append(f"11n {a} off")
            if not go < gi:
                bad.append(f"ordering {a}")
        assert not bad, ", ".join(bad)


def test_criterion_3_cross_checks(capsys, h11n_r12):
    with criterion(capsys, 3, "reference-pattern cross-checks") as notes:
        bad = []
        o44 = pattern_threshold(h11n_r12, load_pattern("opt_11n_r12")).threshold_db
        l44 = pattern_threshold(h11n_r12, load_pattern("lw_11n_r12")).threshold_db
        notes.append(f"11n opt{{4;4}} {o44:.3f} (0.461) L&W{{4;4}} {l44:.3f} (0.922)")
        bad += [] if close(o44, 0.461) and close(l44, 0.922) and o44 < l44 else ["11n R1/2"]

        master = load_base_matrix("16e_r12.bm")
        opt06, lw06 = load_pattern("opt_16e_r12"), load_pattern("lw_16e_r12")
        o40 = pattern_threshold(rescale(master, 40), opt06)
        l40 = pattern_threshold(rescale(master, 40), lw06)
        assert o40.rate == Fraction(12, 18)
        notes.append(f"16e opt{{0;6}} {o40.threshold_db:.3f} (1.551) L&W{{0;6}} {l40.threshold_db:.3f} (1.573)")
        ok16 = close(o40.threshold_db, 1.551) and close(l40.threshold_db, 1.573)
        bad += [] if ok16 and o40.threshold_db < l40.threshold_db else ["16e R1/2"]

        o81 = pattern_threshold(rescale(master, 81), opt06).threshold_db
        l81 = pattern_threshold(rescale(master, 81), lw06).threshold_db
        notes.append("Z=40 and Z=81 identical" if (o81, l81) == (o40.threshold_db, l40.threshold_db) else "Z mismatch")
        bad += [] if (o81, l81) == (o40.threshold_db, l40.threshold_db) else ["Z invariance"]
        assert not bad, ", ".join(bad)


def test_criterion_4_search(capsys, h11n_r12):
    with criterion(capsys, 4, "search reproduction") as notes:
        one = run_search(SearchConfig(h11n_r12, 1, beam=1))
        cands = stage1_candidates(h11n_r12)
        thr = evaluate_patterns(h11n_r12, [PruningPattern([s], [p]) for s, p in cands])
        brute = cands[int(np.argmin(thr))]
        notes.append(f"T=1 tau=1 {one.trace(0)} {one.best.threshold_db:.3f} dB, brute force {brute} over {len(cands)}")
        assert len(cands) == 276
        assert one.best.threshold_db == thr.min() and one.trace(0) == PruningPattern([brute[0]], [brute[1]])

        res = run_search(SearchConfig(h11n_r12, 4, beam=8))
        best = res.best.threshold_db
        notes.append(f"T=4 tau=8 best {res.trace(0)} at {best:.3f} dB (target <= 0.47)")
        assert best <= 0.47, "recommended pattern above 0.47 dB"


def _fer_pair(bm, pat_a, pat_b, alpha, beta, snr, frames, seed):
    out = []
    for pat in (pat_a, pat_b):
        plan = SimPlan.from_prefix(
            bm, load_pattern(pat), alpha, beta, (snr,),
            max_frames=frames, min_frame_errors=10**9, seed=seed,
        )
        out.append(run_sim(plan)[0])
    return out


# (label, base, Z, pattern A, pattern B, alpha, beta, Eb/N0, frames, strict)
SIM_CASES = [
    ("11n R1/2 {4;4}", "11n_z81_r12.bm", 81, "opt_11n_r12", "ieee_11n_r12", 4, 4, 1.0, 1000, True),
    ("11n R2/3 {4;2}", "11n_z81_r23.bm", 81, "opt_11n_r23", "ieee_11n_r23", 4, 2, 1.75, 1000, True),
    ("16e Z40 R1/2 {0;6}", "16e_r12.bm", 40, "opt_16e_r12", "lw_16e_r12", 0, 6, 2.25, 4000, False),
]


def test_criterion_5_simulation_ordering(capsys):
    with criterion(capsys, 5, "simulation FER ordering") as notes:
        bad = []
        for label, name, z, pa, pb, a, b, snr, frames, strict in SIM_CASES:
            bm = load_base_matrix(name)
            if bm.z != z:
                bm = rescale(bm, z)
            opt, ref = _fer_pair(bm, pa, pb, a, b, snr, frames, seed=2024)
            notes.append(
                f"{label} @ {snr} dB: opt {opt.frame_errors}/{opt.frames} vs ref {ref.frame_errors}/{ref.frames}"
            )
            if min(opt.frame_errors, ref.frame_errors) < 100:
                bad.append(f"{label} too few frame errors")
            ordered = opt.fer < ref.fer if strict else opt.fer <= ref.fer
            if not ordered:
                bad.append(f"{label} ordering")
        assert not bad, ", ".join(bad)


def test_criterion_6_properties(capsys, h11n_r12, h16e_r12_z40):
    with criterion(capsys, 6, "property suites") as notes:
        s = np.linspace(0.0, 10.0, 20001)
        assert J(0.0) == 0.0 and (np.diff(J(s)) > 0).all(), "J not monotone"
        grid = np.linspace(0.02, 10.0, 5000)
        assert np.abs(J_inv(J(grid)) - grid).max() <= 1e-6, "J_inv(J) off"
        notes.append("J")

        q = ThresholdQuery(h11n_r12, Fraction(1, 2))
        flags = [pexit_converges(q, x)[0] for x in np.round(np.arange(0.0, 2.0, 0.05), 3)]
        assert flags == sorted(flags), "PEXIT convergence not monotone"
        notes.append("PEXIT monotone")

        h = lift(h11n_r12).toarray().reshape(12, 81, 24, 81)
        for i in range(12):
            for j in range(24):
                blk = h[i, :, j, :]
                if h11n_r12.entries[i, j] < 0:
                    assert not blk.any()
                else:
                    assert (blk.sum(0) == 1).all() and (blk.sum(1) == 1).all()
        notes.append("lifting blocks")

        enc = Encoder.from_base(h11n_r12)
        rng = np.random.default_rng(0)
        u = rng.integers(0, 2, (10_000, 972), dtype=np.uint8)
        cw = enc.encode(u)
        hd = lift(h11n_r12).toarray().astype(np.float32)
        assert not ((cw.astype(np.float32) @ hd.T).astype(np.int64) & 1).any(), "H c != 0"
        np.testing.assert_array_equal(cw[0] ^ cw[1], enc.encode(u[0] ^ u[1]))
        notes.append("encoder on 10^4 frames")

        bits, ok, it = Decoder(lift(h11n_r12)).decode(30.0 * (1.0 - 2.0 * cw[:32]))
        assert (bits == cw[:32]).all() and ok.all() and (it <= 1).all(), "decoder fixed point"
        notes.append("decoder fixed point")

        pat = PruningPattern(range(1, 13), range(13, 24))
        for _ in range(1000):
            z = int(rng.integers(1, 100))
            n_s, n_p = int(rng.integers(0, 12 * z + 1)), int(rng.integers(0, 11 * z + 1))
            sched = bit_schedule(pat, BaseMatrix(np.zeros((12, 24), dtype=int), z), n_s, n_p)
            assert (sched.alpha, sched.beta) == (math.ceil(n_s / z), math.ceil(n_p / z))
            assert sched.shortened_bits().size == n_s and sched.punctured_bits().size == n_p
        notes.append("bit_schedule 1000 triples")

        kw = dict(max_frames=96, min_frame_errors=10**9, batch=32, max_iter=30, seed=9)
        runs = [
            run_sim(SimPlan.from_prefix(h16e_r12_z40, load_pattern("opt_16e_r12"), 0, 6, (1.0,), threads=t, **kw))
            for t in (1, 4)
        ]
        assert runs[0] == runs[1], "simulation differs across thread counts"
        notes.append("sim determinism 1 vs 4 threads")
