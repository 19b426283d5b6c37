import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anomalyd.scoring import (
    PROFILES,
    ScoreProfile,
    build_windows,
    normalize_corpus,
    perfect_flags,
    scaled_sigmoid,
    score_corpus,
    score_file,
    write_report,
)

STD = PROFILES["standard"]


def stamps(T, step=300):
    return np.arange(T, dtype=np.int64) * step


def merge_oracle(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


class TestBuildWindows:
    def test_no_labels(self):
        ws = build_windows([], stamps(200))
        assert len(ws) == 0
        assert ws.probation_index == 30
        assert ws.probation_end == 30 * 300

    def test_single_centered(self):
        ts = stamps(1000)
        ws = build_windows([ts[500]], ts, 0.10)
        (a, b), = ws.index_windows
        assert b - a + 1 == 100
        assert a <= 500 <= b and abs((a + b) / 2 - 500) <= 0.5
        assert ws.windows == ((int(ts[a]), int(ts[b])),)

    def test_overlapping_merge(self):
        ts = stamps(1000)
        ws = build_windows([ts[500], ts[520]], ts, 0.10)
        width = int(0.10 * 1000 / 2)
        raw = [(c - width // 2, c - width // 2 + width - 1) for c in (500, 520)]
        assert list(ws.index_windows) == merge_oracle(raw)
        assert len(ws) == 1

    def test_clipped_to_series(self):
        ts = stamps(100)
        ws = build_windows([ts[1]], ts, 0.2)
        assert ws.index_windows[0][0] == 0

    def test_label_outside(self):
        with pytest.raises(ValueError, match="outside"):
            build_windows([10**9], stamps(100))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 499), min_size=1, max_size=8))
    def test_windows_disjoint_and_inside(self, idx):
        ts = stamps(500)
        ws = build_windows([ts[i] for i in idx], ts)
        spans = ws.index_windows
        assert all(0 <= a <= b < 500 for a, b in spans)
        assert all(b0 < a1 for (_, b0), (a1, _) in zip(spans, spans[1:]))
        for i in idx:
            assert any(a <= i <= b for a, b in spans)


class TestScaledSigmoid:
    def test_midpoint(self):
        assert scaled_sigmoid(0.0) == 0.0

    def test_left_end(self):
        assert scaled_sigmoid(-1.0) == pytest.approx(2 / (1 + math.exp(-5)) - 1, abs=1e-15)
        assert abs(scaled_sigmoid(-1.0) - 0.98661) < 1e-5

    def test_far_false_positive(self):
        assert scaled_sigmoid(3.0) == pytest.approx(2 / (1 + math.exp(15)) - 1, abs=1e-15)
        assert abs(scaled_sigmoid(3.0) + 0.99999) < 1e-5

    def test_saturates(self):
        assert scaled_sigmoid(50.0) == -1.0

    def test_monotone(self):
        ys = np.linspace(-5, 3, 200)
        vals = [scaled_sigmoid(y) for y in ys]
        assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.fixture
def one_window():
    ts = stamps(1000)
    return build_windows([ts[500]], ts, 0.10, 0.15)


class TestScoreFile:
    def test_pure_miss(self, one_window):
        fs = score_file(np.zeros(1000, bool), one_window, STD)
        assert fs.raw == -STD.fn_weight and fs.fn == 1

    def test_left_end_detection(self, one_window):
        flags = np.zeros(1000, bool)
        flags[one_window.index_windows[0][0]] = True
        fs = score_file(flags, one_window, STD)
        assert fs.raw == pytest.approx(scaled_sigmoid(-1.0), abs=1e-15)
        assert abs(fs.raw - 0.98661) < 1e-5
        assert (fs.tp, fs.fp, fs.fn) == (1, 0, 0)

    def test_probation_only(self):
        ws = build_windows([], stamps(1000))
        flags = np.zeros(1000, bool)
        flags[:100] = True
        fs = score_file(flags, ws, STD)
        assert fs.raw == 0.0 and (fs.tp, fs.fp, fs.fn) == (0, 0, 0)

    def test_fp_before_any_window(self, one_window):
        flags = np.zeros(1000, bool)
        flags[200] = True
        fs = score_file(flags, one_window, STD)
        assert fs.raw == pytest.approx(-STD.fp_weight - STD.fn_weight)
        assert fs.fp == 1

    def test_fp_after_window_uses_distance(self, one_window):
        a, b = one_window.index_windows[0]
        flags = np.zeros(1000, bool)
        flags[b + 20] = True
        fs = score_file(flags, one_window, STD)
        expected = STD.fp_weight * (2 / (1 + math.exp(5 * 20 / (b - a))) - 1) - STD.fn_weight
        assert fs.raw == pytest.approx(expected, abs=1e-15)

    def test_only_first_detection_counts(self, one_window):
        a, _ = one_window.index_windows[0]
        flags = np.zeros(1000, bool)
        flags[a + 10] = True
        once = score_file(flags, one_window, STD).raw
        flags[a + 11: a + 40] = True
        assert score_file(flags, one_window, STD).raw == once

    def test_length_mismatch(self, one_window):
        with pytest.raises(ValueError):
            score_file(np.zeros(10, bool), one_window, STD)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 99), st.integers(0, 99))
    def test_earlier_never_worse(self, i, j):
        ts = stamps(1000)
        ws = build_windows([ts[500]], ts)
        a, _ = ws.index_windows[0]
        early, late = sorted((i, j))
        f1 = np.zeros(1000, bool)
        f1[a + early] = True
        f2 = np.zeros(1000, bool)
        f2[a + late] = True
        assert score_file(f1, ws, STD).raw >= score_file(f2, ws, STD).raw

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(150, 999), max_size=10), st.integers(150, 999))
    def test_extra_detection_never_helps_outside(self, base, extra):
        ts = stamps(1000)
        ws = build_windows([ts[500]], ts)
        a, b = ws.index_windows[0]
        flags = np.zeros(1000, bool)
        flags[base] = True
        before = score_file(flags, ws, STD).raw
        if flags[extra]:
            return
        flags[extra] = True
        after = score_file(flags, ws, STD).raw
        if a <= extra <= b:
            if any(a <= i <= b and i < extra for i in base):
                assert after == before
        else:
            assert after <= before

    def test_profiles(self):
        assert PROFILES["standard"] == ScoreProfile(1.0, 0.11, 1.0)
        assert PROFILES["reward_low_FP_rate"] == ScoreProfile(1.0, 0.22, 1.0)
        assert PROFILES["reward_low_FN_rate"] == ScoreProfile(1.0, 0.11, 2.0)
        with pytest.raises(ValueError):
            ScoreProfile(-1.0, 0.1, 1.0)


class TestNormalize:
    def test_null(self):
        assert normalize_corpus(-3.0, 2.0, -3.0) == 0.0

    def test_perfect(self):
        assert normalize_corpus(2.0, 2.0, -3.0) == 100.0

    def test_midway(self):
        assert normalize_corpus(-0.5, 2.0, -3.0) == 50.0

    def test_degenerate(self):
        with pytest.raises(ValueError):
            normalize_corpus(0.0, 0.0, 0.0)


def random_corpus(seed, n_files=3):
    rng = np.random.default_rng(seed)
    files = {}
    for k in range(n_files):
        T = int(rng.integers(300, 1500))
        ts = stamps(T)
        labs = sorted(rng.choice(np.arange(int(0.2 * T), T), size=int(rng.integers(1, 4)), replace=False))
        files[f"f{k}.csv"] = build_windows([ts[i] for i in labs], ts)
    return files


class TestCorpus:
    @pytest.mark.parametrize("profile", list(PROFILES))
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_perfect_and_null(self, profile, seed):
        wins = random_corpus(seed)
        perfect = score_corpus({k: (perfect_flags(w), w) for k, w in wins.items()}, profile)
        null = score_corpus({k: (np.zeros(len(w.timestamps), bool), w) for k, w in wins.items()}, profile)
        assert perfect.normalized == 100.0
        assert null.normalized == 0.0

    def test_report_text(self):
        wins = random_corpus(0)
        reps = [score_corpus({k: (perfect_flags(w), w) for k, w in wins.items()}, p) for p in PROFILES]
        text = write_report(reps, header=["note"])
        assert text.startswith("# note\nprofile,file,raw_score,tp,fp,fn\n")
        assert text.count("# summary") == 3
        assert "normalized=100.0000" in text
