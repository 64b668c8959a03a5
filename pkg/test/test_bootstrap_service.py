"""配对月份 bootstrap 测试"""
import numpy as np
import pytest

from src.core.errors import PreconditionError, ResampleExhaustedError
from src.core.models import ReturnPanel
from src.services.bootstrap_service import bootstrap_sr, pair_draw
from test.conftest import orthonormal_scores, periods_for, random_panel

THREE = {"TRUE": ["MKT", "A", "B"], "TWO": ["MKT", "A"], "CAPM": ["MKT"]}


class TestPairDraw:
    """配对抽样测试"""

    def test_partners(self):
        ins, oos = pair_draw(np.random.default_rng(3), 50)
        assert ins.shape == oos.shape == (50,)
        np.testing.assert_array_equal(ins // 2, oos // 2)
        assert np.all(ins != oos)
        assert ins.min() >= 0 and oos.max() < 100


class TestBootstrap:
    """bootstrap_sr 测试"""

    def test_identical_models_tie(self, planted_panel):
        report = bootstrap_sr(planted_panel, {"X": ["MKT", "A"], "Y": ["A", "MKT"]}, runs=20, seed=1)
        assert report.beat_ins[0, 1] == pytest.approx(50.0)
        assert report.tie_ins[0, 1] == pytest.approx(100.0)
        np.testing.assert_allclose(report.best_ins, [50.0, 50.0])
        assert report.tie_oos[0, 1] == pytest.approx(100.0)
        np.testing.assert_array_equal(report.mean_oos_sr2[0], report.mean_oos_sr2[1])

    def test_beat_matrix_complements(self, planted_panel):
        report = bootstrap_sr(planted_panel, THREE, runs=30, seed=2)
        for beat in (report.beat_ins, report.beat_oos):
            assert np.all(np.isnan(np.diag(beat)))
            off = ~np.eye(3, dtype=bool)
            np.testing.assert_allclose((beat + beat.T)[off], 100.0)
        assert report.best_ins.sum() == pytest.approx(100.0)
        assert report.best_oos.sum() == pytest.approx(100.0)

    def test_true_model_wins(self, planted_panel):
        report = bootstrap_sr(planted_panel, {"TRUE": ["MKT", "A", "B"], "CAPM": ["MKT"]},
                              runs=100, seed=3)
        assert report.beat_ins[0, 1] >= 99.0
        assert report.beat_oos[0, 1] >= 95.0
        assert report.mean_ins_sr2[0] > report.mean_ins_sr2[1]

    def test_deterministic(self, planted_panel):
        a = bootstrap_sr(planted_panel, THREE, runs=15, seed=9)
        b = bootstrap_sr(planted_panel, THREE, runs=15, seed=9)
        c = bootstrap_sr(planted_panel, THREE, runs=15, seed=10)
        np.testing.assert_array_equal(a.mean_oos_sr2, b.mean_oos_sr2)
        assert not np.array_equal(a.mean_oos_sr2, c.mean_oos_sr2)

    def test_threads_do_not_change_report(self, planted_panel):
        serial = bootstrap_sr(planted_panel, THREE, runs=25, seed=4, threads=1)
        threaded = bootstrap_sr(planted_panel, THREE, runs=25, seed=4, threads=4)
        np.testing.assert_array_equal(serial.mean_ins_sr2, threaded.mean_ins_sr2)
        np.testing.assert_array_equal(serial.beat_oos, threaded.beat_oos)
        np.testing.assert_array_equal(serial.best_oos, threaded.best_oos)

    def test_odd_length(self, rng):
        report = bootstrap_sr(random_panel(rng, 41, 3), {"M": ["MKT", "F01"]}, runs=5, seed=0)
        assert report.runs == 5
        assert report.model_names == ("M",)

    def test_too_short(self, rng):
        with pytest.raises(PreconditionError):
            bootstrap_sr(random_panel(rng, 3, 2), {"M": ["MKT"]}, runs=5)

    def test_no_runs(self, planted_panel):
        with pytest.raises(PreconditionError):
            bootstrap_sr(planted_panel, THREE, runs=0)

    def test_no_models(self, planted_panel):
        with pytest.raises(PreconditionError):
            bootstrap_sr(planted_panel, {}, runs=5)

    def test_singular_resample_exhausted(self, rng):
        returns = np.column_stack([0.01 + 0.04 * rng.standard_normal(40), np.full(40, 0.01)])
        panel = ReturnPanel(periods_for(40), ("MKT", "K"), returns)
        with pytest.raises(ResampleExhaustedError) as exc:
            bootstrap_sr(panel, {"M": ["MKT", "K"]}, runs=3, seed=0, max_redraws=2)
        assert exc.value.attempts == 2


class TestDominance:
    """总体 SR² 之比 4:1 的两个模型"""

    @pytest.fixture
    def dominance_panel(self):
        t_obs = 588
        z = orthonormal_scores(np.random.default_rng(17), t_obs, 2)
        # SR²: MKT 0.05, A 0.15 -> {MKT, A} 0.20
        mkt = 0.01 + np.sqrt(0.002) * z[:, 0]
        a = np.sqrt(0.15) * 0.03 + 0.03 * z[:, 1]
        return ReturnPanel(periods_for(t_obs), ("MKT", "A"), np.column_stack([mkt, a]))

    def test_dominant_model_wins_out_of_sample(self, dominance_panel):
        report = bootstrap_sr(dominance_panel, {"BIG": ["MKT", "A"], "SMALL": ["MKT"]},
                              runs=1000, seed=5)
        assert report.mean_ins_sr2[0] / report.mean_ins_sr2[1] == pytest.approx(4.0, rel=0.2)
        assert report.beat_oos[0, 1] >= 95.0

    def test_identical_models_split_evenly(self, dominance_panel):
        report = bootstrap_sr(dominance_panel, {"X": ["MKT", "A"], "Y": ["A", "MKT"]},
                              runs=1000, seed=6)
        assert 46.0 <= report.beat_oos[0, 1] <= 54.0
        assert 46.0 <= report.beat_ins[0, 1] <= 54.0
