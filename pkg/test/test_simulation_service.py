"""Monte Carlo 模拟研究测试"""
import numpy as np
import pytest

from src.core.errors import NonPositiveDefiniteError, PreconditionError
from src.core.models import SimConfig, StopRule
from src.data.calibration import default_calibration
from src.services.simulation_service import (
    SimulationService,
    method_configs,
    run_sim_study,
    score_selections,
    simulate_panel,
)
from src.utils.error_handler import ErrorQueue
from test.conftest import small_sim_config

ALL_METHODS = ("hda", "grs", "sr")


class TestMethodConfigs:
    """方法标签测试"""

    def test_labels(self):
        configs = method_configs(["hda", "GRS", " sr "])
        assert [c.label for c in configs] == ["HDA", "GRS", "SR"]
        assert configs[1].stop_rule is StopRule.GRS

    def test_significance_passed(self):
        assert method_configs(["hda"], significance=0.1)[0].significance == 0.1

    def test_unknown(self):
        with pytest.raises(PreconditionError):
            method_configs(["lasso"])


class TestSimulatePanel:
    """数据生成测试"""

    def test_shape_and_names(self, sim_config):
        panel, truth = simulate_panel(sim_config, 0)
        assert panel.t_obs == 600
        assert panel.names == ("f001", "f002", "f003", "f004", "f005", "f006")
        assert truth == ("f001", "f002")

    def test_deterministic_per_rep(self, sim_config):
        a, _ = simulate_panel(sim_config, 3)
        b, _ = simulate_panel(sim_config, 3)
        c, _ = simulate_panel(sim_config, 4)
        assert a == b
        assert a != c

    def test_seed_changes_draws(self):
        a, _ = simulate_panel(small_sim_config(seed=1), 0)
        b, _ = simulate_panel(small_sim_config(seed=2), 0)
        assert a != b

    def test_moments_converge(self):
        cfg = small_sim_config(t_obs=100000)
        panel, _ = simulate_panel(cfg, 0)
        means = panel.returns.mean(axis=0)
        np.testing.assert_allclose(means[:2], cfg.mu1, atol=6e-4)
        np.testing.assert_allclose(means[2:], cfg.mu1 @ cfg.beta, atol=6e-4)
        np.testing.assert_allclose(np.cov(panel.returns[:, :2].T), cfg.sigma1, atol=1e-4)

    def test_not_positive_definite(self):
        cfg = SimConfig(k1=2, k2=2, t_obs=50, mu1=np.zeros(2),
                        sigma1=np.array([[1.0, 2.0], [2.0, 1.0]]),
                        beta=np.zeros((2, 2)), sigma2=np.eye(2))
        with pytest.raises(NonPositiveDefiniteError):
            simulate_panel(cfg, 0)
        with pytest.raises(NonPositiveDefiniteError):
            SimulationService(cfg, method_configs(["hda"]))


class TestScoreSelections:
    """选择精度测试"""

    UNIVERSE = ("f001", "f002", "f003", "f004", "f005", "f006")
    TRUTH = ("f001", "f002")

    def test_everything_selected(self):
        size, cp, cf, tr, fr = score_selections([frozenset(self.UNIVERSE)], self.TRUTH, self.UNIVERSE)
        assert (size, cp, cf, tr, fr) == (6.0, 100.0, 0.0, 100.0, 100.0)

    def test_oracle(self):
        size, cp, cf, tr, fr = score_selections([frozenset(self.TRUTH)], self.TRUTH, self.UNIVERSE)
        assert (size, cp, cf, tr, fr) == (2.0, 100.0, 100.0, 100.0, 0.0)

    def test_average(self):
        picks = [frozenset({"f001"}), frozenset({"f001", "f002", "f003"})]
        size, cp, cf, tr, fr = score_selections(picks, self.TRUTH, self.UNIVERSE)
        assert size == 2.0
        assert cp == 50.0
        assert cf == 0.0
        assert tr == 75.0
        assert fr == pytest.approx(12.5)

    def test_empty(self):
        assert all(np.isnan(v) for v in score_selections([], self.TRUTH, self.UNIVERSE))


class TestSimulationRun:
    """模拟研究运行测试"""

    def test_rows(self, sim_config):
        report = run_sim_study(sim_config, method_configs(ALL_METHODS), reps=4)
        assert [r.method for r in report.rows] == [
            "FSE(HDA)", "FSE(GRS)", "FSE(SR)", "BSE(HDA)", "BSE(GRS)", "BSE(SR)",
        ]
        for row in report.rows:
            assert row.cf <= row.cp
            assert row.replications + row.failures == 4
        assert set(report.selection_rates) == {r.method for r in report.rows}
        assert report.factor_names == sim_config.names

    def test_threads_do_not_change_report(self, sim_config):
        serial = run_sim_study(sim_config, method_configs(ALL_METHODS), reps=3, threads=1)
        threaded = run_sim_study(sim_config, method_configs(ALL_METHODS), reps=3, threads=3)
        assert serial.rows == threaded.rows
        assert serial.selection_rates == threaded.selection_rates

    def test_case_two_fse_never_exact(self):
        report = run_sim_study(small_sim_config(case=2), method_configs(["hda"]), reps=3)
        fse_row = report.row("FSE(HDA)")
        assert fse_row.cf == 0.0
        assert report.selection_rates["FSE(HDA)"][2] == 1.0

    def test_duplicate_labels(self, sim_config):
        with pytest.raises(PreconditionError):
            SimulationService(sim_config, method_configs(["hda", "hda"]))

    def test_no_methods(self, sim_config):
        with pytest.raises(PreconditionError):
            SimulationService(sim_config, [])

    def test_no_reps(self, sim_config):
        with pytest.raises(PreconditionError):
            run_sim_study(sim_config, method_configs(["hda"]), reps=0)

    def test_issues_queue_untouched_on_success(self, sim_config):
        issues = ErrorQueue()
        report = run_sim_study(sim_config, method_configs(["hda"]), reps=2, issues=issues)
        assert report.failures == issues.size()


def _bundled_study(t_obs: int, case: int, reps: int = 100):
    cfg = SimConfig.from_calibration(default_calibration(), k2=100, t_obs=t_obs, case=case, seed=2024)
    return run_sim_study(cfg, method_configs(ALL_METHODS), reps=reps, threads=0)


@pytest.fixture(scope="module")
def case_one_report():
    return _bundled_study(3000, case=1)


@pytest.mark.slow
class TestSelectionAccuracy:
    """随包校准 (K1=5, K2=100) 下的选择精度"""

    def test_bse_hda_recovers_truth(self, case_one_report):
        hda = case_one_report.row("BSE(HDA)")
        assert hda.cp >= 90.0
        assert hda.fr <= 1.0

    def test_single_sr2_overselects(self, case_one_report):
        assert case_one_report.row("BSE(SR)").fr >= 10.0

    def test_hda_covers_more_than_grs(self, case_one_report):
        assert case_one_report.row("BSE(HDA)").cp > case_one_report.row("BSE(GRS)").cp

    def test_risk_factor_rates(self, case_one_report):
        rates = case_one_report.selection_rates["BSE(HDA)"]
        assert min(rates[:5]) >= 0.9
        assert max(rates[5:]) <= 0.1

    def test_case_two_drops_redundant_baseline(self):
        report = _bundled_study(3000, case=2)
        assert report.row("BSE(HDA)").cf >= 80.0
        assert report.row("FSE(HDA)").cf == 0.0

    def test_accuracy_grows_with_sample(self, case_one_report):
        short = _bundled_study(600, case=1).row("BSE(HDA)")
        long = case_one_report.row("BSE(HDA)")
        assert long.cp >= short.cp
        assert long.cf >= short.cf
