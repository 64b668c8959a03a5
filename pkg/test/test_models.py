"""数据模型测试"""
import numpy as np
import pytest

from src.core.errors import (
    DataError,
    DuplicateNameError,
    PeriodMismatchError,
    PreconditionError,
    UnknownNameError,
)
from src.core.models import (
    CostSchedule,
    Criterion,
    FoldSplit,
    MethodScore,
    Moments,
    ReturnPanel,
    SelectionConfig,
    SelectionPath,
    SimConfig,
    SimReport,
    StepAction,
    StepRecord,
    StopRule,
)


def _panel(names=("MKT", "SMB"), t=3):
    returns = np.arange(t * len(names), dtype=float).reshape(t, len(names)) / 100.0
    return ReturnPanel(tuple(f"2000-{m:02d}" for m in range(1, t + 1)), names, returns)


class TestReturnPanel:
    """ReturnPanel 测试"""

    def test_shape_and_lookup(self):
        panel = _panel()
        assert panel.t_obs == 3
        assert panel.n_assets == 2
        assert panel.index_of(["SMB", "MKT"]) == [1, 0]
        np.testing.assert_array_equal(panel.column("SMB"), [0.01, 0.03, 0.05])

    def test_duplicate_names(self):
        with pytest.raises(DuplicateNameError) as exc:
            _panel(names=("MKT", "MKT"))
        assert exc.value.names == ("MKT",)

    def test_empty_name(self):
        with pytest.raises(DataError):
            _panel(names=("MKT", " "))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            ReturnPanel(("a", "b"), ("MKT",), np.zeros((3, 1)))

    def test_non_finite(self):
        returns = np.zeros((2, 1))
        returns[1, 0] = np.nan
        with pytest.raises(DataError):
            ReturnPanel(("a", "b"), ("MKT",), returns)

    def test_returns_are_read_only(self):
        panel = _panel()
        with pytest.raises(ValueError):
            panel.returns[0, 0] = 1.0

    def test_source_array_is_copied(self):
        source = np.zeros((2, 1))
        panel = ReturnPanel(("a", "b"), ("MKT",), source)
        source[0, 0] = 5.0
        assert panel.returns[0, 0] == 0.0

    def test_unknown_name(self):
        with pytest.raises(UnknownNameError):
            _panel().columns(["HML"])

    def test_join(self):
        panel = _panel()
        extra = ReturnPanel(panel.periods, ("P1",), np.ones((3, 1)))
        joined = panel.join(extra)
        assert joined.names == ("MKT", "SMB", "P1")
        np.testing.assert_array_equal(joined.column("P1"), np.ones(3))

    def test_join_period_mismatch(self):
        panel = _panel()
        extra = ReturnPanel(("x", "y", "z"), ("P1",), np.ones((3, 1)))
        with pytest.raises(PeriodMismatchError):
            panel.join(extra)

    def test_equality(self):
        assert _panel() == _panel()
        assert _panel() != _panel(names=("MKT", "HML"))

    def test_to_frame(self):
        frame = _panel().to_frame()
        assert list(frame.columns) == ["MKT", "SMB"]
        assert frame.index[0] == "2000-01"


class TestCostSchedule:
    """CostSchedule 测试"""

    def test_negative_cost(self):
        with pytest.raises(DataError):
            CostSchedule({"MKT": -1.0})

    def test_default_zero(self):
        assert CostSchedule({"SMB": 12}).get("MKT") == 0.0

    def test_add(self):
        total = CostSchedule({"MKT": 2.0}) + CostSchedule({"MKT": 10.0, "SMB": 24.0})
        assert total.costs == {"MKT": 12.0, "SMB": 24.0}

    def test_from_rebalancing(self):
        schedule = CostSchedule.from_rebalancing(
            {"monthly": ["UMD", "STR"], "annual": ["HML"], "none": ["MKT"]},
            {"monthly": 24, "annual": 2, "none": 0},
        )
        assert schedule.get("STR") == 24.0
        assert schedule.get("HML") == 2.0
        assert schedule.get("MKT") == 0.0

    def test_from_rebalancing_missing_frequency(self):
        with pytest.raises(DataError):
            CostSchedule.from_rebalancing({"weekly": ["STR"]}, {"monthly": 12})


class TestFoldSplit:
    """FoldSplit 测试"""

    def test_indices(self):
        split = FoldSplit(((0, 1, 2), (3, 4)), 5)
        assert split.k == 2
        assert split.sizes == [3, 2]
        np.testing.assert_array_equal(split.test_indices(1), [3, 4])
        np.testing.assert_array_equal(split.train_indices(1), [0, 1, 2])

    def test_not_a_partition(self):
        with pytest.raises(DataError):
            FoldSplit(((0, 1), (1, 2)), 3)

    def test_not_contiguous(self):
        with pytest.raises(DataError):
            FoldSplit(((0, 2), (1, 3)), 4)


class TestMoments:
    """Moments 测试"""

    def test_take(self):
        m = Moments(np.array([1.0, 2.0, 3.0]), np.diag([1.0, 4.0, 9.0]), 10, ("a", "b", "c"))
        sub = m.take([2, 0])
        np.testing.assert_array_equal(sub.mean, [3.0, 1.0])
        np.testing.assert_array_equal(sub.cov, np.diag([9.0, 1.0]))
        assert sub.names == ("c", "a")
        assert sub.t_obs == 10


class TestSelectionConfig:
    """SelectionConfig 测试"""

    def test_defaults(self):
        cfg = SelectionConfig()
        assert cfg.stop_rule is StopRule.HDA
        assert cfg.criterion is Criterion.MODEL_SR2
        assert cfg.hda.significance == 0.05
        assert cfg.label == "HDA"

    def test_labels(self):
        assert SelectionConfig(stop_rule=StopRule.GRS).label == "GRS"
        assert SelectionConfig(criterion=Criterion.SINGLE_SR2).label == "SR"

    @pytest.mark.parametrize("kwargs", [
        {"significance": 0.0},
        {"significance": 1.0},
        {"max_steps": 0},
        {"tie_break": "random"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(PreconditionError):
            SelectionConfig(**kwargs)


class TestSelectionPath:
    """SelectionPath 测试"""

    def test_unpacks_as_model_and_records(self):
        record = StepRecord(0, StepAction.BASELINE, "", 1.0, 0.5, 0.1, 1.1, 2.0, 0.02, 1, True)
        model, records = SelectionPath(("MKT",), (record,))
        assert model == ("MKT",)
        assert records == [record]


class TestSimConfig:
    """SimConfig 测试"""

    def _config(self, **overrides):
        kwargs = dict(k1=2, k2=3, t_obs=50, mu1=np.zeros(2), sigma1=np.eye(2),
                      beta=np.zeros((2, 3)), sigma2=np.eye(3))
        kwargs.update(overrides)
        return SimConfig(**kwargs)

    def test_names_truth_baseline(self):
        cfg = self._config()
        assert cfg.names == ("f001", "f002", "f003", "f004", "f005")
        assert cfg.truth == ("f001", "f002")
        assert cfg.baseline == ("f001",)
        assert self._config(baseline_case=2).baseline == ("f001", "f003")

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            self._config(beta=np.zeros((3, 2)))

    def test_asymmetric(self):
        with pytest.raises(PreconditionError):
            self._config(sigma1=np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_short_sample(self):
        with pytest.raises(PreconditionError):
            self._config(t_obs=6)

    def test_bad_case(self):
        with pytest.raises(PreconditionError):
            self._config(baseline_case=3)


class TestSimReport:
    """SimReport 测试"""

    def test_row_lookup(self):
        row = MethodScore("HDA", "BSE", 2.0, 100.0, 100.0, 100.0, 0.0, 10)
        report = SimReport((row,), ("f001",), {"BSE(HDA)": (1.0,)}, 10)
        assert report.row("BSE(HDA)") is row
        with pytest.raises(KeyError):
            report.row("FSE(GRS)")
