"""单因子进入/退出评价测试"""
import pytest

from src.core.errors import PreconditionError
from src.core.models import SelectionConfig
from src.services.factor_eval_service import factor_eval_batch


class TestFactorEvalBatch:
    """factor_eval_batch 测试"""

    def test_verdicts(self, planted_panel):
        table = factor_eval_batch(planted_panel, ["MKT"])
        assert table.runs == 8
        assert table.failed == ()
        selected = {v.factor for v in table.verdicts if v.selected}
        assert selected == {"A", "B"}
        assert all(v.same is None for v in table.verdicts)

    def test_rates(self, planted_panel):
        table = factor_eval_batch(planted_panel, ["MKT"])
        assert table.rates["MKT"] == 1.0
        assert table.rates["A"] == 1.0
        assert table.rates["B"] == 1.0
        for name in ("C1", "C2", "C3", "C4", "C5", "NOISE"):
            assert table.rates[name] == 0.0

    def test_reference(self, planted_panel):
        table = factor_eval_batch(planted_panel, ["MKT"], reference=["MKT", "A", "B"])
        assert all(v.same for v in table.verdicts)

    def test_threads(self, planted_panel):
        serial = factor_eval_batch(planted_panel, ["MKT"])
        threaded = factor_eval_batch(planted_panel, ["MKT"], cfg=SelectionConfig(threads=3))
        assert serial.verdicts == threaded.verdicts

    def test_empty_core(self, planted_panel):
        with pytest.raises(PreconditionError):
            factor_eval_batch(planted_panel, [])

    def test_nothing_to_evaluate(self, planted_panel):
        with pytest.raises(PreconditionError):
            factor_eval_batch(planted_panel, list(planted_panel.names))
