"""模拟校准测试"""
import json

import numpy as np
import pytest

from src.core.errors import ConfigError, DataError, PreconditionError
from src.core.models import SimConfig
from src.data.calibration import default_calibration, load_calibration, resolve_calibration


class TestDefaultCalibration:
    """随包校准测试"""

    def test_shapes(self):
        cal = default_calibration()
        assert cal.k1 == 5
        assert cal.k2 == 100
        assert cal.factors == ("MKT", "SMB", "HML", "RMW", "CMA")
        assert cal.sigma2.shape == (100, 100)

    def test_positive_definite(self):
        cal = default_calibration()
        assert np.linalg.eigvalsh(cal.sigma1).min() > 0
        assert np.all(np.diag(cal.sigma2) > 0)

    def test_sim_config(self):
        cfg = SimConfig.from_calibration(default_calibration(), k2=10, t_obs=500, case=2, seed=3)
        assert cfg.k2 == 10
        assert cfg.beta.shape == (5, 10)
        assert cfg.baseline == ("f001", "f006")

    def test_k2_out_of_range(self):
        with pytest.raises(PreconditionError):
            SimConfig.from_calibration(default_calibration(), k2=101)


class TestLoadCalibration:
    """校准文件读取测试"""

    def test_file(self, tmp_path):
        path = tmp_path / "cal.json"
        path.write_text(json.dumps({
            "mu1": [0.01, 0.008],
            "sigma1": [[0.0016, 0.0], [0.0, 0.0009]],
            "beta": [[0.5, 0.1, 0.0], [0.0, 0.3, 0.2]],
            "sigma2": np.eye(3).tolist(),
        }), encoding="utf-8")
        cal = resolve_calibration(str(path))
        assert (cal.k1, cal.k2) == (2, 3)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cal.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_calibration(str(path))

    def test_missing(self, tmp_path):
        with pytest.raises(DataError):
            load_calibration(str(tmp_path / "none.json"))

    def test_resolve_default(self):
        assert resolve_calibration(None).k2 == 100
