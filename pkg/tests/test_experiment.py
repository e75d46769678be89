import numpy as np
import pytest

from hdpack import data as dm
from hdpack import experiment as ex


@pytest.fixture
def separable(tmp_path):
    path = tmp_path / "sep.csv"
    dm.write_csv(dm.make_synthetic(1000, 20, 4, noise=0.02, seed=1), path)
    return path


def test_separable_data_is_perfectly_classified(separable, tmp_path):
    cfg = ex.ExperimentConfig(data=str(separable), train_mode="classical", out=str(tmp_path / "o"))
    result = ex.run_experiment(cfg, write=False)
    assert result.reports["classical"].accuracy == 1.0
    assert not result.smoothing_applied


def test_dim_sweep_time_grows_with_dim(separable, tmp_path):
    cfg = ex.ExperimentConfig(data=str(separable), train_mode="classical", out=str(tmp_path / "s"))
    rows = ex.run_sweep(cfg, "dim", [1024, 10240])
    assert len(rows) == 2
    assert rows[0]["time_encode"] + rows[0]["time_train_classical"] < \
        rows[1]["time_encode"] + rows[1]["time_train_classical"]


def test_batch_sweep_full_batch_is_faster(separable, tmp_path):
    cfg = ex.ExperimentConfig(data=str(separable), dim=4096, out=str(tmp_path / "s"))
    rows = ex.run_sweep(cfg, "batch", [1, 800])
    assert rows[1]["time_train_online"] < rows[0]["time_train_online"]


def test_config_rejects_unknown_names():
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig(metric="euclid")
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_sources(None, colour="red")


def test_public_dict_excludes_run_plumbing():
    d = ex.ExperimentConfig(seed=1).public_dict()
    assert "out" not in d and "threads" not in d and d["seed"] == 1


def test_subsampling_inside_experiment(tmp_path):
    g = np.random.default_rng(3)
    y = (g.random(600) < 0.05).astype(int)
    X = g.normal(size=(600, 4)) + y[:, None] * 2
    path = tmp_path / "imb.csv"
    dm.write_csv(dm.Dataset(X, y), path)
    cfg = ex.ExperimentConfig(data=str(path), subsample_factor=2, dim=512, seed=0)
    d = ex.load_dataset(cfg)
    n_min = int(y.sum())
    assert len(d) == 3 * n_min and int(d.y.sum()) == n_min
