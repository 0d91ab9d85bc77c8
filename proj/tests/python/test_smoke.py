import math

import numpy as np
import pytest

import tradespill as ts


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    files = ts.synth(out, seed=42, countries=10, products=24)
    return out, files


def test_trend_rows():
    up = ts.trend_test([0.183, 0.164, 0.204, 0.203, 0.229], [0.003, 0.002, 0.001, 0.003, 0.003])
    flat = ts.trend_test([0.152, 0.144, 0.131, 0.154, 0.128], [0.003, 0.002, 0.002, 0.003, 0.003])
    assert up["slope"] > 0 and up["significant"]
    assert not flat["significant"]
    with pytest.raises(ValueError):
        ts.trend_test([1, 2, 3, 4, 5], [1, 1, 0, 1, 1])


def test_classify():
    assert [ts.classify_exporter(v) for v in (0.1, 0.5, 1.5)] == ["new", "nascent", "experienced"]
    with pytest.raises(ValueError):
        ts.classify_exporter(-1.0)


def test_proximity_examples():
    adv = np.array([[1, 0], [1, 1], [0, 1], [0, 1]], dtype=bool)
    phi = ts.proximity(adv)
    assert phi.shape == (2, 2)
    assert phi[0, 1] == pytest.approx(1 / 3)
    assert phi[0, 0] == 0.0


def test_fit_ols_exact_line():
    x = np.column_stack([np.ones(10), np.arange(10.0)])
    fit = ts.fit_ols(x, 2 * np.arange(10.0) + 1, names=["constant", "x"])
    assert fit["coefficients"]["constant"]["beta"] == pytest.approx(1.0)
    assert fit["coefficients"]["x"]["beta"] == pytest.approx(2.0)
    dup = np.column_stack([np.ones(10), np.arange(10.0), np.arange(10.0)])
    with pytest.raises(ValueError):
        ts.fit_ols(dup, np.arange(10.0))


def test_pipeline(world, tmp_path):
    out, files = world
    tensor = ts.load_trade(files["trade"])
    assert len(tensor.countries) == 10
    assert tensor.years == [2000, 2001, 2002, 2003]

    r = ts.rca(tensor, 2000, 2001)
    assert r.shape == (10, 24)
    assert np.all(r >= 0)

    phi = ts.proximity(r >= 1.0)
    assert np.allclose(phi, phi.T)

    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 5000, size=(10, 2))
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1) + np.eye(10)
    rel = ts.relatedness(tensor, phi, tensor.products, dist, 2000)
    for key in ("omega", "omega_d", "omega_o"):
        vals = rel[key][~np.isnan(rel[key])]
        assert np.all((vals >= 0) & (vals <= 1))
    assert len(rel["omega"]) == len(tensor.cells(2000)["value"])


def test_missing_file_raises(tmp_path):
    with pytest.raises(ValueError):
        ts.load_trade(tmp_path / "missing.csv")
