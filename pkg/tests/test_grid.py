import math

import numpy as np
import pytest

from fracburg import EstimateReport, Field, GridError, GridSpec


def test_defaults():
    g = GridSpec()
    assert (g.m, g.N, g.L) == (2, 512, 64.0)
    assert g.h == 0.25
    assert g.trust_radius == 16.0
    assert g.x[g.center] == 0.0


@pytest.mark.parametrize("kw", [{"N": 500}, {"L": 0.0}, {"L": -1.0}, {"m": 0}])
def test_rejects_bad_grids(kw):
    with pytest.raises(GridError):
        GridSpec(**kw)


def test_index_of_round_trip():
    g = GridSpec(2, 64, 8.0)
    i = g.index_of(1.25, -2.0)
    assert g.x[i[0]] == 1.25 and g.x[i[1]] == -2.0


def test_rderivative_zeroes_nyquist():
    g = GridSpec(2, 32, 4.0)
    d0 = np.broadcast_to(g.rderivative(0), (g.N, g.N // 2 + 1))
    d1 = np.broadcast_to(g.rderivative(1), (g.N, g.N // 2 + 1))
    assert np.all(d0[g.N // 2, :] == 0)
    assert np.all(d1[:, -1] == 0)
    assert np.count_nonzero(d0) == (g.N - 2) * (g.N // 2 + 1)


def test_spectral_derivative_of_periodic_sine():
    g = GridSpec(2, 64, math.pi)
    X1, X2 = g.coords
    f = np.sin(3 * X1) * np.cos(2 * X2)
    d1 = g.irfft(g.rderivative(0) * g.rfft(f))
    np.testing.assert_allclose(d1, 3 * np.cos(3 * X1) * np.cos(2 * X2), atol=1e-11)


def test_field_rejects_nonfinite():
    g = GridSpec(2, 8, 1.0)
    v = np.zeros(g.shape)
    v[0, 0] = np.nan
    with pytest.raises(ValueError):
        Field(g, v)


def test_field_norms():
    g = GridSpec(2, 16, 2.0)
    f = Field(g, np.full(g.shape, 2.0))
    area = (2 * g.L) ** 2
    assert f.mass() == pytest.approx(2 * area)
    assert f.norm(1) == pytest.approx(2 * area)
    assert f.norm(2) == pytest.approx(2 * math.sqrt(area))
    assert f.norm(math.inf) == 2.0


def test_report_ratio_and_json():
    r = EstimateReport("x", 2.0, 6.0, region="r", params={"a": 1})
    assert r.ratio == 3.0
    assert '"ratio": 3.0' in r.to_json()
    assert EstimateReport("y", 0.0, 1.0).ratio == math.inf
    with pytest.raises(ValueError):
        EstimateReport("z", 2.0, 1.0)
