"""Tests for pump tuning, gain curves, and sweep bookkeeping."""

import math
import warnings

import numpy as np
import pytest

from jpasim.circuit import CircuitParams
from jpasim.dynamics import ModelSpec, signal_power_dbm
from jpasim.linear_response import pump_for_gain
from jpasim.optimizer import (
    GAIN_TOL_DB,
    IMPERFECTION_KINDS,
    SENTINEL_ORDER,
    GainCurve,
    PumpConfig,
    SweepRow,
    _crossing,
    _DiskCache,
    _row_payload,
    _row_to_dict,
    gain_curve,
    min_truncation_order,
    optimize_pump,
    saturation_power,
    sweep_grid,
)

TWO_PI = 2.0 * math.pi

GAMMA = TWO_PI * 0.1e9


def _params(**kw):
    base = dict(beta=3.5, gamma_a=GAMMA, gamma_b=GAMMA, gamma_c=GAMMA)
    base.update(kw)
    return CircuitParams(**base)


TRUNC3 = ModelSpec(truncation=3, pump="soft")


# ---------------------------------------------------------------------------
# crossing detection


def test_crossing_compression_interpolates():
    pts = [(-130.0, 20.0), (-120.0, 19.6), (-119.5, 18.9)]
    got = _crossing(pts, 20.0, 1.0)
    assert got is not None
    p_sat, kind = got
    assert kind == "compression"
    # |dev| passes 1.0 between -120 (0.4) and -119.5 (1.1), linear in dBm
    frac = (1.0 - 0.4) / (1.1 - 0.4)
    assert np.isclose(p_sat, -120.0 + 0.5 * frac, atol=1e-12)


def test_crossing_boost_kind():
    pts = [(-130.0, 20.0), (-124.0, 20.6), (-123.5, 21.4)]
    got = _crossing(pts, 20.0, 1.0)
    assert got is not None
    assert got[1] == "boost-to-21dB"
    assert -124.0 < got[0] < -123.5


def test_crossing_first_crossing_wins():
    # a boost crossing before a deeper compression must win
    pts = [(-130.0, 20.0), (-125.0, 21.2), (-120.0, 17.0)]
    got = _crossing(pts, 20.0, 1.0)
    assert got[1] == "boost-to-21dB"
    assert got[0] < -125.0 + 5.0


def test_crossing_nan_blocks_interpolation():
    pts = [(-130.0, 20.0), (-125.0, math.nan), (-120.0, 18.5)]
    p_sat, kind = _crossing(pts, 20.0, 1.0)
    # no converged neighbour to interpolate against: report the point
    assert p_sat == -120.0
    assert kind == "compression"


def test_crossing_none_on_flat_curve():
    pts = [(-130.0 + i, 20.0 + 0.01 * i) for i in range(10)]
    assert _crossing(pts, 20.0, 1.0) is None


def test_saturation_power_raises_without_crossing():
    curve = GainCurve(
        points=tuple((-130.0 + i, 20.0) for i in range(5)),
        small_signal_db=20.0,
        saturation_power_dbm=math.nan,
        saturation_kind="none",
        all_converged=True,
    )
    with pytest.raises(ValueError):
        saturation_power(curve, 1.0)


# ---------------------------------------------------------------------------
# pump optimization oracle (third-order model at the nulling point)


@pytest.fixture(scope="module")
def trunc3_pump():
    p = _params()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pc = optimize_pump(p, model=TRUNC3)
    return p, pc


def test_optimize_pump_hits_target(trunc3_pump):
    _, pc = trunc3_pump
    assert abs(pc.achieved_gain_db - 20.0) <= 2.0 * GAIN_TOL_DB


def test_optimize_pump_on_resonance_at_nulling(trunc3_pump):
    # at p=1 and phi_ext=2pi no Kerr shifts survive, so the optimum sits
    # on resonance to within one coarse grid cell
    p, pc = trunc3_pump
    cell_d = 2.0 * p.gamma_a / 10.0
    cell_e = (p.gamma_a + p.gamma_b) / 10.0
    assert abs(pc.delta) <= cell_d
    assert abs(pc.eps_p) <= cell_e


def test_optimize_pump_amp_near_linear_estimate(trunc3_pump):
    p, pc = trunc3_pump
    lin = pump_for_gain(p, 100.0).amp_pump
    assert abs(pc.amp_pump - lin) / lin < 0.05


def test_gain_curve_criteria_ordering(trunc3_pump):
    # the 0.1 dB point can never sit above the 1 dB point
    p, pc = trunc3_pump
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curve = gain_curve(p, pc, model=TRUNC3, criterion_db=0.1)
    sat_01 = saturation_power(curve, 0.1)
    sat_10 = saturation_power(curve, 1.0)
    assert sat_01 <= sat_10 + 1e-9
    assert curve.saturation_kind in ("compression", "boost-to-21dB")
    # powers are strictly increasing along the stored points
    pws = [pw for pw, _ in curve.points]
    assert all(b > a for a, b in zip(pws, pws[1:]))


def test_min_truncation_sentinel_without_pump():
    # with the pump off no truncation reaches 20 dB: sentinel 9
    p = _params()
    dead = PumpConfig(0.0, 0.0, 0.0, 0.0)
    assert min_truncation_order(p, dead) == SENTINEL_ORDER


# ---------------------------------------------------------------------------
# sweep bookkeeping


def test_disk_cache_roundtrip(tmp_path):
    cache = _DiskCache(str(tmp_path))
    key = cache.key({"a": 1.0, "b": "x"})
    assert cache.key({"b": "x", "a": 1.0}) == key  # order independent
    assert cache.get(key) is None
    cache.put(key, {"v": 2.5})
    assert cache.get(key) == {"v": 2.5}


def test_sweep_grid_resumes_from_cache(tmp_path):
    # a prefilled cache row must be returned without any integration
    p = _params()
    from dataclasses import replace

    pt = replace(p, beta=3.5, zeta=0.25)
    cache = _DiskCache(str(tmp_path))
    row = SweepRow(
        beta=3.5,
        inv_p=1.25,
        phi_ext=p.phi_ext,
        gamma=p.gamma_a,
        alpha=0.0,
        delta=0.0,
        eps_p=0.0,
        amp_pump=1.0,
        sat_power_dbm=-110.0,
        sat_kind="compression",
        min_order=3,
        converged=True,
    )
    cache.put(cache.key(_row_payload(pt, 20.0, 1.0)), _row_to_dict(row))
    result = sweep_grid([3.5], [1.25], p, cache_dir=str(tmp_path))
    assert result.rows == (row,)
    assert result.target_gain_db == 20.0


def test_imperfection_kind_validation():
    from jpasim.optimizer import imperfection_study

    with pytest.raises(ValueError):
        imperfection_study(_params(), "banana")
    assert set(IMPERFECTION_KINDS) == {"flux", "gamma", "alpha"}


def test_row_payload_distinguishes_bias_points():
    p = _params()
    k1 = _DiskCache.key(_row_payload(p, 20.0, 1.0))
    from dataclasses import replace

    k2 = _DiskCache.key(_row_payload(replace(p, beta=3.6), 20.0, 1.0))
    k3 = _DiskCache.key(_row_payload(p, 20.0, 0.1))
    assert len({k1, k2, k3}) == 3
