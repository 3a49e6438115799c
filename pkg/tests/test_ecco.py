import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecosim.ecco import EccoConfig, error_indicator, next_step_size

cfg = EccoConfig(r=1.6e-6)


def test_indicator_example():
    assert error_indicator(np.array([1.2e-3]), np.array([0.0]), 1.6e-6, 750.0) == 1.0


def test_indicator_zero():
    assert error_indicator(np.zeros(3), np.ones(3), 1e-6, 750.0) == 0.0


def test_indicator_rms_of_equal_terms():
    c = 0.37
    dE = np.array([c * 1e-6 * 750.0, -c * 1e-6 * 760.0])
    E = np.array([0.0, -10.0])
    assert error_indicator(dE, E, 1e-6, 750.0) == pytest.approx(c, rel=1e-12)


@pytest.mark.parametrize("eps,expected", [
    (1.0, 0.8e-3),
    (1e-6, 1.5e-3),
    (0.5, 0.8 * 0.5 ** -0.15 * 1e-3),
])
def test_next_step_examples(eps, expected):
    assert next_step_size(eps, 1e-3, cfg) == pytest.approx(expected, rel=1e-12)


def test_next_step_example_value():
    assert next_step_size(0.5, 1e-3, cfg) == pytest.approx(0.888e-3, abs=1e-6)


def test_gain_from_order():
    assert cfg.k_I == pytest.approx(0.15)
    assert EccoConfig(r=1, order=1).k_I == pytest.approx(0.1)
    assert EccoConfig(r=1, gain_denominator_offset=1).k_I == pytest.approx(0.1)


def test_fixed_point():
    eps = 0.8 ** (1 / 0.15)
    assert eps == pytest.approx(0.2259, abs=1e-4)
    assert next_step_size(eps, 1e-3, cfg) == pytest.approx(1e-3, rel=1e-12)


def test_zero_indicator_stays_finite():
    assert next_step_size(0.0, 1e-3, cfg) == 1.5e-3


dts = st.floats(10e-6, 10e-3)
epss = st.floats(0.0, 1e6, allow_nan=False)


@given(epss, epss, dts)
def test_monotone_in_indicator(e1, e2, dt):
    lo, hi = sorted((e1, e2))
    assert next_step_size(hi, dt, cfg) <= next_step_size(lo, dt, cfg)


@given(epss, dts)
def test_clamp_law(eps, dt):
    new = next_step_size(eps, dt, cfg)
    assert cfg.dt_min <= new <= cfg.dt_max
    ratio = new / dt
    at_range_limit = new in (cfg.dt_min, cfg.dt_max)
    assert at_range_limit or cfg.theta_min - 1e-12 <= ratio <= cfg.theta_max + 1e-12


@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4), st.floats(1e-3, 1e3))
def test_indicator_homogeneous(dE, scale):
    dE = np.array(dE)
    E = np.linspace(-1.0, 1.0, len(dE))
    a = error_indicator(dE, E, 1e-6, 750.0)
    b = error_indicator(dE * scale, E, 1e-6 * scale, 750.0)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-300)


def test_truncation_to_end():
    assert next_step_size(1e-6, 1e-3, cfg, remaining=0.7e-3) == 0.7e-3
    # never leave a remainder shorter than dt_min
    new = next_step_size(1.0, 1e-3, cfg, remaining=0.805e-3)
    assert 0.805e-3 - new >= cfg.dt_min - 1e-15


@pytest.mark.parametrize("kw", [
    dict(alpha_s=0.0), dict(alpha_s=1.2), dict(dt_min=0.0), dict(dt_min=1.0, dt_max=0.5),
    dict(theta_min=1.0), dict(theta_max=0.9), dict(r=0.0), dict(E0=0.0),
])
def test_config_validation(kw):
    args = dict(r=1e-6)
    args.update(kw)
    with pytest.raises(ValueError):
        EccoConfig(**args)
