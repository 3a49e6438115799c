import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecosim.coupling import validate_graph
from ecosim.errors import UnknownVariant
from ecosim.master import MasterPolicy, run_cosimulation
from ecosim.quartercar import (
    QuarterCarParams,
    QuarterCarState,
    assemble_state,
    damper_force,
    damper_slope,
    initial_state,
    interface_jacobian,
    make_reticulation,
    monolithic_derivatives,
)
from ecosim.reference import ReferenceSolution

LIN = QuarterCarParams.linear()
NONLIN = QuarterCarParams.nonlinear()


@pytest.mark.parametrize("params,dv,expected", [
    (LIN, 1.0, 1000.0),
    (NONLIN, 0.25, 450.0),
    (LIN, 0.0, 0.0),
    (NONLIN, 0.0, 0.0),
    (NONLIN, -0.25, -450.0),
])
def test_damper_force(params, dv, expected):
    assert damper_force(dv, params) == pytest.approx(expected, rel=1e-12)


def test_damper_regularized_near_zero():
    # linear through zero inside the band, continuous at its edge
    eps = NONLIN.eps_v
    inside = damper_force(0.5 * eps, NONLIN)
    edge = damper_force(eps, NONLIN)
    assert inside == pytest.approx(0.5 * edge, rel=1e-12)
    assert edge == pytest.approx(900.0 * math.sqrt(eps), rel=1e-12)


def test_table_labels_are_inert():
    assert LIN.n_d == 0.5 and LIN.p == 1.0
    assert NONLIN.n_d == 1.5 and NONLIN.p == 0.5
    assert damper_force(0.25, NONLIN.__class__.nonlinear(n_d=99.0)) == pytest.approx(450.0)


@pytest.mark.parametrize("variant,ft", [(1, (False, True)), (2, (True, False))])
def test_feedthrough_side(variant, ft):
    s1, s2, bond = make_reticulation(LIN, variant)
    assert (s1.feedthrough[0], s2.feedthrough[0]) == ft
    owner, other = (s2, s1) if variant == 1 else (s1, s2)
    assert owner.jacobian()[0, 0] == -1000.0
    assert other.jacobian()[0, 0] == 0.0
    g = validate_graph([s1, s2], [bond])
    assert g.sigma.tolist() == [-1]


def test_unknown_variant():
    with pytest.raises(UnknownVariant):
        make_reticulation(LIN, 3)


@pytest.mark.parametrize("state", [QuarterCarState(), QuarterCarState(1, 2, 3, 4)])
def test_linear_jacobian_constant(state):
    assert interface_jacobian(state, LIN, 1) == -1000.0
    assert interface_jacobian(state, LIN, 2) == -1000.0


def test_nonlinear_jacobian_example():
    st_ = QuarterCarState(v_c=0.25)
    assert interface_jacobian(st_, NONLIN, 1) == pytest.approx(-900.0, rel=1e-12)


@pytest.mark.parametrize("floor", [None, 1e-3])
def test_nonlinear_jacobian_finite_at_rest(floor):
    j = interface_jacobian(QuarterCarState(), NONLIN, 2, floor=floor)
    assert math.isfinite(j) and j < 0
    if floor is None:
        assert j == pytest.approx(-900.0 * NONLIN.eps_v ** -0.5)


def test_damper_slope_floor():
    assert damper_slope(0.0, NONLIN, floor=1e-2) == pytest.approx(0.5 * 900 * 1e-2 ** -0.5)


@pytest.mark.parametrize("energy,v", [(750.0, 1.93649), (187.5, 0.96825)])
def test_kinetic_excitation(energy, v):
    s = initial_state(energy, LIN, "chassis_velocity")
    assert s.v_c == pytest.approx(v, abs=5e-6)
    assert (s.z_c, s.z_w, s.v_w) == (0.0, 0.0, 0.0)
    assert s.energy(LIN) == pytest.approx(energy)


def test_tire_excitation():
    s = initial_state(750.0, LIN)
    assert s.z_c == s.z_w == pytest.approx(0.1)
    assert s.energy(LIN) == pytest.approx(750.0)


@pytest.mark.parametrize("excitation", ["tire_deflection", "chassis_velocity"])
def test_zero_excitation(excitation):
    assert initial_state(0.0, LIN, excitation) == QuarterCarState()


def test_bad_excitation():
    with pytest.raises(ValueError):
        initial_state(1.0, LIN, "road_bump")
    with pytest.raises(ValueError):
        initial_state(-1.0, LIN)


@pytest.mark.parametrize("state,expected", [
    (QuarterCarState(), [0, 0, 0, 0]),
    (QuarterCarState(z_c=0.1), [0, -3.75, 0, 37.5]),
    (QuarterCarState(v_c=1.0), [1.0, -2.5, 0, 25.0]),
])
def test_monolithic_derivatives(state, expected):
    assert monolithic_derivatives(state, LIN) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def fd_jacobian(slave, u, h):
    slave.set_inputs(np.array([u + h]))
    yp = slave.get_outputs()[0]
    slave.set_inputs(np.array([u - h]))
    ym = slave.get_outputs()[0]
    slave.set_inputs(np.array([u]))
    return (yp - ym) / (2 * h)


def jacobian_mismatches(params, n=100, seed=7):
    rng = np.random.default_rng(seed)
    bad = []
    checked = 0
    while checked < n:
        s = QuarterCarState(rng.uniform(-0.2, 0.2), rng.uniform(-2, 2), rng.uniform(-0.2, 0.2), rng.uniform(-2, 2))
        if abs(s.v_c - s.v_w) < 1e-2:
            continue  # keep away from the regularization band
        checked += 1
        for variant in (1, 2):
            s1, s2, _ = make_reticulation(params, variant, init=s)
            owner, u = (s2, s.v_c) if variant == 1 else (s1, s.v_w)
            owner.set_inputs(np.array([u]))
            analytic = owner.jacobian()[0, 0]
            assert analytic == pytest.approx(interface_jacobian(s, params, variant), rel=1e-12)
            h = 1e-6 * max(1.0, abs(u))
            fd = fd_jacobian(owner, u, h)
            rel = abs(fd - analytic) / abs(analytic)
            if rel > 1e-4:
                bad.append((s, variant, rel))
    return bad


@pytest.mark.parametrize("params", [LIN, NONLIN], ids=["linear", "nonlinear"])
def test_jacobian_matches_finite_differences(params):
    assert jacobian_mismatches(params) == []


@settings(max_examples=200)
@given(st.floats(-1, 1), st.floats(-5, 5), st.floats(-1, 1), st.floats(-5, 5), st.sampled_from([LIN, NONLIN]))
def test_energy_rate_is_dissipative(z_c, v_c, z_w, v_w, params):
    x = np.array([z_c, v_c, z_w, v_w])
    d = monolithic_derivatives(x, params)
    m_c, m_w, k_c, k_w = params.m_c, params.m_w, params.k_c, params.k_w
    dEdt = m_c * v_c * d[1] + m_w * v_w * d[3] + k_c * (z_c - z_w) * (v_c - v_w) + k_w * z_w * v_w
    expected = -damper_force(v_c - v_w, params) * (v_c - v_w)
    assert dEdt == pytest.approx(expected, rel=1e-7, abs=1e-6)
    assert expected <= 0.0


@pytest.mark.parametrize("variant", [1, 2])
def test_equilibrium_is_fixed_point(variant):
    s1, s2, _ = make_reticulation(NONLIN, variant)
    for s in (s1, s2):
        s.set_inputs(np.zeros(1))
        s.do_step(1e-3)
        assert np.all(s.x == 0.0)
        assert s.get_outputs()[0] == 0.0


def test_power_convention():
    # u * y is the power leaving each slave; for the exchanged values the two cancel
    s = QuarterCarState(0.05, 1.0, 0.02, -0.5)
    for variant in (1, 2):
        s1, s2, _ = make_reticulation(LIN, variant, init=s)
        s1.set_inputs(np.zeros(1))
        s2.set_inputs(np.zeros(1))
        for _ in range(3):
            y1, y2 = s1.get_outputs()[0], s2.get_outputs()[0]
            s1.set_inputs(np.array([-y2]))
            s2.set_inputs(np.array([y1]))
        y1, y2 = s1.get_outputs()[0], s2.get_outputs()[0]
        assert -y2 * y1 + y1 * y2 == 0.0
        f = 15000 * 0.03 + 1000 * 1.5
        assert abs(y1 * y2) == pytest.approx(abs(f * (1.0 if variant == 1 else 0.5)))


@pytest.fixture(scope="module")
def linear_reference():
    return ReferenceSolution.compute(LIN, initial_state(750.0, LIN), 4.0)


def cosim_deviation(variant, dt, ref, T=1.0):
    init = initial_state(750.0, LIN)
    s1, s2, bond = make_reticulation(LIN, variant, init=init)
    g = validate_graph([s1, s2], [bond])
    res = run_cosimulation(g, MasterPolicy(T=T, dt=dt), probe=lambda: assemble_state(s1, s2, variant).as_array())
    t = res.column("t_next")
    X = res.column("probe")
    return X, np.abs(X[:, 1] - ref.states(t)[:, 1]).max()


@pytest.mark.parametrize("variant", [1, 2])
def test_cosimulation_converges_to_reference(variant, linear_reference):
    devs = [cosim_deviation(variant, dt, linear_reference)[1] for dt in (2e-3, 1e-3, 0.5e-3, 0.25e-3)]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 5e-3


def test_reticulations_agree(linear_reference):
    X1, d1 = cosim_deviation(1, 0.25e-3, linear_reference)
    X2, d2 = cosim_deviation(2, 0.25e-3, linear_reference)
    assert np.abs(X1[:, 1] - X2[:, 1]).max() <= d1 + d2


def modal_oracle(params):
    M = np.diag([params.m_c, params.m_w])
    K = np.array([[params.k_c, -params.k_c], [-params.k_c, params.k_c + params.k_w]])
    return np.sort(np.sqrt(np.linalg.eigvals(np.linalg.solve(M, K)).real)) / (2 * np.pi)


def spectral_peak(x, dt, fmin=0.0):
    n = 1 << 18
    x = (x - x.mean()) * np.hanning(len(x))
    amp = np.abs(np.fft.rfft(x, n))
    f = np.fft.rfftfreq(n, dt)
    band = f >= fmin
    return f[band][np.argmax(amp[band])]


def test_modal_oracle():
    f1, f2 = modal_oracle(LIN)
    assert f1 == pytest.approx(0.93, rel=0.05)
    assert f2 == pytest.approx(10.2, rel=0.05)


def test_reference_spectral_peaks(linear_reference):
    f1, f2 = modal_oracle(LIN)
    t = np.arange(0.0, 4.0, 1e-3)
    X = linear_reference.states(t)
    assert spectral_peak(X[:, 0], 1e-3) == pytest.approx(f1, rel=0.05)
    assert spectral_peak(X[:, 2], 1e-3, fmin=3.0) == pytest.approx(f2, rel=0.05)
