import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcf_relay import ChannelModel
from pcf_relay.info import CorrelationModel, entropies
from pcf_relay.optimizer import (
    NetworkCapacities,
    RATE_CAP,
    PcfPlan,
    af_rate,
    af_snr,
    alpha2_from,
    best_relay_df_rate,
    check_plan,
    cutset_rate,
    df_single_relay,
    network,
    optimize_pcf,
    pcf_objective,
    plan_caps,
    project_rates,
    protocol_rates,
    pure_cf_plan,
    relay_pair_network,
    symmetric_network,
)
from tests.oracles import cf_grid, pcf_grid


def _objective_from_plan(plan, caps, e):
    c = plan_caps(plan, caps)
    ee = e.swapped() if plan.swapped else e
    return plan.alpha1 * ee.i_z_xy + plan.alpha2 * c.c_af1


def _random_network(rng):
    if rng.random() < 0.5:
        chans = [ChannelModel.bec(rng.uniform(0.0, 0.5)) for _ in range(4)]
    else:
        chans = [ChannelModel.biawgn_db(rng.uniform(0.0, 14.0)) for _ in range(4)]
    return network(*chans)


def test_perfect_channels():
    caps, model = symmetric_network(ChannelModel.bec(0.0))
    plan = optimize_pcf(caps, model)
    assert plan.rate == pytest.approx(0.75, abs=1e-9)
    assert (plan.alpha1, plan.alpha2, plan.rx, plan.ry) == pytest.approx((0.5, 0.25, 0.0, 1.0), abs=1e-9)
    cf = pure_cf_plan(caps, model)
    assert cf.rate == pytest.approx(2 / 3, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_pgd_beats_grid(seed):
    rng = np.random.default_rng(seed)
    caps, model = _random_network(rng)
    e = entropies(model)
    plan = optimize_pcf(caps, model)
    assert plan.rate >= pcf_grid(caps, e, n=80) - 1e-4
    assert check_plan(plan, caps, e) == []
    assert plan.rate == pytest.approx(_objective_from_plan(plan, caps, e), abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_pure_cf_beats_grid(seed):
    caps, model = _random_network(np.random.default_rng(100 + seed))
    e = entropies(model)
    plan = pure_cf_plan(caps, model)
    assert plan.rate >= cf_grid(caps, e) - 1e-4
    assert plan.alpha2 == 0.0


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.9))
def test_pcf_at_least_af_half(eps_r1, eps_r2):
    caps, model = relay_pair_network(ChannelModel.bec(eps_r1), ChannelModel.bec(eps_r2))
    plan = optimize_pcf(caps, model)
    e = entropies(model)
    assert plan.rate >= 0.5 * max(caps.c_af1, caps.c_af2) - 1e-9
    assert check_plan(plan, caps, e) == []


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_swap_symmetry(eps1, eps2):
    chans = [ChannelModel.bec(eps1), ChannelModel.bec(eps2)]
    a = optimize_pcf(*network(chans[0], chans[1], chans[0], chans[1]))
    b = optimize_pcf(*network(chans[1], chans[0], chans[1], chans[0]))
    assert a.rate == pytest.approx(b.rate, abs=1e-6)


def test_objective_and_alpha2():
    caps, model = symmetric_network(ChannelModel.bec(0.2))
    e = entropies(model)
    a2 = alpha2_from(0.4, 0.3, caps)
    assert pcf_objective(0.4, 0.3, 0.9, caps, e) == pytest.approx(0.4 * e.i_z_xy + a2 * caps.c_af1)
    assert alpha2_from(1.0, 0.5, caps) == 0.0


def test_check_plan_flags_violations():
    caps, model = symmetric_network(ChannelModel.bec(0.1))
    e = entropies(model)
    assert "timeline" in check_plan(PcfPlan(0.9, 0.3, 0.5, 0.5, False, 0.0), caps, e)
    assert "Slepian-Wolf region" in check_plan(PcfPlan(0.3, 0.1, 0.0, 0.0, False, 0.0), caps, e)
    assert "description ordering" in check_plan(PcfPlan(0.3, 0.1, 1.0, 0.5, False, 0.0), caps, e)


@given(st.floats(-2, 3), st.floats(-2, 3), st.floats(0.0, 0.5))
def test_projection_lands_in_region(x, y, p):
    e = entropies(CorrelationModel.from_crossovers(p, p))
    v = project_rates((x, y), e, ordered=True)
    assert v[0] >= e.hx_given_y - 1e-9
    assert v[1] >= e.hy_given_x - 1e-9
    assert v[0] + v[1] >= e.hxy - 1e-9
    assert v[0] <= v[1] + 1e-9
    # projecting twice changes nothing
    assert np.allclose(project_rates(v, e, ordered=True), v, atol=1e-9)


@given(st.floats(-2, 3), st.floats(-2, 3))
def test_projection_is_nearest(x, y):
    e = entropies(CorrelationModel.from_crossovers(0.1, 0.2))
    v = project_rates((x, y), e, ordered=True)
    g = np.stack(np.meshgrid(np.linspace(-1, 3, 401), np.linspace(-1, 3, 401)), -1).reshape(-1, 2)
    ok = (g[:, 0] >= e.hx_given_y) & (g[:, 1] >= e.hy_given_x) & (g.sum(1) >= e.hxy) & (g[:, 0] <= g[:, 1])
    ok &= (g <= RATE_CAP).all(1)
    d_grid = np.min(np.hypot(*(g[ok] - (x, y)).T))
    assert np.hypot(v[0] - x, v[1] - y) <= d_grid + 1e-9


def test_baselines():
    assert df_single_relay(1.0, 1.0) == pytest.approx(2 / 3)
    assert df_single_relay(0.0, 1.0) == 0.0
    caps, _ = symmetric_network(ChannelModel.bec(0.0))
    assert best_relay_df_rate(caps) == pytest.approx(2 / 3)
    assert af_rate(caps) == pytest.approx(0.5)
    assert cutset_rate(caps) == pytest.approx(1.0, abs=1e-9)
    assert af_snr(np.inf, 3.0) == 3.0
    assert af_snr(2.0, 2.0) == pytest.approx(0.8)


@pytest.mark.parametrize("seed", range(5))
def test_cutset_bounds_everything(seed):
    caps, model = _random_network(np.random.default_rng(200 + seed))
    r = protocol_rates(caps, model)
    for name in ("PCF", "CF", "DF", "AF"):
        assert r[name] <= r["cutset"] + 1e-6, name


def test_cutset_single_relay_oracle():
    # with Relay-2 disconnected the bound is the half-duplex relay cut c_s c_d / (c_s + c_d)
    caps = NetworkCapacities(0.6, 0.0, 0.9, 0.0, 0.5, 0.0, 0.6)
    assert cutset_rate(caps) == pytest.approx(0.6 * 0.9 / 1.5, abs=1e-9)


def test_plan_record_round_trip():
    caps, model = symmetric_network(ChannelModel.biawgn_db(8.0))
    plan = optimize_pcf(caps, model)
    assert PcfPlan.from_record(plan.to_record()) == plan
    with pytest.raises(ValueError):
        PcfPlan.from_record("alpha1=0.1\n")
