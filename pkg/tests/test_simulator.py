import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcf_relay import ChannelModel, Observation, transmit
from pcf_relay.channels import LLR_MAX, bsc_from_biawgn
from pcf_relay.optimizer import NetworkCapacities, PcfPlan, best_relay_df_rate, symmetric_network
from pcf_relay.simulator import (
    PcfTimeline,
    Protocol,
    ProtocolConfig,
    af_link,
    allowed_failures,
    amplify_forward,
    bsc_llr_transfer,
    pcf_timeline,
    quantize,
    resolve_plan,
    run_af_trial,
    run_df_trial,
    run_pcf_trial,
    run_protocol_batch,
)

PERFECT = (ChannelModel.bec(0.0),) * 4


def _cfg(protocol="PCF", channels=PERFECT, **kw):
    kw.setdefault("k", 200)
    kw.setdefault("trials", 5)
    return ProtocolConfig(protocol, channels, **kw)


# -- relay primitives -----------------------------------------------------------------


def test_quantize_sign_rule():
    rng = np.random.default_rng(0)
    obs = Observation(np.array([2.3, -0.7, 0.0, 5.0]), np.array([False, False, False, True]))
    bits = quantize(obs, rng)
    assert bits[:2].tolist() == [0, 1]
    coins = [quantize(Observation(np.zeros(2000), np.zeros(2000, bool)), rng).mean()]
    assert abs(coins[0] - 0.5) < 0.05


def test_quantize_flip_rate_matches_crossover():
    rng = np.random.default_rng(1)
    snr = 2.0
    n = 100_000
    obs = transmit(np.zeros(n, dtype=int), ChannelModel.biawgn(snr), rng)
    p = bsc_from_biawgn(snr)
    assert abs(quantize(obs, rng).mean() - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_quantize_noiseless():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 300)
    assert np.array_equal(quantize(transmit(bits, ChannelModel.bsc(0.0), rng), rng), bits)


def test_amplify_forward_power():
    rng = np.random.default_rng(3)
    obs = transmit(rng.integers(0, 2, 100_000), ChannelModel.biawgn(1.0), rng)
    out = amplify_forward(obs, 1.0)
    assert np.mean(out ** 2) == pytest.approx(1.0, abs=0.02)
    clean = transmit(np.array([0, 1, 1]), ChannelModel.biawgn(np.inf), rng)
    assert np.array_equal(amplify_forward(clean, np.inf), clean.received)
    assert not amplify_forward(obs, 1.0, target_power=0.0).any()
    with pytest.raises(ValueError):
        amplify_forward(Observation(np.zeros(2), np.zeros(2, bool)), 1.0)


def test_af_link_llr_is_consistent():
    rng = np.random.default_rng(4)
    ch = ChannelModel.biawgn(2.0)
    obs = transmit(np.zeros(200_000, dtype=int), ch, rng)
    llr = af_link(obs, ch, ch, rng).llr
    assert np.mean(np.exp(-llr)) == pytest.approx(1.0, abs=0.03)


def test_af_link_discrete():
    rng = np.random.default_rng(5)
    obs = transmit(np.zeros(50_000, dtype=int), ChannelModel.bec(0.2), rng)
    out = af_link(obs, ChannelModel.bec(0.2), ChannelModel.bec(0.5), rng)
    assert out.erased.mean() == pytest.approx(1 - 0.8 * 0.5, abs=0.01)
    obs = transmit(np.zeros(50_000, dtype=int), ChannelModel.bsc(0.1), rng)
    out = af_link(obs, ChannelModel.bsc(0.1), ChannelModel.bsc(0.1), rng)
    assert (out.llr < 0).mean() == pytest.approx(0.18, abs=0.01)


@given(st.floats(-LLR_MAX, LLR_MAX), st.floats(0.0, 0.5))
def test_bsc_llr_transfer(L, p):
    out = bsc_llr_transfer(L, p)
    assert abs(out) <= abs(L) + 1e-9
    if p == 0.5:
        assert out == 0.0


# -- timelines and budgets ------------------------------------------------------------


@given(st.floats(0.0, 0.3), st.floats(1.0, 2.0), st.floats(0.0, 0.6))
def test_timeline_invariants(eps, backoff, margin):
    cfg = _cfg(channels=(ChannelModel.bec(eps),) * 4, k=1000)
    plan = resolve_plan(cfg)
    tl = pcf_timeline(cfg, plan, backoff, margin)
    N = backoff * cfg.k / plan.rate
    c = 1 - eps
    # each relay's schedule fits the frame up to rounding and margin slack;
    # the margin also stretches the ceiling slack of the description length
    slack_x = 4 + (1 + plan.rx / c) * (1 + margin) + 1e-6
    slack_y = 2 + (1 + plan.ry / c) * (1 + margin) + 1e-6
    assert tl.relay1 <= N + slack_x + margin * plan.alpha1 * N * plan.rx / c
    assert tl.relay2 <= N + slack_y + margin * plan.alpha1 * N * plan.ry / c
    # description budgets: length <= ceil(k1 r / C) (1 + margin)
    assert tl.n_x <= math.ceil(math.ceil(tl.k1 * plan.rx / c) * (1 + margin))
    assert tl.n_y <= math.ceil(math.ceil(tl.k1 * plan.ry / c) * (1 + margin))
    assert tl.frame == max(tl.relay1, tl.relay2)


def test_timeline_relay_fractions_sum_to_one():
    cfg = _cfg(channels=(ChannelModel.bec(0.1),) * 4, k=4000)
    plan = resolve_plan(cfg)
    tl = pcf_timeline(cfg, plan, 1.0, 0.0)
    N = cfg.k / plan.rate
    assert abs(tl.relay1 - N) <= 4 and abs(tl.relay2 - N) <= 3


def test_zero_rate_plan_rejected():
    with pytest.raises(ValueError):
        pcf_timeline(_cfg(), PcfPlan(0, 0, 0, 0, False, 0.0), 1.0, 0.1)


def test_infeasible_plan_rejected():
    bad = PcfPlan(0.9, 0.3, 0.5, 0.5, False, 0.9)
    with pytest.raises(ValueError):
        run_protocol_batch(_cfg(plan=bad))


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(trials=0)
    with pytest.raises(ValueError):
        _cfg(reliability_target=1.0)
    with pytest.raises(ValueError):
        _cfg(fusion="median")
    assert _cfg(overhead_margin=0.1, margins=(0.3, 0.1)).rate_points[:2] == [(1.0, 0.1), (1.0, 0.3)]


# -- trials ---------------------------------------------------------------------------


@pytest.mark.parametrize("protocol", ["PCF", "CF"])
def test_noiseless_pcf_succeeds(protocol):
    cfg = _cfg(protocol, k=400)
    plan = resolve_plan(cfg)
    for seed in range(3):
        out = run_pcf_trial(cfg, seed, backoff=1.3, margin=0.5, plan=plan)
        assert out.success
        assert out.frame == pcf_timeline(cfg, plan, 1.3, 0.5).frame


def test_dead_relay2_link_is_an_outcome_not_an_error():
    chans = (ChannelModel.bec(0.0), ChannelModel.bec(0.0), ChannelModel.bec(0.0), ChannelModel.bec(1.0))
    cfg = _cfg(channels=chans, k=200)
    forced = PcfPlan(0.3, 0.2, 0.0, 1.0, False, 0.5)
    out = run_pcf_trial(cfg, 0, backoff=1.2, margin=0.2, plan=forced)
    assert out.success in (True, False)
    assert out.relay_symbols_sent[1] > 0


def test_trial_determinism():
    ch = (ChannelModel.biawgn_db(8.0),) * 4
    cfg = _cfg(channels=ch, k=300)
    a, b = run_pcf_trial(cfg, 7, 1.3, 0.3), run_pcf_trial(cfg, 7, 1.3, 0.3)
    assert a == b


def test_df_noiseless_decodes_at_first_attempt():
    cfg = _cfg("DF", k=400)
    out = run_df_trial(cfg, 0)
    assert out.success
    # relays need the intermediate block plus a little, the destination half as long again
    assert out.source_symbols_sent <= 600
    assert out.frame <= out.source_symbols_sent + 400


def test_df_useless_source_links_fail_at_cap():
    chans = (ChannelModel.bec(1.0), ChannelModel.bec(1.0), ChannelModel.bec(0.0), ChannelModel.bec(0.0))
    cfg = _cfg("DF", channels=chans, k=100)
    out = run_df_trial(cfg, 0)
    assert not out.success and out.frame == cfg.df_cap_factor * cfg.k


def test_af_noiseless():
    out = run_af_trial(_cfg("AF", k=300), 0, backoff=1.3)
    assert out.success and out.frame == 2 * out.source_symbols_sent


def test_df_bsc_budget():
    chans = (ChannelModel.bsc(0.05),) * 4
    cfg = _cfg("DF", channels=chans, k=4000)
    caps = NetworkCapacities.from_channels(*chans)
    budget = cfg.k / best_relay_df_rate(caps)
    frames = [run_df_trial(cfg, s).frame for s in range(4)]
    assert np.mean(frames) <= 1.15 * budget, (frames, budget)


# -- batches --------------------------------------------------------------------------


def test_zero_target_gives_nominal_rate():
    cfg = _cfg(reliability_target=0.0, overhead_margin=0.0, margins=(), trials=2, k=500)
    stats = run_protocol_batch(cfg)
    assert stats.rate == pytest.approx(stats.nominal_rate, rel=5e-3)
    assert stats.backoff == 1.0


def test_batch_determinism_and_rate_bound():
    ch = (ChannelModel.bec(0.05),) * 4
    cfg = _cfg(channels=ch, k=300, trials=10, reliability_target=0.9)
    a, b = run_protocol_batch(cfg), run_protocol_batch(cfg)
    assert (a.rate, a.reliability, a.backoff, a.margin) == (b.rate, b.reliability, b.backoff, b.margin)
    assert [o.seed for o in a.outcomes] == list(range(10))
    assert 0 < a.rate <= a.nominal_rate
    assert allowed_failures(cfg) == 1


def test_parallel_batch_matches_serial():
    cfg = _cfg(channels=(ChannelModel.bec(0.05),) * 4, k=300, trials=4, reliability_target=0.5)
    a, b = run_protocol_batch(cfg), run_protocol_batch(replace(cfg, jobs=2))
    assert a.rate == b.rate and [o.success for o in a.outcomes] == [o.success for o in b.outcomes]


def test_success_monotone_in_backoff():
    ch = (ChannelModel.bec(0.05),) * 4
    cfg = _cfg(channels=ch, k=300, trials=30)
    plan = resolve_plan(cfg)
    rates = []
    for b in (1.1, 1.3, 1.6):
        rates.append(np.mean([run_pcf_trial(cfg, s, b, 0.3, plan).success for s in range(30)]))
    for lo, hi in zip(rates, rates[1:]):
        se = math.sqrt(max(lo * (1 - lo), hi * (1 - hi), 1 / 30) / 30)
        assert hi >= lo - 2 * se
