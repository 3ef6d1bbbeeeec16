import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcf_relay import ChannelModel, Observation, transmit
from pcf_relay.channels import LLR_MAX
from pcf_relay.joint_decoder import (
    SideInfoModel,
    SideStatus,
    joint_decode,
    side_info_prior,
    side_info_probabilities,
)
from pcf_relay.rateless import lt_decode, lt_encode, robust_soliton

pe = st.floats(0.0, 0.5)


def _noiseless(bits):
    return Observation(np.where(np.asarray(bits) == 1, -LLR_MAX, LLR_MAX), np.zeros(len(bits), bool))


def test_probabilities_complementary():
    rng = np.random.default_rng(0)
    r = np.exp(rng.uniform(-20, 20, 10_000))
    for p1, p2 in rng.uniform(0, 0.5, (50, 2)):
        a, b = side_info_probabilities(r, SideInfoModel(p1, p2))
        assert np.max(np.abs(a + b - 1)) < 1e-12


def test_reference_values():
    m = SideInfoModel(0.1, 0.2)
    assert m.agreement == pytest.approx(0.74) and m.disagreement == pytest.approx(0.26)
    p1, p0 = side_info_probabilities(np.inf, m)
    assert (p1, p0) == pytest.approx((0.74, 0.26))
    assert side_info_prior(-LLR_MAX * 10, m) == pytest.approx(np.log(0.26 / 0.74), abs=1e-9)
    assert side_info_prior(-LLR_MAX * 10, m) == pytest.approx(-1.0459, abs=1e-4)
    assert side_info_probabilities(1.0, m) == pytest.approx((0.5, 0.5))
    assert side_info_prior(0.0, m) == 0.0


@given(st.floats(-LLR_MAX, LLR_MAX))
def test_identity_when_relays_agree(L):
    assert side_info_prior(L, SideInfoModel(0.0, 0.0)) == pytest.approx(L, abs=1e-9)


@given(st.floats(-50, 50), pe, pe)
def test_prior_is_bounded(L, p1, p2):
    m = SideInfoModel(p1, p2)
    assert abs(side_info_prior(L, m)) <= m.max_prior + 1e-9
    assert np.sign(side_info_prior(L, m)) in (0.0, np.sign(L))


@given(st.floats(-30, 30), pe, pe)
def test_prior_matches_ratio_form(L, p1, p2):
    m = SideInfoModel(p1, p2)
    p1y, p0y = side_info_probabilities(np.exp(-L), m)
    if min(p1y, p0y) > 1e-300:
        # the ratio form itself loses ~1e-7 relative precision at large |L|
        assert side_info_prior(L, m) == pytest.approx(np.log(p0y / p1y), abs=1e-9, rel=1e-6)


def test_invalid_model():
    with pytest.raises(ValueError):
        SideInfoModel(0.6, 0.1)


def _pair(k, nx, ny, seed, dist=None):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, k)
    dist = dist or robust_soliton(k)
    cx, gx = lt_encode(x, dist, 2 * seed, nx)
    cy, gy = lt_encode(x, dist, 2 * seed + 1, ny)
    return x, cx, gx, cy, gy


def test_both_decodable_finish_in_one_round():
    x, cx, gx, cy, gy = _pair(200, 400, 400, 3)
    res = joint_decode(_noiseless(cx), gx, _noiseless(cy), gy, SideInfoModel(0.1, 0.1), inner_iter=50)
    assert res.success and res.joint_iterations == 1
    assert np.array_equal(res.x_hat, x) and np.array_equal(res.y_hat, x)


def test_passthrough_when_descriptions_coincide():
    k = 100
    for seed in range(50):
        x, cx, gx, _, gy = _pair(k, 300, 20, seed)
        erased = Observation(np.zeros(20), np.ones(20, bool))
        res = joint_decode(_noiseless(cx), gx, erased, gy, SideInfoModel(0.0, 0.0))
        assert res.status_x is SideStatus.SUCCESS
        assert np.array_equal(res.y_hat, res.x_hat)
        assert np.array_equal(res.x_hat, x)


def test_independent_relays_decode_alone():
    rng = np.random.default_rng(9)
    for seed in range(10):
        x, cx, gx, cy, gy = _pair(150, 170, 170, seed)
        ox = transmit(cx, ChannelModel.bec(0.05), rng)
        oy = transmit(cy, ChannelModel.bec(0.05), rng)
        res = joint_decode(ox, gx, oy, gy, SideInfoModel(0.5, 0.1))
        # a useless side channel contributes exactly zero prior
        assert np.array_equal(np.clip(res.posterior_x, -LLR_MAX, LLR_MAX), res.extrinsic_x)
        alone_x = lt_decode(ox, gx, method="bp").success
        alone_y = lt_decode(oy, gy, method="bp").success
        assert res.success == (alone_x and alone_y)


def test_side_information_helps():
    # correlated but individually undecodable descriptions
    k, p = 300, 0.02
    model = SideInfoModel(p, p)
    wins_joint = wins_alone = 0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        z = rng.integers(0, 2, k)
        x = z ^ (rng.random(k) < p)
        y = z ^ (rng.random(k) < p)
        dist = robust_soliton(k)
        cx, gx = lt_encode(x, dist, 2 * seed, 260)
        cy, gy = lt_encode(y, dist, 2 * seed + 1, 260)
        res = joint_decode(_noiseless(cx), gx, _noiseless(cy), gy, model)
        wins_joint += np.array_equal(res.x_hat, x) and np.array_equal(res.y_hat, y)
        wins_alone += lt_decode(_noiseless(cx), gx).success and lt_decode(_noiseless(cy), gy).success
    assert wins_joint >= wins_alone
    assert wins_joint >= 20


def test_deterministic_and_trace(tmp_path):
    x, cx, gx, cy, gy = _pair(120, 130, 130, 4)
    args = (_noiseless(cx), gx, transmit(cy, ChannelModel.bsc(0.05), np.random.default_rng(1)), gy,
            SideInfoModel(0.05, 0.05))
    a = joint_decode(*args, trace=tmp_path / "t.csv")
    b = joint_decode(*args)
    assert np.array_equal(a.posterior_y, b.posterior_y) and a.joint_iterations == b.joint_iterations
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,mean_abs_ext_x,mean_abs_ext_y,unsat_x,unsat_y"
    assert len(lines) == a.joint_iterations + 1
    assert a.joint_iterations <= 40


def test_schedules_and_errors():
    x, cx, gx, cy, gy = _pair(80, 160, 160, 5)
    res = joint_decode(_noiseless(cx), gx, _noiseless(cy), gy, SideInfoModel(0.1, 0.1), schedule="parallel")
    assert res.success
    _, _, g_other, _, _ = _pair(81, 10, 10, 5)
    with pytest.raises(ValueError):
        joint_decode(_noiseless(cx), gx, _noiseless(np.zeros(10, int)), g_other, SideInfoModel(0, 0))
    with pytest.raises(ValueError):
        joint_decode(_noiseless(cx), gx, _noiseless(cy), gy, SideInfoModel(0, 0), schedule="random")
