"""Monte-Carlo simulation of PCF, pure CF, DF and AF over the diamond network.

Frames are counted in channel uses. For PCF with frame length ``N``:

    source    | k1 symbols to both relays | k2 symbols (Relay-1 listens) |
    Relay-1   | listen k1 + k2 | LT description (n_x) | amplify k2 tail |
    Relay-2   | listen k1      | LT description (n_y) ...             |

and the achieved rate is ``k / T`` with ``T`` the longest relay timeline.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from pcf_relay.channels import (
    LLR_MAX,
    ChannelKind,
    ChannelModel,
    Observation,
    capacity,
    hard_decision_crossover,
    transmit,
)
from pcf_relay.info import correlation_model, entropies
from pcf_relay.joint_decoder import SideInfoModel, joint_decode
from pcf_relay.optimizer import (
    NetworkCapacities,
    PcfPlan,
    af_cascade_capacity,
    af_snr,
    best_relay_df_rate,
    check_plan,
    optimize_pcf,
    pure_cf_plan,
)
from pcf_relay.rateless.degree import DegreeDistribution, robust_soliton
from pcf_relay.rateless.lt import LtGraph
from pcf_relay.rateless.raptor import precode_for, raptor_decode

# per-trial rng stream tags
_INFO, _SR1, _SR2, _QUANT, _R1D, _R2D = range(6)


class Protocol(str, enum.Enum):
    PCF = "PCF"
    CF = "CF"
    DF = "DF"
    AF = "AF"


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one batch of trials needs.

    ``channels`` is ``(s->1, s->2, 1->d, 2->d)``. ``plan`` is computed from the
    channels when omitted (PCF and CF only). Rate points are the products of
    ``backoffs`` (frame stretch relative to the plan) and ``margins`` (LT
    description overhead); ``overhead_margin`` is always among the margins.
    """

    protocol: Protocol
    channels: tuple[ChannelModel, ChannelModel, ChannelModel, ChannelModel]
    k: int = 4000
    plan: PcfPlan | None = None
    lt_c: float = 0.03
    lt_delta: float = 0.5
    precode_seed: int = 0
    overhead_margin: float = 0.1
    margins: tuple[float, ...] = (0.2, 0.3, 0.45, 0.6)
    backoffs: tuple[float, ...] = (1.0, 1.05, 1.1, 1.15, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0)
    df_granularity: int = 100
    df_cap_factor: int = 20
    reliability_target: float = 0.99
    trials: int = 200
    base_seed: int = 0
    max_joint_iter: int = 40
    inner_iter: int = 2
    schedule: str = "serial"
    fusion: str = "soft"
    raptor_max_iter: int = 200
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if not 0.0 <= self.reliability_target < 1.0:
            raise ValueError("reliability_target must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.channels) != 4:
            raise ValueError("channels must be (s1, s2, 1d, 2d)")
        if self.fusion not in ("soft", "hard"):
            raise ValueError("fusion must be 'soft' or 'hard'")
        if self.overhead_margin < 0 or self.df_granularity < 1:
            raise ValueError("overhead_margin must be >= 0 and df_granularity >= 1")

    @property
    def rate_points(self) -> list[tuple[float, float]]:
        margins = sorted({self.overhead_margin, *self.margins})
        return [(b, m) for b in self.backoffs for m in margins]


@dataclass
class TrialOutcome:
    success: bool
    source_symbols_sent: int
    relay_symbols_sent: tuple[int, int]
    frame: int
    joint_iterations: int
    seed: int


@dataclass
class BatchStats:
    protocol: str
    rate: float
    nominal_rate: float
    reliability: float
    trials: int
    mean_iterations: float
    backoff: float = float("nan")
    margin: float = float("nan")
    outcomes: list[TrialOutcome] = field(default_factory=list, repr=False)


# -- relay primitives ---------------------------------------------------------------


def quantize(obs: Observation, rng: np.random.Generator) -> np.ndarray:
    """Sign quantizer: positive LLR -> 0, negative -> 1, erasures and ties -> coin."""
    llr = np.asarray(obs.llr, dtype=float)
    bits = (llr < 0).astype(np.int8)
    tie = np.asarray(obs.erased, dtype=bool) | (llr == 0)
    n_tie = int(tie.sum())
    if n_tie:
        bits[tie] = rng.integers(0, 2, n_tie, dtype=np.int8)
    return bits


def amplify_forward(obs: Observation, snr_in: float, target_power: float = 1.0) -> np.ndarray:
    """Scale received BPSK samples to average power ``target_power``."""
    if obs.received is None:
        raise ValueError("amplify-forward needs real-valued received samples")
    if target_power <= 0.0:
        return np.zeros(len(obs))
    rx_power = 1.0 + (0.0 if snr_in == np.inf else 1.0 / snr_in)
    return np.sqrt(target_power / rx_power) * np.asarray(obs.received, dtype=float)


def af_link(obs_relay: Observation, ch_in: ChannelModel, ch_out: ChannelModel,
            rng: np.random.Generator) -> Observation:
    """Destination LLRs for symbols a relay forwards without decoding."""
    n = len(obs_relay)
    if ch_in.kind is ChannelKind.BEC:
        # erasures are forwarded as erasures; survivors cross the second hop
        hop = rng.random(n) < ch_out.param
        erased = obs_relay.erased | hop
        return Observation(np.where(erased, 0.0, obs_relay.llr), erased)
    if ch_in.kind is ChannelKind.BSC:
        bits = (obs_relay.llr < 0).astype(np.int8)
        flips = rng.random(n) < ch_out.param
        p = ch_in.param * (1 - ch_out.param) + ch_out.param * (1 - ch_in.param)
        mag = LLR_MAX if p <= 0 else min(np.log((1 - p) / p), LLR_MAX)
        return Observation(mag * (1.0 - 2.0 * (bits ^ flips)), np.zeros(n, dtype=bool))
    g_in, g_out = ch_in.param, ch_out.param
    sent = amplify_forward(obs_relay, g_in)
    gain = 1.0 if g_in == np.inf else math.sqrt(g_in / (g_in + 1.0))
    noise = 0.0 if g_out == np.inf else rng.standard_normal(n) * math.sqrt(1.0 / g_out)
    y = (sent + noise) / gain
    g_eff = af_snr(g_in, g_out)
    llr = np.clip(2.0 * g_eff * y, -LLR_MAX, LLR_MAX) if g_eff != np.inf else LLR_MAX * np.sign(y)
    return Observation(llr, np.zeros(n, dtype=bool), y)


def bsc_llr_transfer(llr, p: float) -> np.ndarray:
    """LLR about z given an LLR about x = z xor Bernoulli(p)."""
    L = np.clip(np.asarray(llr, dtype=float), -LLR_MAX, LLR_MAX)
    with np.errstate(divide="ignore"):
        lp, lq = np.log(p), np.log1p(-p)
    # log((1-p) e^L + p) - log(p e^L + 1-p), exact at p = 0
    return np.logaddexp(lq + L, lp) - np.logaddexp(lp + L, lq)


@lru_cache(maxsize=64)
def _dist(k: int, c: float, delta: float) -> DegreeDistribution:
    if k < 2:
        return DegreeDistribution(np.array([1]), np.array([1.0]))
    return robust_soliton(k, c, delta)


def _gseed(seed: int, tag: int) -> int:
    return (int(seed) * 16 + tag) % (1 << 62)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), tag])


# -- PCF / CF -------------------------------------------------------------------------


def oriented_channels(cfg: ProtocolConfig, plan: PcfPlan):
    s1, s2, d1, d2 = cfg.channels
    return (s2, s1, d2, d1) if plan.swapped else (s1, s2, d1, d2)


def resolve_plan(cfg: ProtocolConfig) -> PcfPlan:
    if cfg.plan is not None:
        return cfg.plan
    caps = NetworkCapacities.from_channels(*cfg.channels)
    model = correlation_model(cfg.channels[0], cfg.channels[1])
    if cfg.protocol is Protocol.CF:
        return pure_cf_plan(caps, model)
    return optimize_pcf(caps, model)


@dataclass(frozen=True)
class PcfTimeline:
    k1: int
    k2: int
    n_x: int
    n_y: int

    @property
    def relay1(self) -> int:
        return self.k1 + 2 * self.k2 + self.n_x

    @property
    def relay2(self) -> int:
        return self.k1 + self.n_y

    @property
    def frame(self) -> int:
        return max(self.relay1, self.relay2, 1)


def _description_length(k1: int, r: float, c: float, margin: float) -> int:
    if k1 == 0 or r <= 0.0:
        return 0
    if c <= 0.0:
        # a dead link still spends the slot; every symbol arrives erased
        c = 1.0
    return math.ceil(math.ceil(k1 * r / c) * (1.0 + margin))


def pcf_timeline(cfg: ProtocolConfig, plan: PcfPlan, backoff: float, margin: float) -> PcfTimeline:
    if plan.rate <= 0.0:
        raise ValueError("plan has zero rate")
    _, _, d1, d2 = oriented_channels(cfg, plan)
    N = backoff * cfg.k / plan.rate
    k1 = math.ceil(plan.alpha1 * N - 1e-9)
    k2 = math.ceil(plan.alpha2 * N - 1e-9)
    return PcfTimeline(
        k1, k2,
        _description_length(k1, plan.rx, capacity(d1), margin),
        _description_length(k1, plan.ry, capacity(d2), margin),
    )


def validate_plan(cfg: ProtocolConfig, plan: PcfPlan, tol: float = 1e-6) -> None:
    s1, s2, d1, d2 = cfg.channels
    caps = NetworkCapacities.from_channels(s1, s2, d1, d2)
    e = entropies(correlation_model(s1, s2))
    bad = check_plan(plan, caps, e, tol)
    if cfg.protocol is Protocol.CF:
        bad = [b for b in bad if b not in ("description ordering", "alpha2 bound")]
    if bad:
        raise ValueError(f"infeasible plan: {', '.join(bad)}")


def run_pcf_trial(cfg: ProtocolConfig, seed: int, backoff: float = 1.0, margin: float | None = None,
                  plan: PcfPlan | None = None) -> TrialOutcome:
    """One frame of PCF (or pure CF when the plan has ``alpha2 = 0``)."""
    plan = plan or resolve_plan(cfg)
    margin = cfg.overhead_margin if margin is None else margin
    s1, s2, d1, d2 = oriented_channels(cfg, plan)
    tl = pcf_timeline(cfg, plan, backoff, margin)
    k1, k2 = tl.k1, tl.k2
    code = precode_for(cfg.k, cfg.precode_seed)
    info = _rng(seed, _INFO).integers(0, 2, cfg.k, dtype=np.int8)
    word = np.zeros(code.n_info, dtype=np.int8)
    word[: cfg.k] = info
    inter = code.encode(word)
    graph = LtGraph.generate(code.n_variables, k1 + k2, _dist(code.n_variables, cfg.lt_c, cfg.lt_delta),
                             _gseed(seed, 0))
    coded = graph.encode(inter)

    obs1 = transmit(coded, s1, _rng(seed, _SR1))
    obs2 = transmit(coded[:k1], s2, _rng(seed, _SR2))
    qrng = _rng(seed, _QUANT)
    pe1, pe2 = hard_decision_crossover(s1), hard_decision_crossover(s2)
    joint_iters = 0
    fused = np.zeros(k1)
    if k1 > 0:
        x = quantize(obs1[:k1], qrng)
        y = quantize(obs2, qrng)
        dist1 = _dist(k1, cfg.lt_c, cfg.lt_delta)
        gx = LtGraph.generate(k1, tl.n_x, dist1, _gseed(seed, 1))
        gy = LtGraph.generate(k1, tl.n_y, dist1, _gseed(seed, 2))
        ox = transmit(gx.encode(x), d1, _rng(seed, _R1D))
        oy = transmit(gy.encode(y), d2, _rng(seed, _R2D))
        res = joint_decode(ox, gx, oy, gy, SideInfoModel(pe1, pe2), cfg.max_joint_iter, cfg.inner_iter,
                           cfg.schedule)
        joint_iters = res.joint_iterations
        if cfg.fusion == "soft":
            lx, ly = res.extrinsic_x, res.extrinsic_y
        else:
            lx = LLR_MAX * (1.0 - 2.0 * res.x_hat)
            ly = LLR_MAX * (1.0 - 2.0 * res.y_hat)
        fused = np.clip(bsc_llr_transfer(lx, pe1) + bsc_llr_transfer(ly, pe2), -LLR_MAX, LLR_MAX)
    tail = af_link(obs1[k1:], s1, d1, _rng(seed, _R1D + 16)) if k2 > 0 else Observation(np.zeros(0), np.zeros(0, bool))
    head = Observation(fused, fused == 0.0)
    obs = Observation.concat([head, Observation(tail.llr, tail.erased)])
    dec = raptor_decode(obs, graph, code, cfg.raptor_max_iter, k=cfg.k)
    ok = dec.success and bool(np.array_equal(dec.hard_bits, info))
    return TrialOutcome(ok, k1 + k2, (tl.n_x + k2, tl.n_y), tl.frame, joint_iters, seed)


# -- AF -------------------------------------------------------------------------------


def _af_relay(cfg: ProtocolConfig) -> int:
    s1, s2, d1, d2 = cfg.channels
    return 0 if af_cascade_capacity(s1, d1) >= af_cascade_capacity(s2, d2) else 1


def af_nominal_rate(cfg: ProtocolConfig) -> float:
    s1, s2, d1, d2 = cfg.channels
    return max(af_cascade_capacity(s1, d1), af_cascade_capacity(s2, d2)) / 2.0


def run_af_trial(cfg: ProtocolConfig, seed: int, backoff: float = 1.0) -> TrialOutcome:
    """Best single relay listens for half the frame and amplifies the other half."""
    r = af_nominal_rate(cfg)
    if r <= 0.0:
        return TrialOutcome(False, 0, (0, 0), 0, 0, seed)
    i = _af_relay(cfg)
    ch_in, ch_out = cfg.channels[i], cfg.channels[2 + i]
    n = math.ceil(backoff * cfg.k / r / 2.0 - 1e-9)
    code = precode_for(cfg.k, cfg.precode_seed)
    info = _rng(seed, _INFO).integers(0, 2, cfg.k, dtype=np.int8)
    word = np.zeros(code.n_info, dtype=np.int8)
    word[: cfg.k] = info
    graph = LtGraph.generate(code.n_variables, n, _dist(code.n_variables, cfg.lt_c, cfg.lt_delta), _gseed(seed, 0))
    coded = graph.encode(code.encode(word))
    obs = af_link(transmit(coded, ch_in, _rng(seed, _SR1)), ch_in, ch_out, _rng(seed, _R1D))
    dec = raptor_decode(Observation(obs.llr, obs.erased), graph, code, cfg.raptor_max_iter, k=cfg.k)
    ok = dec.success and bool(np.array_equal(dec.hard_bits, info))
    sent = (n, 0) if i == 0 else (0, n)
    return TrialOutcome(ok, n, sent, 2 * n, 0, seed)


# -- DF -------------------------------------------------------------------------------


def _concat_graphs(graphs: list[LtGraph]) -> LtGraph:
    k = graphs[0].k
    offs, idxs, base = [np.zeros(1, dtype=np.int64)], [], 0
    for g in graphs:
        offs.append(g.offsets[1:] + base)
        idxs.append(g.indices)
        base += int(g.offsets[-1])
    return LtGraph(k, sum(g.n for g in graphs), -1, np.concatenate(offs), np.concatenate(idxs))


def run_df_trial(cfg: ProtocolConfig, seed: int) -> TrialOutcome:
    """Relays decode every ``df_granularity`` symbols, then re-encode and stream on.

    The destination combines both relay streams and also tries to decode every
    ``df_granularity`` channel uses. Failure is declared at ``df_cap_factor * k``.
    """
    g = cfg.df_granularity
    cap = cfg.df_cap_factor * cfg.k
    code = precode_for(cfg.k, cfg.precode_seed)
    dist = _dist(code.n_variables, cfg.lt_c, cfg.lt_delta)
    info = _rng(seed, _INFO).integers(0, 2, cfg.k, dtype=np.int8)
    word = np.zeros(code.n_info, dtype=np.int8)
    word[: cfg.k] = info
    inter = code.encode(word)
    graph = LtGraph.generate(code.n_variables, cap, dist, _gseed(seed, 0))
    coded = graph.encode(inter)

    def first_decode(obs: Observation, g0: LtGraph, start: int, limit: int):
        t = max(g, (start // g) * g)
        while t <= limit:
            res = raptor_decode(obs[:t], g0.prefix(t), code, cfg.raptor_max_iter, k=cfg.k)
            if res.success:
                return t
            t += g
        return None

    done = []
    for i, tag in ((0, _SR1), (1, _SR2)):
        ch = cfg.channels[i]
        c = capacity(ch)
        if c <= 0.0:
            done.append(None)
            continue
        obs = transmit(coded, ch, _rng(seed, tag))
        done.append(first_decode(obs, graph, int(cfg.k / c), cap))

    # relay streams towards the destination, each from its decode time on
    streams = []
    for i, t_i in enumerate(done):
        if t_i is None or capacity(cfg.channels[2 + i]) <= 0.0:
            continue
        n_i = cap - t_i
        gi = LtGraph.generate(code.n_variables, n_i, dist, _gseed(seed, 3 + i))
        oi = transmit(gi.encode(inter), cfg.channels[2 + i], _rng(seed, _R1D + i))
        streams.append((t_i, gi, oi))
    relay_sent = [0, 0]
    if not streams:
        return TrialOutcome(False, max([t for t in done if t] or [cap]), (0, 0), cap, 0, seed)

    rates = [capacity(cfg.channels[2 + i]) for i, t in enumerate(done) if t is not None and capacity(cfg.channels[2 + i]) > 0]
    t_first = min(s[0] for s in streams)
    # no point trying before the combined streams could carry k bits
    t = t_first + g
    est = t_first + int(cfg.k / max(sum(rates), 1e-12))
    t = max(t, (est // g) * g)
    while t <= cap:
        gs, os_ = [], []
        for t_i, gi, oi in streams:
            m = max(0, t - t_i)
            if m:
                gs.append(gi.prefix(m))
                os_.append(oi[:m])
        if gs:
            res = raptor_decode(Observation.concat(os_), _concat_graphs(gs), code, cfg.raptor_max_iter, k=cfg.k)
            if res.success and np.array_equal(res.hard_bits, info):
                for j, (t_i, _, _) in enumerate(streams):
                    relay_sent[j] = max(0, t - t_i)
                return TrialOutcome(True, max(d for d in done if d is not None), tuple(relay_sent), t, 0, seed)
        t += g
    return TrialOutcome(False, max(d for d in done if d is not None), (0, 0), cap, 0, seed)


# -- batches --------------------------------------------------------------------------


def _run_point(args):
    cfg, plan, seed, backoff, margin = args
    if cfg.protocol is Protocol.AF:
        return run_af_trial(cfg, seed, backoff)
    if cfg.protocol is Protocol.DF:
        return run_df_trial(cfg, seed)
    return run_pcf_trial(cfg, seed, backoff, margin, plan)


def _map(cfg: ProtocolConfig, tasks, pool):
    if pool is None:
        return [_run_point(t) for t in tasks]
    return list(pool.map(_run_point, tasks))


def _trial_loop(cfg, plan, backoff, margin, allowed, pool):
    outcomes, fails = [], 0
    chunk = max(cfg.jobs, 1)
    for start in range(0, cfg.trials, chunk):
        seeds = range(cfg.base_seed + start, cfg.base_seed + min(start + chunk, cfg.trials))
        for o in _map(cfg, [(cfg, plan, s, backoff, margin) for s in seeds], pool):
            outcomes.append(o)
            fails += not o.success
        if fails > allowed:
            break
    return outcomes, fails


def allowed_failures(cfg: ProtocolConfig) -> int:
    return int(math.floor((1.0 - cfg.reliability_target) * cfg.trials + 1e-9))


def run_protocol_batch(cfg: ProtocolConfig) -> BatchStats:
    """Achieved rate at the reliability target; trial ``i`` uses seed ``base_seed + i``.

    PCF, CF and AF try rate points from the fastest down and keep the first one
    whose success rate meets the target. DF reports ``k`` over the target
    quantile of its frame lengths.
    """
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        if cfg.protocol is Protocol.DF:
            outs, _ = _trial_loop(replace(cfg, reliability_target=0.0), None, 1.0, 0.0, cfg.trials, pool)
            frames = np.array([o.frame if o.success else np.inf for o in outs])
            rel = float(np.mean(np.isfinite(frames)))
            q = float(np.quantile(frames, cfg.reliability_target, method="higher")) if len(frames) else np.inf
            caps = NetworkCapacities.from_channels(*cfg.channels)
            rate = cfg.k / q if np.isfinite(q) and rel >= cfg.reliability_target else 0.0
            return BatchStats("DF", rate, best_relay_df_rate(caps), rel, len(outs), 0.0, outcomes=outs)
        allowed = allowed_failures(cfg)
        if cfg.protocol is Protocol.AF:
            nominal = af_nominal_rate(cfg)
            points = [(b, 0.0, cfg.k / (2 * math.ceil(b * cfg.k / nominal / 2.0 - 1e-9)))
                      for b in cfg.backoffs] if nominal > 0 else []
            plan = None
        else:
            plan = resolve_plan(cfg)
            validate_plan(cfg, plan)
            nominal = plan.rate
            points = []
            if plan.rate > 0:
                for b, m in cfg.rate_points:
                    points.append((b, m, cfg.k / pcf_timeline(cfg, plan, b, m).frame))
        points.sort(key=lambda p: -p[2])
        best_rel = 0.0
        for b, m, r in points:
            outs, fails = _trial_loop(cfg, plan, b, m, allowed, pool)
            rel = 1.0 - fails / len(outs)
            best_rel = max(best_rel, rel)
            if fails <= allowed and len(outs) == cfg.trials:
                its = float(np.mean([o.joint_iterations for o in outs]))
                return BatchStats(cfg.protocol.value, r, nominal, rel, len(outs), its, b, m, outs)
        return BatchStats(cfg.protocol.value, 0.0, nominal, best_rel, cfg.trials, 0.0)
    finally:
        if pool is not None:
            pool.shutdown()
