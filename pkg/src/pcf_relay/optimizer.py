"""Achievable rates: PCF rate maximization by projected gradient ascent, plus
the pure-CF, best-relay DF, AF and half-duplex cut-set baselines.

Conventions. Relay-1 is the "partial" relay: it listens for ``alpha1 + alpha2``
of the frame, forwards a description of rate ``rx`` (bits per source symbol)
of the first ``alpha1`` part, then amplifies the ``alpha2`` tail. Relay-2
listens for ``alpha1`` and forwards a description of rate ``ry``. Relay-1 sends
the shorter description, so ``rx <= ry``.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from pcf_relay.channels import ChannelKind, ChannelModel, biawgn_capacity, capacity, h2
from pcf_relay.info import CorrelationModel, EntropySet, correlation_model, entropies

FEAS_TOL = 1e-9
RATE_CAP = 2.0  # rates beyond H(X,Y) <= 2 are never useful


@dataclass(frozen=True)
class NetworkCapacities:
    """Link capacities in bits per channel use.

    ``c_af1``/``c_af2`` are the end-to-end amplify-and-forward capacities through
    Relay-1/Relay-2; ``c_s12`` is the capacity from the source to both relays
    listening together (used only by the cut-set bound).
    """

    c_s1: float
    c_s2: float
    c_1d: float
    c_2d: float
    c_af1: float
    c_af2: float | None = None
    c_s12: float | None = None

    @classmethod
    def from_channels(cls, ch_s1, ch_s2, ch_1d, ch_2d) -> "NetworkCapacities":
        return cls(
            c_s1=capacity(ch_s1),
            c_s2=capacity(ch_s2),
            c_1d=capacity(ch_1d),
            c_2d=capacity(ch_2d),
            c_af1=af_cascade_capacity(ch_s1, ch_1d),
            c_af2=af_cascade_capacity(ch_s2, ch_2d),
            c_s12=broadcast_capacity(ch_s1, ch_s2),
        )

    def swapped(self) -> "NetworkCapacities":
        c_af2 = self.c_af1 if self.c_af2 is None else self.c_af2
        return NetworkCapacities(
            self.c_s2, self.c_s1, self.c_2d, self.c_1d, c_af2, self.c_af1, self.c_s12
        )


@dataclass(frozen=True)
class PcfPlan:
    alpha1: float
    alpha2: float
    rx: float
    ry: float
    swapped: bool
    rate: float

    def to_record(self) -> str:
        lines = []
        for key, val in asdict(self).items():
            lines.append(f"{key}={str(val).lower() if isinstance(val, bool) else repr(float(val))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_record(cls, text: str) -> "PcfPlan":
        vals = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            vals[key.strip()] = val.strip()
        missing = {"alpha1", "alpha2", "rx", "ry", "swapped", "rate"} - vals.keys()
        if missing:
            raise ValueError(f"plan record missing keys: {sorted(missing)}")
        return cls(
            alpha1=float(vals["alpha1"]),
            alpha2=float(vals["alpha2"]),
            rx=float(vals["rx"]),
            ry=float(vals["ry"]),
            swapped=vals["swapped"].lower() == "true",
            rate=float(vals["rate"]),
        )


def _same_kind(a: ChannelModel, b: ChannelModel):
    if a.kind is not b.kind:
        raise ValueError(f"mixed channel kinds {a.kind.value}/{b.kind.value} not supported")


def af_snr(snr_in: float, snr_out: float) -> float:
    """End-to-end SNR of a two-hop amplify-and-forward link."""
    if snr_in == np.inf:
        return snr_out
    if snr_out == np.inf:
        return snr_in
    return snr_in * snr_out / (snr_in + snr_out + 1.0)


def af_cascade_capacity(ch_s1: ChannelModel, ch_1d: ChannelModel) -> float:
    _same_kind(ch_s1, ch_1d)
    if ch_s1.kind is ChannelKind.BEC:
        return (1.0 - ch_s1.param) * (1.0 - ch_1d.param)
    if ch_s1.kind is ChannelKind.BSC:
        p, q = ch_s1.param, ch_1d.param
        return 1.0 - h2(p * (1.0 - q) + q * (1.0 - p))
    return biawgn_capacity(af_snr(ch_s1.param, ch_1d.param))


def broadcast_capacity(ch_s1: ChannelModel, ch_s2: ChannelModel) -> float:
    """I(source; both relay outputs) for uniform binary input."""
    if ch_s1.kind is not ch_s2.kind:
        return min(1.0, capacity(ch_s1) + capacity(ch_s2))
    if ch_s1.kind is ChannelKind.BEC:
        return 1.0 - ch_s1.param * ch_s2.param
    if ch_s1.kind is ChannelKind.BSC:
        p, q = ch_s1.param, ch_s2.param
        return 1.0 + h2(p * (1 - q) + q * (1 - p)) - h2(p) - h2(q)
    return biawgn_capacity(ch_s1.param + ch_s2.param)


def pcf_objective(alpha1: float, rx: float, ry: float, caps: NetworkCapacities, e: EntropySet) -> float:
    """PCF rate with the AF fraction alpha2 at its largest admissible value."""
    c1d = caps.c_1d
    return alpha1 * e.i_z_xy + (0.5 - alpha1 * (c1d + rx) / (2.0 * c1d)) * caps.c_af1


def alpha1_bound(rx: float, ry: float, caps: NetworkCapacities) -> float:
    """Largest alpha1 such that Relay-2 fits its description and alpha2 >= 0."""
    if caps.c_2d <= 0.0 or caps.c_1d <= 0.0:
        return 0.0
    return min(caps.c_2d / (ry + caps.c_2d), caps.c_1d / (caps.c_1d + rx))


def alpha2_from(alpha1: float, rx: float, caps: NetworkCapacities) -> float:
    if caps.c_1d <= 0.0:
        return 0.0
    return max((caps.c_1d - alpha1 * (caps.c_1d + rx)) / (2.0 * caps.c_1d), 0.0)


# -- rate polygon -------------------------------------------------------------


def _rate_halfspaces(e: EntropySet, ordered: bool):
    """Half-spaces ``n . v >= b`` describing the admissible (rx, ry)."""
    hs = [
        (1.0, 0.0, e.hx_given_y),
        (0.0, 1.0, e.hy_given_x),
        (1.0, 1.0, e.hxy),
        (-1.0, 0.0, -RATE_CAP),
        (0.0, -1.0, -RATE_CAP),
    ]
    if ordered:
        hs.append((-1.0, 1.0, 0.0))
    return hs


def _inside(x, y, halfspaces, tol=1e-12) -> bool:
    return all(n1 * x + n2 * y >= b - tol for n1, n2, b in halfspaces)


def project_rates(v, e: EntropySet, ordered: bool = True) -> np.ndarray:
    """Euclidean projection of (rx, ry) onto the admissible rate polygon.

    In 2-D the projection lies either on one constraint line or at a vertex, so
    the candidates are enumerated and the nearest feasible one is returned.
    """
    x, y = float(v[0]), float(v[1])
    hs = _rate_halfspaces(e, ordered)
    if _inside(x, y, hs):
        return np.array([x, y])
    best, best_d = None, np.inf
    for n1, n2, b in hs:
        t = (b - n1 * x - n2 * y) / (n1 * n1 + n2 * n2)
        px, py = x + t * n1, y + t * n2
        d = (px - x) ** 2 + (py - y) ** 2
        if d < best_d and _inside(px, py, hs, 1e-10):
            best, best_d = (px, py), d
    for (a1, a2, b1), (c1, c2, b2) in itertools.combinations(hs, 2):
        det = a1 * c2 - a2 * c1
        if abs(det) < 1e-14:
            continue
        px = (b1 * c2 - a2 * b2) / det
        py = (a1 * b2 - b1 * c1) / det
        d = (px - x) ** 2 + (py - y) ** 2
        if d < best_d and _inside(px, py, hs, 1e-10):
            best, best_d = (px, py), d
    return np.array(best)


def project_feasible(point, e: EntropySet, caps: NetworkCapacities):
    """Project (alpha1, rx, ry) onto the PCF constraint set.

    Rates are projected onto their polygon first; alpha1 is then clamped to the
    interval allowed at the projected rates.
    """
    a, rx, ry = (float(x) for x in point)
    rx, ry = project_rates((rx, ry), e, ordered=True)
    a = min(max(a, 0.0), alpha1_bound(rx, ry, caps))
    return a, float(rx), float(ry)


# -- projected gradient ascent ---------------------------------------------------


@dataclass(frozen=True)
class PgdOptions:
    step: float = 0.05
    max_iter: int = 5000
    tol: float = 1e-9
    min_step: float = 1e-14


def _pgd(value_grad, project, start, opts: PgdOptions):
    v = project(np.asarray(start, dtype=float))
    f, g = value_grad(v)
    step = opts.step
    for _ in range(opts.max_iter):
        t = step
        while t >= opts.min_step:
            cand = project(v + t * g)
            fc, gc = value_grad(cand)
            if fc > f + 1e-15:
                break
            t *= 0.5
        else:
            break
        moved = float(np.linalg.norm(cand - v))
        v, f, g = cand, fc, gc
        if moved < opts.tol:
            break
    return v, f


def _pcf_value_grad(caps: NetworkCapacities, e: EntropySet):
    c1d, c2d, C1, I = caps.c_1d, caps.c_2d, caps.c_af1, e.i_z_xy

    def vg(v):
        rx, ry = v
        margin = I - (c1d + rx) * C1 / (2.0 * c1d)
        if margin <= 0.0:
            # AF-only: alpha1 = 0, value does not depend on the rates
            return 0.5 * C1, np.zeros(2)
        u2 = c2d / (ry + c2d)
        u1 = c1d / (c1d + rx)
        a = min(u1, u2)
        val = 0.5 * C1 + a * margin
        d_margin = np.array([-C1 / (2.0 * c1d), 0.0])
        if u2 <= u1:
            da = np.array([0.0, -c2d / (ry + c2d) ** 2])
        else:
            da = np.array([-c1d / (c1d + rx) ** 2, 0.0])
        return val, a * d_margin + margin * da

    return vg


def _pcf_single(caps: NetworkCapacities, e: EntropySet, opts: PgdOptions):
    """Best (alpha1, rx, ry, rate) with Relay-1 as the partial relay."""
    if caps.c_1d <= 0.0:
        return 0.0, e.hx_given_y, e.hy, 0.0
    if caps.c_2d <= 0.0:
        return 0.0, e.hx_given_y, e.hy, 0.5 * caps.c_af1
    vg = _pcf_value_grad(caps, e)

    def proj(v):
        return project_rates(v, e, ordered=True)

    corner = (e.hx_given_y, e.hy)
    diag = (e.hxy / 2.0, e.hxy / 2.0)
    mid = (0.5 * (corner[0] + diag[0]), 0.5 * (corner[1] + diag[1]))
    best = None
    for start in (corner, mid, diag):
        v, f = _pgd(vg, proj, start, opts)
        if best is None or f > best[1] + 1e-15:
            best = (v, f)
    rx, ry = (max(float(x), 0.0) for x in best[0])
    margin = e.i_z_xy - (caps.c_1d + rx) * caps.c_af1 / (2.0 * caps.c_1d)
    a = alpha1_bound(rx, ry, caps) if margin > 0.0 else 0.0
    return float(a), rx, ry, float(pcf_objective(a, rx, ry, caps, e))


def _as_entropies(model) -> EntropySet:
    if isinstance(model, EntropySet):
        return model
    return entropies(model)


def optimize_pcf(caps: NetworkCapacities, model, opts: PgdOptions | None = None) -> PcfPlan:
    """Maximize the PCF rate for both role assignments and keep the better one.

    ``model`` is a :class:`CorrelationModel` (or its :class:`EntropySet`) with
    ``pe1`` belonging to Relay-1.
    """
    opts = opts or PgdOptions()
    e = _as_entropies(model)
    plans = []
    for swapped in (False, True):
        c = caps.swapped() if swapped else caps
        ee = e.swapped() if swapped else e
        a, rx, ry, rate = _pcf_single(c, ee, opts)
        plans.append(PcfPlan(a, float(alpha2_from(a, rx, c)), rx, ry, swapped, max(rate, 0.0)))
    return plans[1] if plans[1].rate > plans[0].rate + 1e-12 else plans[0]


def plan_caps(plan: PcfPlan, caps: NetworkCapacities) -> NetworkCapacities:
    """Capacities as seen from the plan's role assignment."""
    return caps.swapped() if plan.swapped else caps


def check_plan(plan: PcfPlan, caps: NetworkCapacities, e: EntropySet, tol: float = 1e-8) -> list[str]:
    """Return the list of violated PCF constraints (empty when feasible)."""
    c = plan_caps(plan, caps)
    ee = e.swapped() if plan.swapped else e
    a1, a2, rx, ry = plan.alpha1, plan.alpha2, plan.rx, plan.ry
    bad = []
    if a1 < -tol or a2 < -tol or a1 + 2 * a2 > 1 + tol:
        bad.append("timeline")
    if a1 * rx > (1 - a1 - 2 * a2) * c.c_1d + tol:
        bad.append("relay-1 description budget")
    if a1 * ry > (1 - a1) * c.c_2d + tol:
        bad.append("relay-2 description budget")
    if c.c_2d > 0 and a1 > c.c_2d / (ry + c.c_2d) + tol:
        bad.append("alpha1 bound")
    if c.c_1d > 0 and a2 > (c.c_1d - a1 * (c.c_1d + rx)) / (2 * c.c_1d) + tol:
        bad.append("alpha2 bound")
    if a1 > 0 and not (rx >= ee.hx_given_y - tol and ry >= ee.hy_given_x - tol and rx + ry >= ee.hxy - tol):
        bad.append("Slepian-Wolf region")
    if a1 > 0 and rx > ry + tol:
        bad.append("description ordering")
    return bad


# -- baselines ---------------------------------------------------------------------


def _cf_value_grad(caps: NetworkCapacities, e: EntropySet):
    c1d, c2d, I = caps.c_1d, caps.c_2d, e.i_z_xy

    def vg(v):
        rx, ry = v
        u1 = c1d / (rx + c1d)
        u2 = c2d / (ry + c2d)
        if u1 <= u2:
            return I * u1, np.array([-I * c1d / (rx + c1d) ** 2, 0.0])
        return I * u2, np.array([0.0, -I * c2d / (ry + c2d) ** 2])

    return vg


def pure_cf_plan(caps: NetworkCapacities, model, opts: PgdOptions | None = None) -> PcfPlan:
    """Both relays listen for alpha1 and then forward Slepian-Wolf descriptions."""
    opts = opts or PgdOptions()
    e = _as_entropies(model)
    idle = PcfPlan(0.0, 0.0, e.hx, e.hy, False, 0.0)
    if caps.c_1d <= 0.0 and caps.c_2d <= 0.0 or e.i_z_xy <= 0.0:
        return idle
    if caps.c_1d <= 0.0 or caps.c_2d <= 0.0:
        # a single relay must carry H(X) or H(Y) alone
        if caps.c_1d <= 0.0:
            if e.hx_given_y > 0.0:
                return idle
            a = caps.c_2d / (e.hy + caps.c_2d)
            return PcfPlan(a, 0.0, 0.0, e.hy, False, e.i_z_xy * a)
        if e.hy_given_x > 0.0:
            return idle
        a = caps.c_1d / (e.hx + caps.c_1d)
        return PcfPlan(a, 0.0, e.hx, 0.0, False, e.i_z_xy * a)
    vg = _cf_value_grad(caps, e)

    def proj(v):
        return project_rates(v, e, ordered=False)

    best = None
    for start in [(e.hx_given_y, e.hy), (e.hx, e.hy_given_x), (e.hxy / 2, e.hxy / 2)]:
        v, f = _pgd(vg, proj, start, opts)
        if best is None or f > best[1] + 1e-15:
            best = (v, f)
    rx, ry = (max(float(x), 0.0) for x in best[0])
    a = min(caps.c_1d / (rx + caps.c_1d), caps.c_2d / (ry + caps.c_2d))
    return PcfPlan(float(a), 0.0, rx, ry, False, float(e.i_z_xy * a))


def pure_cf_rate(caps: NetworkCapacities, model, opts: PgdOptions | None = None) -> float:
    return pure_cf_plan(caps, model, opts).rate


def df_single_relay(c_s: float, c_d: float) -> float:
    """Half-duplex DF through one relay with doubled relay->destination bandwidth."""
    if c_s <= 0.0 or c_d <= 0.0:
        return 0.0
    return 2.0 * c_s * c_d / (c_s + 2.0 * c_d)


def best_relay_df_rate(caps: NetworkCapacities) -> float:
    return max(df_single_relay(caps.c_s1, caps.c_1d), df_single_relay(caps.c_s2, caps.c_2d))


def af_rate(caps: NetworkCapacities) -> float:
    c_af2 = caps.c_af1 if caps.c_af2 is None else caps.c_af2
    return max(caps.c_af1, c_af2) / 2.0


def cutset_rate(caps: NetworkCapacities) -> float:
    """Cut-set upper bound of the half-duplex diamond network.

    Maximizes over time-sharing of the four listen/transmit relay states the
    minimum over the four cuts.
    """
    c_s12 = caps.c_s12 if caps.c_s12 is not None else min(1.0, caps.c_s1 + caps.c_s2)
    cs = {frozenset(): 0.0, frozenset({1}): caps.c_s1, frozenset({2}): caps.c_s2, frozenset({1, 2}): c_s12}
    cd = {1: caps.c_1d, 2: caps.c_2d}
    states = list(itertools.product((True, False), repeat=2))  # listening flags
    cuts = [frozenset(s) for s in ((), (1,), (2,), (1, 2))]
    # variables: lambda_0..3, R ; maximize R
    a_ub, b_ub = [], []
    for omega in cuts:
        row = []
        for listen in states:
            listening = {i for i, flag in zip((1, 2), listen) if flag}
            val = cs[frozenset(listening - omega)]
            val += sum(cd[i] for i in omega if i not in listening)
            row.append(-val)
        a_ub.append(row + [1.0])
        b_ub.append(0.0)
    res = linprog(
        c=[0, 0, 0, 0, -1.0],
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=[[1, 1, 1, 1, 0]],
        b_eq=[1.0],
        bounds=[(0, None)] * 4 + [(0, None)],
        method="highs",
    )
    if not res.success:  # pragma: no cover - LP is always feasible
        raise RuntimeError(res.message)
    return float(res.x[-1])


def protocol_rates(caps: NetworkCapacities, model: CorrelationModel) -> dict[str, float]:
    """Theoretical rate of every protocol for one channel configuration."""
    return {
        "PCF": optimize_pcf(caps, model).rate,
        "CF": pure_cf_rate(caps, model),
        "DF": best_relay_df_rate(caps),
        "AF": af_rate(caps),
        "cutset": cutset_rate(caps),
    }


def network(ch_s1, ch_s2, ch_1d, ch_2d) -> tuple[NetworkCapacities, CorrelationModel]:
    return NetworkCapacities.from_channels(ch_s1, ch_s2, ch_1d, ch_2d), correlation_model(ch_s1, ch_s2)


def symmetric_network(ch: ChannelModel):
    return network(ch, ch, ch, ch)


def relay_pair_network(ch_relay1: ChannelModel, ch_relay2: ChannelModel):
    """Both links of each relay share one channel model."""
    return network(ch_relay1, ch_relay2, ch_relay1, ch_relay2)

