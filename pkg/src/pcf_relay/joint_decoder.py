"""Joint decoding of two correlated LT descriptions.

Two BP decoders, one per relay description, exchange extrinsic LLRs on the
shared source positions. A belief about ``x_i`` becomes a prior on ``y_i``
through the virtual BSC linking the two relays' quantized bits.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import log_expit

from pcf_relay.channels import LLR_MAX, Observation
from pcf_relay.rateless.lt import BpDecoder, LtGraph, lt_tanner


class SideStatus(str, enum.Enum):
    SUCCESS = "Success"
    FAIL = "Fail"


@dataclass(frozen=True)
class SideInfoModel:
    pe1: float
    pe2: float

    def __post_init__(self):
        for p in (self.pe1, self.pe2):
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"crossover must lie in [0, 0.5], got {p}")

    @property
    def agreement(self) -> float:
        return self.pe1 * self.pe2 + (1.0 - self.pe1) * (1.0 - self.pe2)

    @property
    def disagreement(self) -> float:
        return (1.0 - self.pe1) * self.pe2 + (1.0 - self.pe2) * self.pe1

    @property
    def max_prior(self) -> float:
        """Largest prior magnitude the side channel can produce."""
        d = self.disagreement
        if d <= 0.0:
            return LLR_MAX
        return float(min(np.log(self.agreement / d), LLR_MAX))


def side_info_probabilities(r, model: SideInfoModel):
    """``(P(y=1 | r), P(y=0 | r))`` where ``r = P(x=1)/P(x=0)`` from the other decoder.

    ``r`` may be ``inf`` (x certainly 1).
    """
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(np.isinf(r), 1.0, r / (1.0 + r))
    a, d = model.agreement, model.disagreement
    p1 = a * q + d * (1.0 - q)
    p0 = d * q + a * (1.0 - q)
    return p1, p0


def side_info_prior(extrinsic_llr, model: SideInfoModel) -> np.ndarray:
    """Prior LLR on the other description's bits, ``log P(y=0)/P(y=1)``.

    The extrinsic LLR ``L = log P(x=0)/P(x=1)`` maps to ``r = exp(-L)``.
    """
    L = np.clip(np.asarray(extrinsic_llr, dtype=float), -LLR_MAX, LLR_MAX)
    # log-domain form of P(y=0)/P(y=1); log q and log(1-q) are log_expit(-L), log_expit(L)
    lq, lnq = log_expit(-L), log_expit(L)
    with np.errstate(divide="ignore"):
        la, ld = np.log(model.agreement), np.log(model.disagreement)
    iota = np.logaddexp(ld + lq, la + lnq) - np.logaddexp(la + lq, ld + lnq)
    return np.clip(np.nan_to_num(iota, nan=0.0, posinf=LLR_MAX, neginf=-LLR_MAX), -LLR_MAX, LLR_MAX)


@dataclass
class JointDecodeResult:
    x_hat: np.ndarray
    y_hat: np.ndarray
    status_x: SideStatus
    status_y: SideStatus
    joint_iterations: int
    # LLRs from each description's own symbols only (side prior removed)
    extrinsic_x: np.ndarray = field(repr=False)
    extrinsic_y: np.ndarray = field(repr=False)
    posterior_x: np.ndarray = field(repr=False)
    posterior_y: np.ndarray = field(repr=False)

    @property
    def success(self) -> bool:
        return self.status_x is SideStatus.SUCCESS and self.status_y is SideStatus.SUCCESS


def _status(ok: bool) -> SideStatus:
    return SideStatus.SUCCESS if ok else SideStatus.FAIL


def joint_decode(obs_x: Observation, graph_x: LtGraph, obs_y: Observation, graph_y: LtGraph,
                 model: SideInfoModel, max_joint_iter: int = 40, inner_iter: int = 2,
                 schedule: str = "serial", success_llr: float = 10.0, trace=None) -> JointDecodeResult:
    """Iterate decoder-1 -> side prior -> decoder-2 -> side prior -> decoder-1.

    ``schedule='parallel'`` lets both decoders use the previous round's
    extrinsics. ``trace`` (a path) receives one CSV row per joint iteration.
    """
    if graph_x.k != graph_y.k:
        raise ValueError(f"descriptions cover different blocks: {graph_x.k} vs {graph_y.k}")
    if schedule not in ("serial", "parallel"):
        raise ValueError(f"unknown schedule {schedule!r}")
    if max_joint_iter < 1 or inner_iter < 1:
        raise ValueError("iteration counts must be >= 1")
    k = graph_x.k
    dx = BpDecoder(lt_tanner(graph_x, obs_x), success_llr=success_llr)
    dy = BpDecoder(lt_tanner(graph_y, obs_y), success_llr=success_llr)
    ext_x = np.zeros(k)
    ext_y = np.zeros(k)
    prior_x = np.zeros(k)
    prior_y = np.zeros(k)
    rows = []
    it = 0
    for it in range(1, max_joint_iter + 1):
        prior_x = side_info_prior(ext_y, model)
        if schedule == "parallel":
            prior_y = side_info_prior(ext_x, model)
        dx.sweep(prior_x, inner_iter)
        ext_x = dx.extrinsic(prior_x)
        if schedule == "serial":
            prior_y = side_info_prior(ext_x, model)
        dy.sweep(prior_y, inner_iter)
        ext_y = dy.extrinsic(prior_y)
        ok_x, ok_y = dx.converged(), dy.converged()
        if trace is not None:
            rows.append((it, float(np.abs(ext_x).mean()), float(np.abs(ext_y).mean()),
                         dx.unsatisfied(), dy.unsatisfied()))
        if ok_x and ok_y:
            break
    if trace is not None:
        with open(Path(trace), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "mean_abs_ext_x", "mean_abs_ext_y", "unsat_x", "unsat_y"])
            w.writerows(rows)
    return JointDecodeResult(
        dx.hard(), dy.hard(), _status(dx.converged()), _status(dy.converged()), it,
        ext_x, ext_y, dx.total.copy(), dy.total.copy(),
    )
