"""Binary-input channel models: capacities, sampling, and hard-decision reduction.

SNR convention for BI-AWGN: BPSK (0 -> +1, 1 -> -1) with unit symbol energy and
real Gaussian noise of variance ``1/snr``. Under this convention the channel LLR
is ``2*snr*y``, the hard-decision crossover is ``Q(sqrt(snr))`` and received
power is ``1 + 1/snr``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import erfc

LLR_MAX = 30.0
_GH_NODES = 128


class ChannelKind(str, enum.Enum):
    BEC = "BEC"
    BSC = "BSC"
    BIAWGN = "BIAWGN"


@dataclass(frozen=True)
class ChannelModel:
    """A memoryless binary-input channel.

    ``param`` is the erasure probability for BEC, the crossover probability for
    BSC and the linear SNR for BI-AWGN.
    """

    kind: ChannelKind
    param: float

    def __post_init__(self):
        kind = ChannelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = float(self.param)
        # absorb float noise from sweeps such as 1 - 0.95 - 0.05
        hi = 0.5 if kind is ChannelKind.BSC else 1.0
        if -1e-12 < p < 0.0:
            p = 0.0
        elif kind is not ChannelKind.BIAWGN and hi < p < hi + 1e-12:
            p = hi
        object.__setattr__(self, "param", p)
        if not np.isfinite(p) and not (kind is ChannelKind.BIAWGN and p == np.inf):
            raise ValueError(f"channel parameter must be finite, got {p}")
        if kind is ChannelKind.BEC and not 0.0 <= p <= 1.0:
            raise ValueError(f"BEC erasure probability must lie in [0, 1], got {p}")
        if kind is ChannelKind.BSC and not 0.0 <= p <= 0.5:
            raise ValueError(f"BSC crossover must lie in [0, 0.5], got {p}")
        if kind is ChannelKind.BIAWGN and p < 0.0:
            raise ValueError(f"SNR must be non-negative, got {p}")

    @classmethod
    def bec(cls, eps: float) -> "ChannelModel":
        return cls(ChannelKind.BEC, eps)

    @classmethod
    def bsc(cls, p: float) -> "ChannelModel":
        return cls(ChannelKind.BSC, p)

    @classmethod
    def biawgn(cls, snr: float) -> "ChannelModel":
        return cls(ChannelKind.BIAWGN, snr)

    @classmethod
    def biawgn_db(cls, snr_db: float) -> "ChannelModel":
        return cls(ChannelKind.BIAWGN, db_to_linear(snr_db))

    @property
    def capacity(self) -> float:
        return capacity(self)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "param": self.param}


@dataclass
class Observation:
    """Per-symbol channel output as LLRs ``log P(0|obs)/P(1|obs)``.

    Erasures are flagged separately (their LLR is 0). ``received`` holds the real
    channel outputs for BI-AWGN so a relay can amplify them.
    """

    llr: np.ndarray
    erased: np.ndarray
    received: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return len(self.llr)

    def __getitem__(self, sl: slice) -> "Observation":
        rec = None if self.received is None else self.received[sl]
        return Observation(self.llr[sl], self.erased[sl], rec)

    @property
    def is_hard(self) -> bool:
        """True when every symbol is either erased or saturated (certain)."""
        return bool(np.all(self.erased | (np.abs(self.llr) >= LLR_MAX)))

    @classmethod
    def concat(cls, parts: list["Observation"]) -> "Observation":
        if not parts:
            return cls(np.zeros(0), np.zeros(0, dtype=bool))
        rec = None
        if all(p.received is not None for p in parts):
            rec = np.concatenate([p.received for p in parts])
        return cls(
            np.concatenate([p.llr for p in parts]),
            np.concatenate([p.erased for p in parts]),
            rec,
        )


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def q_function(x):
    """Standard Gaussian tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def h2(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


@lru_cache(maxsize=None)
def _gh():
    return hermgauss(_GH_NODES)


def biawgn_capacity(snr: float) -> float:
    """BPSK-input AWGN capacity in bits/use by Gauss-Hermite quadrature."""
    if snr <= 0.0:
        return 0.0
    if snr == np.inf:
        return 1.0
    sigma = np.sqrt(1.0 / snr)
    x, w = _gh()
    y = 1.0 + np.sqrt(2.0) * sigma * x
    # E[log2(1 + exp(-2Y/sigma^2))] with Y ~ N(1, sigma^2)
    loss = np.logaddexp(0.0, -2.0 * y / sigma**2) / np.log(2.0)
    c = 1.0 - float(np.dot(w, loss)) / np.sqrt(np.pi)
    return min(max(c, 0.0), 1.0)


def capacity(model: ChannelModel) -> float:
    if model.kind is ChannelKind.BEC:
        return 1.0 - model.param
    if model.kind is ChannelKind.BSC:
        return 1.0 - h2(model.param)
    return biawgn_capacity(model.param)


def bsc_from_biawgn(snr: float) -> float:
    """Crossover probability after a sign quantizer on a BI-AWGN output."""
    if snr < 0:
        raise ValueError("snr must be non-negative")
    return float(q_function(np.sqrt(snr)))


def hard_decision_crossover(model: ChannelModel) -> float:
    """Bit error rate of the relay's binary quantizer on this channel.

    Erasures are filled with a fair coin, so a BEC behaves as BSC(eps/2).
    """
    if model.kind is ChannelKind.BSC:
        return model.param
    if model.kind is ChannelKind.BEC:
        return model.param / 2.0
    return bsc_from_biawgn(model.param)


def _bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int8)
    if b.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    return b


def transmit(bits, model: ChannelModel, rng: np.random.Generator) -> Observation:
    """Send ``bits`` through ``model`` and return the receiver's observations."""
    b = _bits(bits)
    n = len(b)
    sign = 1.0 - 2.0 * b  # BPSK: 0 -> +1, 1 -> -1
    if model.kind is ChannelKind.BEC:
        erased = rng.random(n) < model.param
        llr = np.where(erased, 0.0, LLR_MAX * sign)
        return Observation(llr, erased)
    if model.kind is ChannelKind.BSC:
        flips = rng.random(n) < model.param
        p = model.param
        mag = LLR_MAX if p <= 0.0 else min(np.log((1.0 - p) / p), LLR_MAX)
        llr = mag * np.where(flips, -sign, sign)
        return Observation(llr, np.zeros(n, dtype=bool))
    snr = model.param
    if snr == 0.0:
        y = rng.standard_normal(n) * 1e6
        return Observation(np.zeros(n), np.zeros(n, dtype=bool), y)
    y = sign + rng.standard_normal(n) * np.sqrt(1.0 / snr) if snr != np.inf else sign.copy()
    llr = np.clip(2.0 * snr * y, -LLR_MAX, LLR_MAX) if snr != np.inf else LLR_MAX * sign
    return Observation(llr, np.zeros(n, dtype=bool), y)
