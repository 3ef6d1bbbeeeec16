"""Entropies of the (Z, X, Y) correlation and the Slepian-Wolf region.

Z is a uniform source bit; X and Y are the two relays' quantized copies of it,
conditionally independent given Z with flip probabilities pe1 and pe2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from pcf_relay.channels import ChannelModel, hard_decision_crossover


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def equivalent_crossover(pe1: float, pe2: float) -> float:
    """P(x != y): the crossover of the virtual BSC linking the two relays."""
    return pe1 * (1.0 - pe2) + pe2 * (1.0 - pe1)


@dataclass(frozen=True)
class CorrelationModel:
    pe1: float
    pe2: float
    joint_pmf: np.ndarray  # indexed [z, x, y]

    @classmethod
    def from_crossovers(cls, pe1: float, pe2: float) -> "CorrelationModel":
        for p in (pe1, pe2):
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"crossover must lie in [0, 0.5], got {p}")
        pmf = np.zeros((2, 2, 2))
        for z, x, y in itertools.product((0, 1), repeat=3):
            px = pe1 if x != z else 1.0 - pe1
            py = pe2 if y != z else 1.0 - pe2
            pmf[z, x, y] = 0.5 * px * py
        pmf.setflags(write=False)
        return cls(float(pe1), float(pe2), pmf)

    @property
    def p_eq(self) -> float:
        return equivalent_crossover(self.pe1, self.pe2)

    def swapped(self) -> "CorrelationModel":
        return CorrelationModel.from_crossovers(self.pe2, self.pe1)


def correlation_model(ch_s1: ChannelModel, ch_s2: ChannelModel) -> CorrelationModel:
    return CorrelationModel.from_crossovers(
        hard_decision_crossover(ch_s1), hard_decision_crossover(ch_s2)
    )


@dataclass(frozen=True)
class EntropySet:
    """Entropies in bits per symbol."""

    hx: float
    hy: float
    hx_given_y: float
    hy_given_x: float
    hxy: float
    i_z_xy: float

    def swapped(self) -> "EntropySet":
        return EntropySet(self.hy, self.hx, self.hy_given_x, self.hx_given_y, self.hxy, self.i_z_xy)


def _H(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def entropies(model: CorrelationModel) -> EntropySet:
    pmf = model.joint_pmf
    p_xy = pmf.sum(axis=0)
    hx = _H(p_xy.sum(axis=1))
    hy = _H(p_xy.sum(axis=0))
    hxy = _H(p_xy)
    hz = _H(pmf.sum(axis=(1, 2)))
    hzxy = _H(pmf)
    i = hz + hxy - hzxy
    return EntropySet(
        hx=hx,
        hy=hy,
        hx_given_y=max(hxy - hy, 0.0),
        hy_given_x=max(hxy - hx, 0.0),
        hxy=hxy,
        i_z_xy=min(max(i, 0.0), 1.0),
    )


def sw_admissible(rx: float, ry: float, e: EntropySet, tol: float = 0.0) -> bool:
    """Whether (rx, ry) lies in the Slepian-Wolf region of (X, Y)."""
    return bool(
        rx >= e.hx_given_y - tol and ry >= e.hy_given_x - tol and rx + ry >= e.hxy - tol
    )
