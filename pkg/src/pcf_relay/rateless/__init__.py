"""Rateless codes: LT, (3,60) LDPC precode and Raptor."""

from pcf_relay.rateless.degree import DegreeDistribution, ideal_soliton, robust_soliton
from pcf_relay.rateless.lt import DecodeResult, DecodeStatus, LtGraph, lt_decode, lt_encode

__all__ = [
    "DegreeDistribution",
    "ideal_soliton",
    "robust_soliton",
    "DecodeResult",
    "DecodeStatus",
    "LtGraph",
    "lt_decode",
    "lt_encode",
]
