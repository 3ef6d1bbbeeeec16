"""Raptor codes: (3,60) LDPC precode followed by an LT code, decoded jointly."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from pcf_relay.channels import LLR_MAX, Observation
from pcf_relay.rateless.degree import DegreeDistribution
from pcf_relay.rateless.ldpc import CHECK_DEGREE, VAR_DEGREE, LdpcCode, build_regular_ldpc
from pcf_relay.rateless.lt import DecodeResult, LtGraph, TannerGraph, decode_tanner, lt_tanner


def intermediate_length(k: int) -> int:
    """Smallest multiple of 20 whose LDPC code carries ``k`` info bits at rate 0.95."""
    n = -(-k * CHECK_DEGREE // (CHECK_DEGREE - VAR_DEGREE))
    return -(-n // 20) * 20


@lru_cache(maxsize=16)
def precode_for(k: int, seed: int = 0) -> LdpcCode:
    return build_regular_ldpc(intermediate_length(k), seed)


def raptor_encode(info, ldpc: LdpcCode, dist: DegreeDistribution, seed: int, n: int):
    """Return ``(coded, graph, intermediate)``.

    ``info`` may be shorter than the precode's info positions; the surplus
    positions are zero-padded and treated as known by the decoder.
    """
    u = np.asarray(info, dtype=np.int8)
    if len(u) > ldpc.n_info:
        raise ValueError(f"info longer than the {ldpc.n_info} precode info positions")
    full = np.zeros(ldpc.n_info, dtype=np.int8)
    full[: len(u)] = u
    intermediate = ldpc.encode(full)
    graph = LtGraph.generate(ldpc.n_variables, n, dist, seed)
    return graph.encode(intermediate), graph, intermediate


def raptor_tanner(obs: Observation, graph: LtGraph, ldpc: LdpcCode) -> tuple[TannerGraph, int]:
    lt = lt_tanner(graph, obs)
    m = ldpc.n_checks
    ptr = np.concatenate([lt.chk_ptr, lt.chk_ptr[-1] + ldpc.check_vars.shape[1] * np.arange(1, m + 1)])
    tg = TannerGraph(
        ldpc.n_variables,
        ptr.astype(np.int64),
        np.concatenate([lt.chk_var, ldpc.check_vars.ravel()]).astype(np.int64),
        np.concatenate([lt.chk_tanh, np.ones(m)]),
        np.concatenate([lt.chk_bit, np.zeros(m, dtype=np.int8)]),
        lt.hard,
    )
    return tg, lt.n_chk


def raptor_decode(observations: Observation, graph: LtGraph, ldpc: LdpcCode, max_iter: int = 200,
                  k: int | None = None, method: str = "auto", check_every: int = 1,
                  patience: int | None = 50) -> DecodeResult:
    """Joint BP over LT and LDPC checks sharing the intermediate bits.

    ``hard_bits`` holds the first ``k`` info bits (all info positions when
    ``k`` is None); posteriors and extrinsics cover the intermediate word.
    """
    k = ldpc.n_info if k is None else k
    tg, n_lt = raptor_tanner(observations, graph, ldpc)
    prior = np.zeros(ldpc.n_variables)
    prior[ldpc.info_positions[k:]] = LLR_MAX
    payload = ldpc.info_positions[:k]
    res = decode_tanner(tg, prior, max_iter, method, syndrome_from=n_lt, check_every=check_every, target=payload,
                       patience=patience)
    res.hard_bits = res.hard_bits[payload]
    return res
