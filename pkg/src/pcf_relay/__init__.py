"""Partial compress-and-forward (PCF) over a two-relay diamond network.

Theory (achievable rates via projected gradient ascent) and link-level
Monte-Carlo validation with LT/Raptor codes and a joint side-information
BP decoder.
"""

from pcf_relay.channels import LLR_MAX, ChannelKind, ChannelModel, Observation, capacity, transmit
from pcf_relay.info import CorrelationModel, EntropySet, correlation_model, entropies
from pcf_relay.optimizer import NetworkCapacities, PcfPlan, optimize_pcf

__all__ = [
    "LLR_MAX",
    "ChannelKind",
    "ChannelModel",
    "Observation",
    "capacity",
    "transmit",
    "CorrelationModel",
    "EntropySet",
    "correlation_model",
    "entropies",
    "NetworkCapacities",
    "PcfPlan",
    "optimize_pcf",
]
