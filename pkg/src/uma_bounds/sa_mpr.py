"""Slotted ALOHA with multi-packet reception, as a wrapper around the
main random-coding bound.

A frame of n channel uses is split into L slots; each active user picks
one slot uniformly at random.  Decoding is slot-by-slot, so the main
bound applies per slot with codeword length n/L, power P*L, and the
thinned activity distribution.  Optionally, users convey floor(log2 L)
payload bits through the slot choice (assumed perfectly decoded), which
shrinks the per-slot codebook.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as _st

from . import activity, bound_core

__all__ = [
    "SlottedConfig",
    "per_slot_pmf",
    "eval_sa_mpr",
    "optimize_slots",
]


@dataclass(frozen=True)
class SlottedConfig:
    slots: int
    slot_index_coding: bool = False

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("need at least one slot")


def per_slot_pmf(model, slots):
    """Distribution of the number of users in one slot (binomial thinning).

    Poisson stays Poisson with mean / L (exact); other models become an
    explicit binomial mixture.
    """
    if slots == 1:
        return model
    if model.kind == "poisson":
        return activity.poisson(model.mean / slots)
    k_max = activity.support_upper(model)
    mix = np.zeros(k_max + 1)
    for ka in range(k_max + 1):
        p_ka = activity.pmf(model, ka)
        if p_ka == 0.0:
            continue
        mix[: ka + 1] += p_ka * _st.binom.pmf(np.arange(ka + 1), ka, 1.0 / slots)
    pairs = [(k, float(p)) for k, p in enumerate(mix) if p > 0]
    return activity.explicit(pairs)


def slot_parameters(k_bits, n, p, slotted):
    """(log_M, n, P) seen by the per-slot decoder; remainder symbols are
    discarded when L does not divide n."""
    L = slotted.slots
    n_slot = n // L
    if n_slot < 1:
        raise ValueError("more slots than channel uses")
    if slotted.slot_index_coding:
        index_bits = int(math.floor(math.log2(L))) if L > 1 else 0
        if k_bits <= index_bits:
            raise ValueError("payload does not exceed the slot-index bits")
        log_M = (k_bits - index_bits) * math.log(2)
    else:
        log_M = k_bits * math.log(2)
    return log_M, n_slot, p * L


def eval_sa_mpr(model, k_bits, p, p_prime_ratio, settings, slotted, *,
                pmf_threshold=1e-9, breakdown=False):
    """Evaluate the main bound slot-by-slot.  settings.n and settings.log_M
    describe the full frame; they are replaced by per-slot values here."""
    log_M, n_slot, p_slot = slot_parameters(k_bits, settings.n, p, slotted)
    slot_model = per_slot_pmf(model, slotted.slots)
    window = activity.truncation_bounds_pmf(slot_model, pmf_threshold)
    s = replace(settings, n=n_slot, log_M=log_M)
    return bound_core.eval_theorem1(
        slot_model, window, p_slot, p_prime_ratio * p_slot, s, breakdown=breakdown
    )


def optimize_slots(model, k_bits, p_prime_ratio, settings, targets, L_candidates,
                   *, bracket=(-2.0, 20.0), slot_index_coding=True):
    """Pick the slot count minimizing the required Eb/N0 (ties -> smaller L)."""
    from . import search

    if not L_candidates:
        raise ValueError("need at least one slot-count candidate")
    best = None
    for L in sorted(L_candidates):
        cfg = SlottedConfig(slots=L, slot_index_coding=slot_index_coding)
        try:
            db = search.required_ebn0(
                "sa_mpr", model, k_bits, targets, settings,
                p_prime_ratios=(p_prime_ratio,), bracket=bracket, slotted=cfg,
            )
        except search.TargetBelowFloor:
            continue
        if best is None or db < best[1]:
            best = (L, db)
    if best is None:
        raise search.TargetBelowFloor("no slot count meets the targets")
    return best
