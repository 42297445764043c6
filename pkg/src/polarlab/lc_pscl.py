"""Threshold-pruned partitioned list decoding.

Extends the PSCL walk with two independently switchable strategies:
reliability pruning, which drops extensions whose mean signed
correlation with the leaf LLRs falls below a per-leaf threshold, and
minimal-list selection, which keeps the shortest metric-sorted prefix of
survivors whose retention probability reaches a global threshold. Paths
are weighted by exp(-Q) scaled by the per-level valid-completion ratio;
all of that mass arithmetic stays in the natural-log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf

import numpy as np

from .codes import CodeSpec
from .decode_list import Counters, DecodeOutput, _GenieInfo, _subtree_plan, list_decode
from .ga import ThresholdTable


@dataclass(frozen=True)
class DiscardedMass:
    """Running log of the likelihood mass dropped so far (log-domain)."""

    log_d: float = -inf

    def absorb(self, log_mass: float) -> "DiscardedMass":
        if log_mass == -inf:
            return self
        return DiscardedMass(float(np.logaddexp(self.log_d, log_mass)))


@dataclass(frozen=True)
class LcConfig:
    thresholds: ThresholdTable
    list_cap: int
    enable_pruning: bool = True
    enable_selection: bool = True


def r_metric(leaf_llrs, b) -> float:
    """Mean signed correlation (1/l) sum (-1)^b_j alpha_j."""
    alpha = np.asarray(leaf_llrs, dtype=np.float64)
    word = np.asarray(b, dtype=np.float64)
    if alpha.shape != word.shape:
        raise ValueError("candidate word and LLR lengths differ")
    return float(((1.0 - 2.0 * word) * alpha).mean())


def log_phi_hat(q_level: float, log_kappa_level: float) -> float:
    """Approximate log-likelihood mass of all valid completions of a
    path: ln kappa^(r) - Q^(r)."""
    return log_kappa_level - q_level


def select_min_list(
    sorted_survivor_log_phi: np.ndarray,
    pruned_mass_log: float,
    d_prev: DiscardedMass,
    cfg: LcConfig,
) -> tuple[int, DiscardedMass]:
    """Keep the smallest Q-ascending prefix reaching the selection
    threshold, capped at the list size.

    ``sorted_survivor_log_phi`` holds log phi-hat per survivor in metric-
    ascending order (so log phi-hat descending). The denominator mass is
    that of every survivor plus everything discarded before or at this
    step, which does not depend on the kept subset. Returns the number
    kept from the front and the updated discarded mass.
    """
    log_phi = np.asarray(sorted_survivor_log_phi, dtype=np.float64)
    n = log_phi.size
    if n == 0:
        raise ValueError("selection requires at least one survivor")
    eta = cfg.thresholds.eta_selection
    k_keep = n
    if eta < 1.0:
        all_mass = float(np.logaddexp.reduce(log_phi))
        total = np.logaddexp(d_prev.log_d, np.logaddexp(pruned_mass_log, all_mass))
        log_eta = np.log(eta) if eta > 0 else -inf
        running = np.logaddexp.accumulate(log_phi)
        reached = np.flatnonzero(running - total >= log_eta)
        if reached.size:
            k_keep = int(reached[0]) + 1
    k_keep = min(k_keep, cfg.list_cap)
    dropped = log_phi[k_keep:]
    d_new = d_prev.absorb(pruned_mass_log)
    if dropped.size:
        d_new = d_new.absorb(float(np.logaddexp.reduce(dropped)))
    return k_keep, d_new


def lc_pscl_decode(
    llrs,
    spec: CodeSpec,
    tau: int,
    cfg: LcConfig,
    counters: Counters | None = None,
    genie: _GenieInfo | None = None,
) -> DecodeOutput:
    """PSCL with threshold pruning and minimal-list selection.

    Pruning applies at every leaf (forced candidates included); if it
    empties the list the decode stops with premature_termination. With
    both strategies disabled this is frame-identical to pscl_decode,
    counters included.
    """
    table = cfg.thresholds
    if table.n_block != spec.n_block or table.k_dim != spec.k_dim or table.tau != tau:
        raise ValueError("threshold table does not match the code/tau being decoded")
    plan = _subtree_plan(spec, tau)
    if table.m_count != len(plan.leaves):
        raise ValueError("threshold table leaf count mismatch")
    return list_decode(
        llrs, spec, plan, cfg.list_cap, counters, lc_cfg=cfg, genie=genie
    )
