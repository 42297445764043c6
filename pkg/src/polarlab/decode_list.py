"""Path-managed list decoders: SCL at bit granularity, PSCL at sub-leaf
granularity.

One engine serves both: SCL walks the degenerate one-bit-per-leaf
partition, PSCL the sub-polar tree. Paths are stored batched (one array
axis per path) so per-leaf work is a handful of vector operations; a
fork copies the node memory of the parent path, which keeps the engine
output-equivalent to one decoder instance per path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import inf

import numpy as np

from .codes import CodeSpec, check_crc, pac_convolve
from .decode_sc import FlopCounter, f_vec, g_vec
from .encode import polar_transform
from .polar_tree import (
    SubPolarTree,
    active_patterns,
    bit_level_tree,
    build_sub_polar_tree,
    log_kappa_table,
)


@dataclass
class SortCounter:
    total_sorted_paths: int = 0
    per_step: dict[int, list[int]] = field(default_factory=dict)

    def record(self, level: int, n_paths: int) -> None:
        self.total_sorted_paths += n_paths
        cell = self.per_step.setdefault(level, [0, 0])
        cell[0] += n_paths
        cell[1] += 1

    def merge(self, other: "SortCounter") -> None:
        self.total_sorted_paths += other.total_sorted_paths
        for level, (paths, calls) in other.per_step.items():
            cell = self.per_step.setdefault(level, [0, 0])
            cell[0] += paths
            cell[1] += calls


@dataclass
class Counters:
    flops: FlopCounter = field(default_factory=FlopCounter)
    sorts: SortCounter = field(default_factory=SortCounter)


@dataclass
class DecodeOutput:
    status: str  # ok | crc_fail_best_effort | premature_termination
    v_hat: np.ndarray | None
    payload_hat: np.ndarray | None
    counters: Counters
    snapshot: list[tuple[float, np.ndarray]] = field(default_factory=list)
    gammas: list[float] | None = None
    correct_trace: list[bool] | None = None


def extend_metric(q_prev: float, leaf_llrs, b) -> float:
    """Path metric after appending candidate word ``b``: adds the
    softplus penalty ln(1+e^(-(1-2b)*alpha)) per position."""
    alpha = np.asarray(leaf_llrs, dtype=np.float64)
    word = np.asarray(b, dtype=np.float64)
    if alpha.shape != word.shape:
        raise ValueError("candidate word and LLR lengths differ")
    return float(q_prev + np.logaddexp(0.0, -(1.0 - 2.0 * word) * alpha).sum())


def finalize(paths, spec: CodeSpec):
    """Pick the decoder output from live complete paths.

    ``paths`` is a sequence of (q, v_hat, u_hat-or-None) in tie-break
    order; selection is min-Q, with CRC filtering for crc_polar codes.
    """
    if not len(paths):
        raise ValueError("finalize requires a nonempty path list")
    order = sorted(range(len(paths)), key=lambda i: (paths[i][0], i))
    active = spec.active_idx0()
    d = spec.crc_degree

    def payload_of(entry):
        _, v_hat, u_hat = entry
        if spec.kind == "pac":
            return u_hat[active]
        occupied = v_hat[active]
        return occupied[: len(occupied) - d] if spec.kind == "crc_polar" else occupied

    if spec.kind == "crc_polar":
        for i in order:
            v_hat = paths[i][1]
            if check_crc(v_hat[active], spec.crc_poly):
                return v_hat, payload_of(paths[i]), "ok"
        best = paths[order[0]]
        return best[1], payload_of(best), "crc_fail_best_effort"

    best = paths[order[0]]
    return best[1], payload_of(best), "ok"


# ---------------------------------------------------------------------------
# decoding plan: per-leaf schedules precomputed once per (spec, tau)


@dataclass
class _LeafPlan:
    level: int
    start: int
    length: int
    n_cand: int
    chain: list[tuple[int, int, int, bool]]  # (parent_level, parent_start, half, is_g)
    combines: list[tuple[int, int, int]]  # (child_level, parent_start, half)
    patterns: np.ndarray  # (C, l) u-domain span patterns
    words: np.ndarray  # (C, l) node sequences, zero conv state for PAC
    signs: np.ndarray  # 1 - 2*words, float64
    state_impact: np.ndarray | None = None  # (m, l) PAC register influence


@dataclass
class _DecodePlan:
    spec: CodeSpec
    tree: SubPolarTree
    n_stages: int
    leaves: list[_LeafPlan]
    log_kappa: np.ndarray  # index r = 0..M
    reg_len: int = 0


def _directions(level: int, pos: int) -> list[int]:
    return [(pos - 1) >> (level - 1 - j) & 1 for j in range(level)]


def _build_plan(spec: CodeSpec, tree: SubPolarTree) -> _DecodePlan:
    n = spec.n_stages
    is_pac = spec.kind == "pac"
    reg_len = len(spec.pac_impulse) - 1 if is_pac else 0
    leaf_plans: list[_LeafPlan] = []
    prev_dirs: list[int] = []

    for leaf in tree.leaves:
        s, t = leaf.node.level, leaf.node.pos
        dirs = _directions(s, t)
        common = 0
        while (
            common < len(prev_dirs)
            and common < len(dirs)
            and prev_dirs[common] == dirs[common]
        ):
            common += 1
        chain = []
        for j in range(common, s):
            parent_pos = ((t - 1) >> (s - j)) + 1
            half = 1 << (n - j - 1)
            parent_start = (parent_pos - 1) * (half * 2)
            chain.append((j, parent_start, half, bool(dirs[j])))
        combines = []
        cur_level, cur_pos = s, leaf.node.pos
        while cur_level > 0 and cur_pos % 2 == 0:
            half = 1 << (n - cur_level)
            parent_pos = cur_pos // 2
            parent_start = (parent_pos - 1) * (half * 2)
            combines.append((cur_level, parent_start, half))
            cur_level -= 1
            cur_pos = parent_pos

        patterns = active_patterns(leaf)
        if is_pac:
            zero_state = np.zeros(reg_len, dtype=np.int8)
            v0 = np.array(
                [pac_convolve(p, spec.pac_impulse, zero_state)[0] for p in patterns],
                dtype=np.int8,
            )
            words = polar_transform(v0)
            impact = np.zeros((reg_len, leaf.length), dtype=np.int8)
            g = np.asarray(spec.pac_impulse, dtype=np.int8)
            for j in range(reg_len):
                for i in range(leaf.length):
                    if i + j + 1 <= reg_len:
                        impact[j, i] = g[i + j + 1]
        else:
            words = polar_transform(patterns)
            impact = None
        leaf_plans.append(
            _LeafPlan(
                level=s,
                start=leaf.node.start0,
                length=leaf.length,
                n_cand=patterns.shape[0],
                chain=chain,
                combines=combines,
                patterns=patterns,
                words=words,
                signs=1.0 - 2.0 * words.astype(np.float64),
                state_impact=impact,
            )
        )
        prev_dirs = dirs

    return _DecodePlan(
        spec=spec,
        tree=tree,
        n_stages=n,
        leaves=leaf_plans,
        log_kappa=log_kappa_table(tree),
        reg_len=reg_len,
    )


@lru_cache(maxsize=64)
def _subtree_plan(spec: CodeSpec, tau: int) -> _DecodePlan:
    return _build_plan(spec, build_sub_polar_tree(spec, tau))


@lru_cache(maxsize=64)
def _bit_plan(spec: CodeSpec) -> _DecodePlan:
    return _build_plan(spec, bit_level_tree(spec))


# ---------------------------------------------------------------------------
# batched path bank


class _PathBank:
    """All live decode paths, one array row per path."""

    def __init__(self, llrs: np.ndarray, n_stages: int, n_block: int, reg_len: int):
        self.llr = np.zeros((1, n_stages + 1, n_block), dtype=np.float64)
        self.llr[0, 0, :] = llrs
        self.hbe = np.zeros((1, n_stages + 1, n_block), dtype=np.int8)
        self.q = np.zeros(1, dtype=np.float64)
        # pre-transform bit and register tracking exist only for PAC
        self.u = np.zeros((1, n_block), dtype=np.int8) if reg_len else None
        self.state = np.zeros((1, reg_len), dtype=np.int8) if reg_len else None
        self.correct = np.ones(1, dtype=bool)

    @property
    def size(self) -> int:
        return self.q.size

    def reindex(self, parents: np.ndarray, copy_rows: int) -> None:
        """Fork/retire paths. Node memory rows above ``copy_rows`` are
        dead for every future read and are left uninitialized."""
        k = parents.size
        new_llr = np.empty((k, self.llr.shape[1], self.llr.shape[2]), dtype=np.float64)
        new_llr[:, : copy_rows + 1] = self.llr[parents, : copy_rows + 1]
        new_hbe = np.empty((k, self.hbe.shape[1], self.hbe.shape[2]), dtype=np.int8)
        new_hbe[:, : copy_rows + 1] = self.hbe[parents, : copy_rows + 1]
        self.llr = new_llr
        self.hbe = new_hbe
        if self.u is not None:
            self.u = self.u[parents]
            self.state = self.state[parents]
        self.correct = self.correct[parents]


def _lse(values: np.ndarray) -> float:
    if values.size == 0:
        return -inf
    return float(np.logaddexp.reduce(values))


@dataclass
class _GenieInfo:
    true_words: list[np.ndarray]
    track_gamma: bool = False


def list_decode(
    llrs,
    spec: CodeSpec,
    plan: _DecodePlan,
    L: int,
    counters: Counters | None = None,
    lc_cfg=None,
    genie: _GenieInfo | None = None,
    trace_hook=None,
) -> DecodeOutput:
    """Common engine behind scl/pscl/lc_pscl decoding.

    ``lc_cfg`` (see lc_pscl.LcConfig) switches threshold pruning and
    minimal-list selection on; with both off the walk is plain (P)SCL.
    A sort is counted only when survivors exceed L, matching the
    conditional select rule.
    """
    if L < 1:
        raise ValueError("list size must be >= 1")
    ctrs = counters if counters is not None else Counters()
    flops, sorts = ctrs.flops, ctrs.sorts
    llrs = np.asarray(llrs, dtype=np.float64)
    bank = _PathBank(llrs, plan.n_stages, spec.n_block, plan.reg_len)

    pruning_on = lc_cfg is not None and lc_cfg.enable_pruning
    selection_on = (
        lc_cfg is not None
        and lc_cfg.enable_selection
        and lc_cfg.thresholds.eta_selection < 1.0
    )
    track_gamma = genie is not None and genie.track_gamma
    need_mass = selection_on or track_gamma
    is_pac = plan.reg_len > 0
    from .lc_pscl import DiscardedMass, select_min_list

    discarded = DiscardedMass()
    gammas: list[float] = []
    correct_trace: list[bool] = []

    for r, leaf in enumerate(plan.leaves):
        # bring this leaf's LLR sequence up to date for every path
        for plev, pstart, half, is_g in leaf.chain:
            a = bank.llr[:, plev, pstart : pstart + half]
            b = bank.llr[:, plev, pstart + half : pstart + 2 * half]
            if is_g:
                c = bank.hbe[:, plev + 1, pstart : pstart + half]
                bank.llr[:, plev + 1, pstart + half : pstart + 2 * half] = g_vec(
                    a, b, c, flops
                )
            else:
                bank.llr[:, plev + 1, pstart : pstart + half] = f_vec(a, b, flops)

        sl = slice(leaf.start, leaf.start + leaf.length)
        alpha = bank.llr[:, leaf.level, sl]
        P, C = bank.size, leaf.n_cand
        log_k = plan.log_kappa[r + 1]

        if is_pac:
            reg_corr = (bank.state @ leaf.state_impact) & 1  # (P, l)
            corr_words = polar_transform(reg_corr)
            tc_signs = 1.0 - 2.0 * corr_words.astype(np.float64)
            signs = leaf.signs[None, :, :] * tc_signs[:, None, :]  # (P, C, l)
            dq = np.logaddexp(0.0, -signs * alpha[:, None, :]).sum(axis=2)
        else:
            signs = leaf.signs  # (C, l)
            corr_words = None
            dq = np.logaddexp(0.0, -(alpha[:, None, :] * signs[None, :, :])).sum(axis=2)

        # pruning step: drop extensions whose mean signed correlation
        # falls below the leaf threshold (surv None = keep everything)
        surv = None
        pruned_mass = -inf
        if pruning_on:
            eta = lc_cfg.thresholds.eta_pruning[r]
            if eta > -inf:
                if signs.ndim == 3:
                    r_vals = (signs * alpha[:, None, :]).sum(axis=2) / leaf.length
                else:
                    r_vals = alpha @ signs.T / leaf.length
                surv = np.flatnonzero((r_vals >= eta).ravel())

        # check step: an emptied list terminates the decode
        if surv is not None and surv.size == 0:
            return DecodeOutput(
                status="premature_termination",
                v_hat=None,
                payload_hat=None,
                counters=ctrs,
                gammas=gammas if track_gamma else None,
                correct_trace=correct_trace if track_gamma else None,
            )

        if C == 1 and surv is None and not selection_on:
            # forced extension: no fork, no sort, bank order unchanged
            bank.q = bank.q + dq[:, 0]
            if corr_words is None:
                bank.hbe[:, leaf.level, sl] = leaf.words[0]
            else:
                bank.hbe[:, leaf.level, sl] = leaf.words[0] ^ corr_words
            if is_pac:
                bank.u[:, sl] = leaf.patterns[0]
                rev = np.broadcast_to(leaf.patterns[0][::-1], (P, leaf.length))
                bank.state = np.concatenate([rev, bank.state], axis=1)[
                    :, : plan.reg_len
                ].copy()
        else:
            q_ext = (bank.q[:, None] + dq).ravel()  # creation order: path-major
            if surv is not None:
                pruned = np.delete(np.arange(P * C), surv)
                if pruned.size:
                    pruned_mass = _lse(log_k - q_ext[pruned])
            n_surv = surv.size if surv is not None else P * C

            if selection_on:
                order = (
                    np.argsort(q_ext, kind="stable")
                    if surv is None
                    else surv[np.argsort(q_ext[surv], kind="stable")]
                )
                if n_surv > L:
                    sorts.record(r + 1, n_surv)
                log_phi_sorted = log_k - q_ext[order]
                k_keep, discarded = select_min_list(
                    log_phi_sorted, pruned_mass, discarded, lc_cfg
                )
                kept = order[:k_keep]
            elif n_surv > L:
                sorts.record(r + 1, n_surv)
                if L == 1 and not need_mass:
                    # argmin matches the stable sort's first-minimum rule
                    if surv is None:
                        kept = np.array([np.argmin(q_ext)])
                    else:
                        j = int(np.argmin(q_ext[surv]))
                        kept = surv[j : j + 1]
                else:
                    order = (
                        np.argsort(q_ext, kind="stable")
                        if surv is None
                        else surv[np.argsort(q_ext[surv], kind="stable")]
                    )
                    kept = order[:L]
                    if need_mass:
                        discarded = discarded.absorb(pruned_mass).absorb(
                            _lse(log_k - q_ext[order[L:]])
                        )
            else:
                kept = surv  # None = all extensions, in creation order
                if need_mass:
                    discarded = discarded.absorb(pruned_mass)

            # materialize the kept extensions
            if kept is None:
                parents = np.repeat(np.arange(P), C)
                cands = np.tile(np.arange(C), P)
                new_q = q_ext
            else:
                parents = kept // C
                cands = kept - parents * C
                new_q = q_ext[kept]
            if parents.size != P or (parents != np.arange(P)).any():
                bank.reindex(parents, copy_rows=leaf.level)
            if corr_words is None:
                new_words = leaf.words[cands]
            else:
                new_words = leaf.words[cands] ^ corr_words[parents]
            bank.hbe[:, leaf.level, sl] = new_words
            bank.q = new_q
            if is_pac:
                bank.u[:, sl] = leaf.patterns[cands]
                joined = np.concatenate(
                    [leaf.patterns[cands][:, ::-1], bank.state], axis=1
                )
                bank.state = joined[:, : plan.reg_len].copy()

        if track_gamma:
            kept_mass = _lse(log_k - bank.q)
            total = np.logaddexp(discarded.log_d, kept_mass)
            gammas.append(float(np.exp(kept_mass - total)))
        if genie is not None:
            bank.correct = bank.correct & (
                bank.hbe[:, leaf.level, sl] == genie.true_words[r]
            ).all(axis=1)
            if track_gamma:
                correct_trace.append(bool(bank.correct.any()))
        if trace_hook is not None:
            trace_hook(r + 1, bank.hbe[:, leaf.level, sl].copy(), bank.q.copy())

        for child_level, pstart, half in leaf.combines:
            left = bank.hbe[:, child_level, pstart : pstart + half]
            right = bank.hbe[:, child_level, pstart + half : pstart + 2 * half]
            bank.hbe[:, child_level - 1, pstart : pstart + half] = left ^ right
            bank.hbe[:, child_level - 1, pstart + half : pstart + 2 * half] = right

    v_hats = polar_transform(bank.hbe[:, 0, :])
    paths = [
        (float(bank.q[i]), v_hats[i], bank.u[i] if plan.reg_len else None)
        for i in range(bank.size)
    ]
    v_hat, payload_hat, status = finalize(paths, spec)
    return DecodeOutput(
        status=status,
        v_hat=v_hat,
        payload_hat=payload_hat,
        counters=ctrs,
        snapshot=[(q, v) for q, v, _ in paths],
        gammas=gammas if track_gamma else None,
        correct_trace=correct_trace if track_gamma else None,
    )


def scl_decode(llrs, spec: CodeSpec, L: int, counters: Counters | None = None) -> DecodeOutput:
    """Bit-granularity successive cancellation list decoding."""
    return list_decode(llrs, spec, _bit_plan(spec), L, counters)


def pscl_decode(
    llrs, spec: CodeSpec, tau: int, L: int, counters: Counters | None = None
) -> DecodeOutput:
    """Partitioned SCL advancing one sub-polar-tree leaf at a time."""
    return list_decode(llrs, spec, _subtree_plan(spec, tau), L, counters)
