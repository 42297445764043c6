"""Single-path decoders: SC over the polar tree, PSC over the sub-polar tree.

The f kernel is the exact box-plus ln((1+e^(a+b))/(e^a+e^b)) in an
overflow-safe rearrangement; the complexity metric of the simulator
counts evaluations of these two kernels and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec
from .encode import polar_transform
from .polar_tree import SubPolarTree, active_patterns, build_sub_polar_tree, leaf_candidate_set


@dataclass
class FlopCounter:
    f_count: int = 0
    g_count: int = 0

    @property
    def total(self) -> int:
        return self.f_count + self.g_count

    def merge(self, other: "FlopCounter") -> None:
        self.f_count += other.f_count
        self.g_count += other.g_count


def _f_raw(a, b):
    # ln((1+e^(a+b))/(e^a+e^b)) rearranged through logaddexp, which is
    # overflow-safe for |a|, |b| far beyond 700
    return np.logaddexp(a + b, 0.0) - np.logaddexp(a, b)


def f_llr(a: float, b: float, ctr: FlopCounter | None = None) -> float:
    if ctr is not None:
        ctr.f_count += 1
    return float(_f_raw(np.float64(a), np.float64(b)))


def g_llr(a: float, b: float, c: int, ctr: FlopCounter | None = None) -> float:
    if ctr is not None:
        ctr.g_count += 1
    return float(b + (1.0 - 2.0 * c) * a)


def f_vec(a: np.ndarray, b: np.ndarray, ctr: FlopCounter | None = None) -> np.ndarray:
    if ctr is not None:
        ctr.f_count += a.size
    return _f_raw(a, b)


def g_vec(a, b, c, ctr: FlopCounter | None = None) -> np.ndarray:
    if ctr is not None:
        ctr.g_count += np.asarray(a).size
    return b + (1.0 - 2.0 * c.astype(np.float64)) * a


def sc_decode(llrs, spec: CodeSpec, ctr: FlopCounter | None = None) -> np.ndarray:
    """Plain successive cancellation; returns the data-carrier estimate."""
    if spec.kind != "plain":
        raise ValueError("sc_decode handles plain polar codes only")
    llrs = np.asarray(llrs, dtype=np.float64)
    active = np.zeros(spec.n_block, dtype=bool)
    active[spec.active_idx0()] = True
    v_hat = np.zeros(spec.n_block, dtype=np.int8)

    def walk(alpha: np.ndarray, start: int) -> np.ndarray:
        if alpha.size == 1:
            bit = 1 if (active[start] and alpha[0] < 0) else 0
            v_hat[start] = bit
            return np.array([bit], dtype=np.int8)
        half = alpha.size // 2
        beta_l = walk(f_vec(alpha[:half], alpha[half:], ctr), start)
        beta_r = walk(g_vec(alpha[:half], alpha[half:], beta_l, ctr), start + half)
        return np.concatenate([beta_l ^ beta_r, beta_r])

    walk(llrs, 0)
    return v_hat


def psc_decode(
    llrs,
    spec: CodeSpec,
    tau: int,
    ctr: FlopCounter | None = None,
    tree: SubPolarTree | None = None,
) -> np.ndarray:
    """Partitioned SC: sub-polar-tree leaves decide whole segments by
    maximizing the correlation of candidate words with the leaf LLRs."""
    if spec.kind not in ("plain", "pac"):
        raise ValueError("psc_decode handles plain and PAC codes")
    llrs = np.asarray(llrs, dtype=np.float64)
    if tree is None:
        tree = build_sub_polar_tree(spec, tau)
    leaf_by_start = {lf.node.start0: lf for lf in tree.leaves}
    v_hat = np.zeros(spec.n_block, dtype=np.int8)
    pac_state = (
        np.zeros(len(spec.pac_impulse) - 1, dtype=np.int8)
        if spec.kind == "pac"
        else None
    )

    def decide_leaf(leaf, alpha: np.ndarray) -> np.ndarray:
        nonlocal pac_state
        if spec.kind == "pac":
            from .codes import pac_convolve

            words = []
            states = []
            for useg in active_patterns(leaf):
                vseg, st = pac_convolve(useg, spec.pac_impulse, pac_state)
                words.append(polar_transform(vseg))
                states.append(st)
            words = np.array(words, dtype=np.int8)
        else:
            words = leaf_candidate_set(tree, leaf.index_r)
        corr = (1.0 - 2.0 * words.astype(np.float64)) @ alpha
        best = int(np.argmax(corr))
        if spec.kind == "pac":
            pac_state = states[best]
        return words[best]

    def walk(alpha: np.ndarray, start: int) -> np.ndarray:
        leaf = leaf_by_start.get(start)
        if leaf is not None and leaf.length == alpha.size:
            beta = decide_leaf(leaf, alpha)
            v_hat[start : start + alpha.size] = polar_transform(beta)
            return beta.astype(np.int8)
        half = alpha.size // 2
        beta_l = walk(f_vec(alpha[:half], alpha[half:], ctr), start)
        beta_r = walk(g_vec(alpha[:half], alpha[half:], beta_l, ctr), start + half)
        return np.concatenate([beta_l ^ beta_r, beta_r])

    walk(llrs, 0)
    return v_hat
