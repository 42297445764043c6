"""Gaussian-approximation density evolution.

Node LLRs under the all-zero assumption are modeled as N(mu, 2*mu); the
root mean is 2/sigma^2, a g-child doubles the parent mean and an f-child
degrades it through the two-regime phi fit

    phi(x) = exp(-0.4527 x^0.86 + 0.0218)            0 < x < 10
    phi(x) = sqrt(pi/x) e^(-x/4) (1 - 10/(7x))       x >= 10

Large means are handled in log domain so deep g-chains do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, inf, log, pi, sqrt
from statistics import NormalDist

import numpy as np

from .channel import ChannelParams
from .polar_tree import SubPolarTree, log_kappa_table

_A, _B, _C = 0.4527, 0.86, 0.0218
_SEAM = 10.0
_NORMAL = NormalDist()


def _log_phi(x: float) -> float:
    if x < _SEAM:
        return -_A * x**_B + _C
    return 0.5 * log(pi / x) - x / 4.0 + log(1.0 - 10.0 / (7.0 * x))


def phi_fun(x: float) -> float:
    """Mean-degradation companion function; phi(0) = 1 by definition.

    The closed-form fit is strictly decreasing but sits a hair above 1
    for x below ~0.03; it is returned unclamped so that inversion stays
    exact there.
    """
    if x < 0:
        raise ValueError(f"phi_fun requires x >= 0, got {x}")
    if x == 0:
        return 1.0
    return exp(_log_phi(x))


_LOG_PHI_AT_SEAM = _log_phi(_SEAM)
_LOG_PHI_MAX = _C  # value of the small-x fit at x -> 0


def _bisect_decreasing(fn, target: float, lo: float, hi: float, iters: int = 200) -> float:
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _phi_inv_log(log_y: float) -> float:
    """Inverse on the log scale; dispatches to the regime owning log_y."""
    if log_y >= 0.0:
        return 0.0
    if log_y > _LOG_PHI_AT_SEAM:
        return _bisect_decreasing(_log_phi, log_y, 0.0, _SEAM)
    hi = _SEAM * 2
    while _log_phi(hi) > log_y:
        hi *= 2
    return _bisect_decreasing(_log_phi, log_y, _SEAM, hi)


def phi_inv(y: float) -> float:
    """Inverse of phi_fun: phi_fun(phi_inv(y)) = y to ~1e-12.

    phi_inv(1) = 0 exactly; values up to exp(0.0218) are accepted so the
    slight above-1 excursion of the fit near zero stays invertible.
    """
    if not 0 < y <= exp(_LOG_PHI_MAX):
        raise ValueError(f"phi_inv requires y in (0, 1], got {y}")
    if y == 1.0:
        return 0.0
    log_y = log(y)
    if log_y >= 0.0:
        return _bisect_decreasing(_log_phi, log_y, 0.0, _SEAM)
    return _phi_inv_log(log_y)


def norm_inv_cdf(p: float) -> float:
    """Standard normal quantile."""
    if not 0 < p < 1:
        raise ValueError(f"norm_inv_cdf requires p in (0, 1), got {p}")
    return _NORMAL.inv_cdf(p)


def _f_child_mean(mu: float) -> float:
    """Mean after the box-plus (f) update, tail-safe."""
    if mu == 0.0:
        return 0.0
    lp = _log_phi(mu)
    if lp < -30.0:
        # 1 - (1 - phi)^2 = phi*(2 - phi) ~ 2*phi below double precision
        return _phi_inv_log(lp + log(2.0 - exp(lp)))
    y = 1.0 - (1.0 - exp(lp)) ** 2
    return _phi_inv_log(log(y))


@dataclass
class GaMeans:
    mu: dict[tuple[int, int], float]  # (level, pos) -> node mean
    leaf_mu: np.ndarray  # per-sub-leaf means, index r-1


def ga_node_means(tree: SubPolarTree, params: ChannelParams) -> GaMeans:
    """Evolve node means from the root down to every sub-polar-tree leaf."""
    mu: dict[tuple[int, int], float] = {(0, 1): 2.0 / params.sigma2}

    def descend(level: int, pos: int) -> float:
        key = (level, pos)
        if key not in mu:
            parent = descend(level - 1, (pos + 1) // 2)
            mu[key] = 2.0 * parent if pos % 2 == 0 else _f_child_mean(parent)
        return mu[key]

    leaf_mu = np.array(
        [descend(lf.node.level, lf.node.pos) for lf in tree.leaves], dtype=np.float64
    )
    return GaMeans(mu=mu, leaf_mu=leaf_mu)


def ga_full_leaf_means(n_block: int, sigma2: float) -> np.ndarray:
    """Means of all N bit channels (natural order), level by level."""
    mu = np.array([2.0 / sigma2])
    while mu.size < n_block:
        nxt = np.empty(mu.size * 2)
        for i, m in enumerate(mu):
            nxt[2 * i] = _f_child_mean(float(m))
            nxt[2 * i + 1] = 2.0 * m
        mu = nxt
    return mu


def ga_construct(n_block: int, k_dim: int, design_snr_db: float, rate: float | None = None) -> tuple[int, ...]:
    """Information set by GA reliability ranking at the design SNR.

    ``rate`` defaults to K/N for the sigma^2 mapping. Ties break toward
    the smaller index.
    """
    if n_block < 2 or n_block & (n_block - 1):
        raise ValueError(f"N must be a power of two, got {n_block}")
    if not 0 <= k_dim <= n_block:
        raise ValueError(f"K={k_dim} outside [0, N]")
    if k_dim == 0:
        return ()
    r = rate if rate is not None else k_dim / n_block
    sigma2 = ChannelParams(ebn0_db=design_snr_db, rate=r).sigma2
    means = ga_full_leaf_means(n_block, sigma2)
    order = sorted(range(n_block), key=lambda i: (-means[i], i))
    return tuple(sorted(i + 1 for i in order[:k_dim]))


@dataclass
class ThresholdTable:
    """Per-leaf pruning thresholds plus the global selection threshold."""

    n_block: int
    k_dim: int
    tau: int
    ebn0_db: float
    eps_tol: float
    lengths: np.ndarray
    mu: np.ndarray
    eta_pruning: np.ndarray
    log_kappa: np.ndarray  # index r = 0..M

    @property
    def eta_selection(self) -> float:
        return 1.0 - self.eps_tol

    @property
    def m_count(self) -> int:
        return len(self.lengths)


def pruning_thresholds(
    tree: SubPolarTree, params: ChannelParams, eps_tol: float
) -> ThresholdTable:
    """Thresholds eta^(r) with Pr{R^(r) < eta^(r)} <= eps_tol under the
    per-leaf model R^(r) ~ N(mu^(r), 2 mu^(r) / l).

    eps_tol = 0 is allowed and yields eta = -inf (pruning disabled) with
    eta_selection = 1.
    """
    if not 0 <= eps_tol < 1:
        raise ValueError(f"eps_tol must be in [0, 1), got {eps_tol}")
    means = ga_node_means(tree, params).leaf_mu
    lengths = np.array([lf.length for lf in tree.leaves], dtype=np.int64)
    if eps_tol == 0.0:
        eta = np.full(len(lengths), -inf)
    else:
        z = norm_inv_cdf(eps_tol)
        eta = means + z * np.sqrt(2.0 * means / lengths)
    return ThresholdTable(
        n_block=tree.spec.n_block,
        k_dim=tree.spec.k_dim,
        tau=tree.tau,
        ebn0_db=params.ebn0_db,
        eps_tol=eps_tol,
        lengths=lengths,
        mu=means,
        eta_pruning=eta,
        log_kappa=log_kappa_table(tree),
    )


def save_threshold_table(table: ThresholdTable, path) -> None:
    """Text format: header "N K tau ebn0_db eps_tol", then M lines
    "r length mu eta"."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{table.n_block} {table.k_dim} {table.tau} "
            f"{float(table.ebn0_db)!r} {float(table.eps_tol)!r}\n"
        )
        for r in range(table.m_count):
            fh.write(
                f"{r + 1} {int(table.lengths[r])} {float(table.mu[r])!r} "
                f"{float(table.eta_pruning[r])!r}\n"
            )


def load_threshold_table(path, tree: SubPolarTree) -> ThresholdTable:
    """Read a saved table back, rebinding the completion-count factors
    from ``tree`` (they are not part of the file format)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    n_block, k_dim, tau = (int(v) for v in lines[0].split()[:3])
    ebn0_db, eps_tol = (float(v) for v in lines[0].split()[3:5])
    rows = [ln.split() for ln in lines[1:]]
    lengths = np.array([int(row[1]) for row in rows], dtype=np.int64)
    mu = np.array([float(row[2]) for row in rows])
    eta = np.array([float(row[3]) for row in rows])
    if tree.spec.n_block != n_block or tree.spec.k_dim != k_dim or tree.tau != tau:
        raise ValueError("threshold table does not match the code/tau it is used with")
    if len(lengths) != tree.m_count or any(
        int(l) != lf.length for l, lf in zip(lengths, tree.leaves)
    ):
        raise ValueError("threshold table leaf layout does not match the sub-polar tree")
    return ThresholdTable(
        n_block=n_block,
        k_dim=k_dim,
        tau=tau,
        ebn0_db=ebn0_db,
        eps_tol=eps_tol,
        lengths=lengths,
        mu=mu,
        eta_pruning=eta,
        log_kappa=log_kappa_table(tree),
    )
