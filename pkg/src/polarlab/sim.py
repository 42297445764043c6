"""Monte Carlo engine: FER and complexity measurement, tolerance
calibration, list-error analysis.

Frames are seeded individually from (master_seed, frame_index), so a
point's statistics depend only on its configuration, never on worker
count or scheduling. Work advances in fixed-size batches; the stopping
decision (error target or frame budget) is taken between batches.
"""

from __future__ import annotations

import csv
import json
import multiprocessing as mp
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams, awgn_llrs, frame_rng, modulate
from .codes import CodeSpec
from .decode_list import Counters, _bit_plan, _GenieInfo, _subtree_plan, list_decode
from .decode_sc import FlopCounter, f_vec, g_vec, psc_decode, sc_decode
from .encode import encode, polar_transform
from .ga import ThresholdTable, pruning_thresholds
from .lc_pscl import LcConfig, lc_pscl_decode
from .polar_tree import build_sub_polar_tree

DECODER_NAMES = (
    "sc",
    "psc",
    "scl",
    "pscl",
    "lc_pscl",
    "lc_prune_only",
    "lc_select_only",
)

CSV_COLUMNS = (
    "decoder,N,K,profile,kind,tau,L,lambda,eps_tol,ebn0_db,frames,frame_errors,"
    "fer,avg_flops,avg_sorted_paths,premature_terminations,wall_seconds"
).split(",")

BATCH_FRAMES = 1024


class SimulationError(RuntimeError):
    pass


class CalibrationError(SimulationError):
    pass


@dataclass(frozen=True)
class SimConfig:
    spec: CodeSpec
    decoder: str
    list_size: int = 1
    tau: int = 1
    ebn0_list: tuple[float, ...] = ()
    lam: float | None = None
    eps_tol_override: float | None = None
    max_frames: int = 100_000
    target_frame_errors: int = 100
    master_seed: int = 0
    worker_count: int = 1
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.decoder not in DECODER_NAMES:
            raise SimulationError(f"unknown decoder {self.decoder!r}")
        if self.lam is not None and not 0 < self.lam <= 1:
            raise SimulationError("lambda must lie in (0, 1]")
        if self.max_frames < 1:
            raise SimulationError("max_frames must be positive")

    @property
    def is_lc(self) -> bool:
        return self.decoder.startswith("lc_")


@dataclass
class SimRecord:
    decoder: str
    n_block: int
    k_dim: int
    profile: str
    kind: str
    tau: int | None
    list_size: int | None
    lam: float | None
    eps_tol_used: float | None
    ebn0_db: float
    frames: int
    frame_errors: int
    fer: float
    avg_flops: float
    avg_sorted_paths: float
    premature_terminations: int
    per_step_sorted: dict[int, float] = field(default_factory=dict)
    wall_seconds: float = 0.0

    def csv_row(self) -> list[str]:
        def fmt(v):
            return "" if v is None else (repr(v) if isinstance(v, float) else str(v))

        return [
            self.decoder,
            str(self.n_block),
            str(self.k_dim),
            self.profile,
            self.kind,
            fmt(self.tau),
            fmt(self.list_size),
            fmt(self.lam),
            fmt(self.eps_tol_used),
            repr(float(self.ebn0_db)),
            str(self.frames),
            str(self.frame_errors),
            repr(self.fer),
            repr(self.avg_flops),
            repr(self.avg_sorted_paths),
            str(self.premature_terminations),
            repr(self.wall_seconds),
        ]


def _channel_params(cfg: SimConfig, ebn0_db: float) -> ChannelParams:
    rate = cfg.spec.k_dim / cfg.spec.n_block
    return ChannelParams(ebn0_db=ebn0_db, rate=rate, noise_scale=cfg.noise_scale)


def _lc_config(cfg: SimConfig, thresholds: ThresholdTable) -> LcConfig:
    return LcConfig(
        thresholds=thresholds,
        list_cap=cfg.list_size,
        enable_pruning=cfg.decoder in ("lc_pscl", "lc_prune_only"),
        enable_selection=cfg.decoder in ("lc_pscl", "lc_select_only"),
    )


@dataclass
class _Partial:
    frames: int = 0
    errors: int = 0
    f_count: int = 0
    g_count: int = 0
    sorted_paths: int = 0
    premature: int = 0
    per_step: dict[int, int] = field(default_factory=dict)
    gamma_sums: np.ndarray | None = None
    left_counts: np.ndarray | None = None

    def merge(self, other: "_Partial") -> None:
        self.frames += other.frames
        self.errors += other.errors
        self.f_count += other.f_count
        self.g_count += other.g_count
        self.sorted_paths += other.sorted_paths
        self.premature += other.premature
        for lvl, n in other.per_step.items():
            self.per_step[lvl] = self.per_step.get(lvl, 0) + n
        if other.gamma_sums is not None:
            if self.gamma_sums is None:
                self.gamma_sums = other.gamma_sums.copy()
                self.left_counts = other.left_counts.copy()
            else:
                self.gamma_sums += other.gamma_sums
                self.left_counts += other.left_counts


def _run_frames(
    cfg: SimConfig,
    ebn0_db: float,
    thresholds: ThresholdTable | None,
    lo: int,
    hi: int,
    genie: bool = False,
) -> _Partial:
    spec = cfg.spec
    params = _channel_params(cfg, ebn0_db)
    part = _Partial()
    lc_cfg = _lc_config(cfg, thresholds) if cfg.is_lc else None
    plan = None
    if cfg.decoder in ("scl",):
        plan = _bit_plan(spec)
    elif cfg.decoder in ("pscl", "lc_pscl", "lc_prune_only", "lc_select_only"):
        plan = _subtree_plan(spec, cfg.tau)
    tree = build_sub_polar_tree(spec, cfg.tau) if cfg.decoder == "psc" else None

    for idx in range(lo, hi):
        payload = frame_rng(cfg.master_seed, idx, stream=0).integers(
            0, 2, size=spec.payload_len, dtype=np.int8
        )
        enc = encode(payload, spec)
        llr = awgn_llrs(modulate(enc.codeword), params, (cfg.master_seed, idx))
        ctrs = Counters()
        err = False
        genie_info = None
        if genie:
            true_words = [
                polar_transform(enc.v_seq[lf.node.start0 : lf.node.start0 + lf.length])
                for lf in plan.tree.leaves
            ]
            genie_info = _GenieInfo(true_words=true_words, track_gamma=True)

        if cfg.decoder == "sc":
            v_hat = sc_decode(llr, spec, ctrs.flops)
            err = not np.array_equal(v_hat, enc.v_seq)
        elif cfg.decoder == "psc":
            v_hat = psc_decode(llr, spec, cfg.tau, ctrs.flops, tree=tree)
            err = not np.array_equal(v_hat, enc.v_seq)
        else:
            if cfg.is_lc:
                out = lc_pscl_decode(llr, spec, cfg.tau, lc_cfg, ctrs)
            else:
                out = list_decode(
                    llr, spec, plan, cfg.list_size, ctrs, genie=genie_info
                )
            if out.status == "premature_termination":
                part.premature += 1
                err = True
            else:
                err = not np.array_equal(out.payload_hat, payload)
            part.sorted_paths += ctrs.sorts.total_sorted_paths
            for lvl, (n_paths, _) in ctrs.sorts.per_step.items():
                part.per_step[lvl] = part.per_step.get(lvl, 0) + n_paths
            if genie_info is not None:
                m = len(out.gammas)
                if part.gamma_sums is None:
                    part.gamma_sums = np.zeros(m)
                    part.left_counts = np.zeros(m, dtype=np.int64)
                part.gamma_sums += 1.0 - np.asarray(out.gammas)
                part.left_counts += ~np.asarray(out.correct_trace, dtype=bool)

        part.frames += 1
        part.errors += int(err)
        part.f_count += ctrs.flops.f_count
        part.g_count += ctrs.flops.g_count
    return part


def _worker(task) -> _Partial:
    cfg, ebn0_db, thresholds, lo, hi, genie = task
    return _run_frames(cfg, ebn0_db, thresholds, lo, hi, genie)


def _run_batches(
    cfg: SimConfig,
    ebn0_db: float,
    thresholds: ThresholdTable | None,
    genie: bool = False,
) -> _Partial:
    total = _Partial()
    workers = max(1, cfg.worker_count)
    pool = None
    if workers > 1:
        # warm the plan caches before fork so children inherit them
        if cfg.decoder == "scl":
            _bit_plan(cfg.spec)
        elif cfg.decoder not in ("sc", "psc"):
            _subtree_plan(cfg.spec, cfg.tau)
        pool = mp.get_context("fork").Pool(processes=workers)
    try:
        done = 0
        while done < cfg.max_frames:
            batch = min(BATCH_FRAMES, cfg.max_frames - done)
            if pool is None:
                total.merge(
                    _run_frames(cfg, ebn0_db, thresholds, done, done + batch, genie)
                )
            else:
                bounds = np.linspace(done, done + batch, workers + 1, dtype=int)
                tasks = [
                    (cfg, ebn0_db, thresholds, int(a), int(b), genie)
                    for a, b in zip(bounds[:-1], bounds[1:])
                    if b > a
                ]
                for part in pool.map(_worker, tasks):
                    total.merge(part)
            done += batch
            if total.errors >= cfg.target_frame_errors:
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return total


def run_point(
    cfg: SimConfig, ebn0_db: float, thresholds: ThresholdTable | None = None
) -> SimRecord:
    """Measure one (decoder, code, SNR) point."""
    if cfg.is_lc:
        if thresholds is None:
            if cfg.eps_tol_override is None:
                raise SimulationError(
                    "lc decoding needs a threshold table or eps_tol_override"
                )
            tree = build_sub_polar_tree(cfg.spec, cfg.tau)
            thresholds = pruning_thresholds(
                tree, _channel_params(cfg, ebn0_db), cfg.eps_tol_override
            )
        if (
            thresholds.tau != cfg.tau
            or thresholds.n_block != cfg.spec.n_block
            or thresholds.ebn0_db != ebn0_db
        ):
            raise SimulationError("threshold table mismatch (code, tau or SNR differ)")

    t0 = time.perf_counter()
    total = _run_batches(cfg, ebn0_db, thresholds)
    wall = time.perf_counter() - t0
    frames = total.frames
    per_leaf = cfg.decoder in ("sc", "psc")
    return SimRecord(
        decoder=cfg.decoder,
        n_block=cfg.spec.n_block,
        k_dim=cfg.spec.k_dim,
        profile=cfg.spec.profile_kind,
        kind=cfg.spec.kind,
        tau=None if cfg.decoder in ("sc", "scl") else cfg.tau,
        list_size=None if per_leaf else cfg.list_size,
        lam=cfg.lam if cfg.is_lc else None,
        eps_tol_used=thresholds.eps_tol if cfg.is_lc else None,
        ebn0_db=ebn0_db,
        frames=frames,
        frame_errors=total.errors,
        fer=total.errors / frames,
        avg_flops=(total.f_count + total.g_count) / frames,
        avg_sorted_paths=total.sorted_paths / frames,
        premature_terminations=total.premature,
        per_step_sorted={lvl: n / frames for lvl, n in sorted(total.per_step.items())},
        wall_seconds=wall,
    )


def calibrate_eps_tol(cfg: SimConfig, ebn0_db: float) -> float:
    """Tolerable error probability lambda * FER(PSCL) at this point."""
    if cfg.eps_tol_override is not None:
        return cfg.eps_tol_override
    if cfg.lam is None:
        raise CalibrationError("calibration requires lambda (or an override)")
    base = replace(cfg, decoder="pscl", lam=None, eps_tol_override=None)
    record = run_point(base, ebn0_db)
    if record.frame_errors == 0:
        raise CalibrationError(
            "no frame errors observed while calibrating; increase the frame "
            "budget or supply eps_tol_override"
        )
    return cfg.lam * record.fer


def run_sweep(
    cfg: SimConfig, out_csv=None, per_step_out=None
) -> list[SimRecord]:
    """run_point per SNR, calibrating lc tolerances per point; appends
    records to ``out_csv`` incrementally."""
    records = []
    for ebn0_db in cfg.ebn0_list:
        thresholds = None
        if cfg.is_lc:
            eps = calibrate_eps_tol(cfg, ebn0_db)
            tree = build_sub_polar_tree(cfg.spec, cfg.tau)
            thresholds = pruning_thresholds(tree, _channel_params(cfg, ebn0_db), eps)
        rec = run_point(cfg, ebn0_db, thresholds)
        records.append(rec)
        if out_csv is not None:
            write_records_csv([rec], out_csv, append=bool(records[:-1]))
    if per_step_out is not None and records:
        write_per_step_csv(records[-1], per_step_out)
    return records


def ler_analysis(cfg: SimConfig, ebn0_db: float):
    """Genie-aided PSCL run tracking, per level, the measured rate of the
    correct path having left the list and the predicted rate E[1-Gamma]."""
    if cfg.decoder != "pscl":
        raise SimulationError("ler_analysis runs on the pscl decoder")
    total = _run_batches(cfg, ebn0_db, None, genie=True)
    actual = total.left_counts / total.frames
    predicted = total.gamma_sums / total.frames
    return [
        (r + 1, float(actual[r]), float(predicted[r])) for r in range(actual.size)
    ]


def genie_r_samples(
    spec: CodeSpec,
    tau: int,
    params: ChannelParams,
    master_seed: int,
    frames: int,
    chunk: int = 2048,
) -> np.ndarray:
    """Monte Carlo samples of the per-leaf reliability metric R^(r) along
    the correct path; shape (frames, M). Vectorized over frame chunks."""
    tree = build_sub_polar_tree(spec, tau)
    leaves = {(lf.node.level, lf.node.start0): lf for lf in tree.leaves}
    out = np.empty((frames, tree.m_count))
    n = spec.n_stages

    done = 0
    while done < frames:
        f_count = min(chunk, frames - done)
        llr = np.empty((f_count, spec.n_block))
        v_true = np.empty((f_count, spec.n_block), dtype=np.int8)
        for i in range(f_count):
            idx = done + i
            payload = frame_rng(master_seed, idx, stream=0).integers(
                0, 2, size=spec.payload_len, dtype=np.int8
            )
            enc = encode(payload, spec)
            v_true[i] = enc.v_seq
            llr[i] = awgn_llrs(modulate(enc.codeword), params, (master_seed, idx))

        r_chunk = out[done : done + f_count]

        def walk(alpha: np.ndarray, level: int, start: int) -> np.ndarray:
            leaf = leaves.get((level, start))
            if leaf is not None:
                beta = polar_transform(v_true[:, start : start + leaf.length])
                signs = 1.0 - 2.0 * beta.astype(np.float64)
                r_chunk[:, leaf.index_r - 1] = (signs * alpha).mean(axis=1)
                return beta
            half = alpha.shape[1] // 2
            beta_l = walk(f_vec(alpha[:, :half], alpha[:, half:]), level + 1, start)
            beta_r = walk(
                g_vec(alpha[:, :half], alpha[:, half:], beta_l),
                level + 1,
                start + half,
            )
            return np.concatenate([beta_l ^ beta_r, beta_r], axis=1)

        walk(llr, 0, 0)
        done += f_count
    return out


def write_records_csv(records, path, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


def write_per_step_csv(record: SimRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "avg_sorted_paths"])
        for lvl, avg in sorted(record.per_step_sorted.items()):
            writer.writerow([lvl, repr(avg)])


def sim_config_from_json(source) -> SimConfig:
    """Build a SimConfig from a JSON file path or dict mirroring the
    config field names; ``spec`` holds code construction parameters."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    from .codes import build_code_spec

    spec_d = data.pop("spec")
    spec = build_code_spec(
        n_block=spec_d["n_block"],
        k_dim=spec_d["k_dim"],
        profile_kind=spec_d.get("profile_kind", "fiveg"),
        kind=spec_d.get("kind", "plain"),
        crc_poly=tuple(spec_d["crc_poly"]) if spec_d.get("crc_poly") else None,
        pac_impulse=tuple(spec_d["pac_impulse"]) if spec_d.get("pac_impulse") else None,
        design_snr_db=spec_d.get("design_snr_db"),
    )
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    if "ebn0_list" in data:
        data["ebn0_list"] = tuple(data["ebn0_list"])
    return SimConfig(spec=spec, **data)
