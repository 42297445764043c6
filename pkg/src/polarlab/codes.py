"""Code constructions: information sets, CRC attachment, PAC convolution."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

# x^11 + x^10 + x^9 + x^5 + 1, degree-descending coefficients
CRC11_POLY = (1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1)
# default PAC convolution impulse response
PAC_IMPULSE = (1, 0, 1, 1, 0, 1, 1)

SEQ_ENV_VAR = "POLARLAB_SEQ_PATH"
_SEQ_ASSET = "nr_reliability_seq_1024.txt"


class ConstructionError(ValueError):
    """Invalid code-construction request."""


@dataclass(frozen=True)
class RateProfileSource:
    """Reliability ordering of bit channels, least reliable first.

    ``sequence_table`` holds 0-based indices in increasing reliability
    order and must be a permutation of ``range(max_n)``.
    """

    sequence_table: tuple[int, ...]
    max_n: int

    def __post_init__(self):
        if sorted(self.sequence_table) != list(range(self.max_n)):
            raise ConstructionError(
                "sequence_table must be a permutation of 0..max_n-1"
            )

    @classmethod
    def from_file(cls, path) -> "RateProfileSource":
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                entries.append(int(line))
        return cls(sequence_table=tuple(entries), max_n=len(entries))

    @classmethod
    def bundled(cls) -> "RateProfileSource":
        """Load the packaged NR sequence, honoring POLARLAB_SEQ_PATH."""
        override = os.environ.get(SEQ_ENV_VAR)
        if override:
            return cls.from_file(override)
        ref = resources.files("polarlab.assets").joinpath(_SEQ_ASSET)
        with resources.as_file(ref) as path:
            return cls.from_file(path)


_BUNDLED_CACHE: list[RateProfileSource] = []


def default_profile_source() -> RateProfileSource:
    # override files are re-read every time; only the packaged asset is cached
    if os.environ.get(SEQ_ENV_VAR):
        return RateProfileSource.bundled()
    if not _BUNDLED_CACHE:
        _BUNDLED_CACHE.append(RateProfileSource.bundled())
    return _BUNDLED_CACHE[0]


@dataclass(frozen=True)
class CodeSpec:
    """Block code description shared by encoder, decoders and simulator.

    ``info_set`` uses 1-based positions. For ``crc_polar`` the dimension
    ``k_dim`` counts occupied positions, i.e. payload plus CRC parity
    bits; parity occupies the last ``deg(crc_poly)`` active positions.
    """

    n_block: int
    k_dim: int
    info_set: tuple[int, ...]
    kind: str = "plain"
    crc_poly: tuple[int, ...] | None = None
    pac_impulse: tuple[int, ...] | None = None
    profile_kind: str = "fiveg"
    design_snr_db: float | None = None

    def __post_init__(self):
        n = self.n_block
        if n < 2 or n & (n - 1):
            raise ConstructionError(f"N must be a power of two, got {n}")
        if not 0 <= self.k_dim <= n:
            raise ConstructionError(f"K must be in [0, N], got {self.k_dim}")
        if len(self.info_set) != self.k_dim:
            raise ConstructionError("info_set size must equal K")
        if tuple(sorted(set(self.info_set))) != self.info_set:
            raise ConstructionError("info_set must be sorted and duplicate-free")
        if self.info_set and not (1 <= self.info_set[0] and self.info_set[-1] <= n):
            raise ConstructionError("info_set entries must lie in [1, N]")
        if self.kind not in ("plain", "crc_polar", "pac"):
            raise ConstructionError(f"unknown code kind {self.kind!r}")
        if self.kind == "crc_polar":
            p = self.crc_poly
            if not p or p[0] != 1 or p[-1] != 1 or len(p) < 2:
                raise ConstructionError(
                    "crc_polar requires crc_poly with leading and trailing 1"
                )
        elif self.crc_poly is not None:
            raise ConstructionError("crc_poly only valid for kind=crc_polar")
        if self.kind == "pac":
            g = self.pac_impulse
            if not g or g[0] != 1:
                raise ConstructionError("pac requires impulse starting with 1")
        elif self.pac_impulse is not None:
            raise ConstructionError("pac_impulse only valid for kind=pac")

    @property
    def n_stages(self) -> int:
        return self.n_block.bit_length() - 1

    @property
    def crc_degree(self) -> int:
        return len(self.crc_poly) - 1 if self.crc_poly else 0

    @property
    def payload_len(self) -> int:
        """Number of data bits carried per frame."""
        if self.kind == "crc_polar":
            return self.k_dim - self.crc_degree
        return self.k_dim

    def active_idx0(self) -> np.ndarray:
        """Information positions as a 0-based index array."""
        return np.asarray(self.info_set, dtype=np.int64) - 1


def build_information_set(
    n_block: int,
    k_dim: int,
    profile_kind: str,
    source: RateProfileSource | None = None,
    design_snr_db: float | None = None,
) -> tuple[int, ...]:
    """Pick the K active positions (1-based, sorted) for a length-N code.

    ``fiveg`` filters the reliability table to indices below N and keeps
    the K most reliable. ``reed_muller`` keeps indices of maximal Hamming
    weight, breaking ties (if any) by dropping the positions of lowest 5G
    reliability. ``ga`` ranks positions by Gaussian-approximation means at
    ``design_snr_db``.
    """
    if n_block < 2 or n_block & (n_block - 1):
        raise ConstructionError(f"N must be a power of two, got {n_block}")
    if not 0 <= k_dim <= n_block:
        raise ConstructionError(f"K={k_dim} outside [0, N={n_block}]")

    if profile_kind == "fiveg":
        src = source or default_profile_source()
        if n_block > src.max_n:
            raise ConstructionError(
                f"N={n_block} exceeds sequence table size {src.max_n}"
            )
        filtered = [i for i in src.sequence_table if i < n_block]
        chosen = filtered[len(filtered) - k_dim :] if k_dim else []
        return tuple(sorted(i + 1 for i in chosen))

    if profile_kind == "reed_muller":
        if k_dim == 0:
            return ()
        weights = np.array([bin(i).count("1") for i in range(n_block)])
        for w in range(n_block.bit_length() - 1, -1, -1):
            picked = np.flatnonzero(weights >= w)
            if picked.size >= k_dim:
                break
        if picked.size > k_dim:
            # drop lowest-reliability positions among the tied weight class
            if source is None:
                try:
                    source = default_profile_source()
                except Exception as exc:  # pragma: no cover - asset always ships
                    raise ConstructionError(
                        "Reed-Muller tie-break needs a reliability source"
                    ) from exc
            if n_block > source.max_n:
                raise ConstructionError(
                    "Reed-Muller tie-break needs a reliability source covering N"
                )
            rank = {idx: pos for pos, idx in enumerate(source.sequence_table)}
            tied = sorted(
                (i for i in picked if weights[i] == w),
                key=lambda i: rank[i],
            )
            n_drop = picked.size - k_dim
            drop = set(tied[:n_drop])
            picked = np.array([i for i in picked if i not in drop])
        return tuple(int(i) + 1 for i in picked)

    if profile_kind == "ga":
        if design_snr_db is None:
            raise ConstructionError("ga profile requires design_snr_db")
        from . import ga

        return ga.ga_construct(n_block, k_dim, design_snr_db)

    raise ConstructionError(f"unknown profile kind {profile_kind!r}")


def build_code_spec(
    n_block: int,
    k_dim: int,
    profile_kind: str = "fiveg",
    kind: str = "plain",
    crc_poly: tuple[int, ...] | None = None,
    pac_impulse: tuple[int, ...] | None = None,
    design_snr_db: float | None = None,
    source: RateProfileSource | None = None,
) -> CodeSpec:
    """Convenience constructor resolving the information set."""
    if kind == "crc_polar" and crc_poly is None:
        crc_poly = CRC11_POLY
    if kind == "pac" and pac_impulse is None:
        pac_impulse = PAC_IMPULSE
    info = build_information_set(
        n_block, k_dim, profile_kind, source=source, design_snr_db=design_snr_db
    )
    return CodeSpec(
        n_block=n_block,
        k_dim=k_dim,
        info_set=info,
        kind=kind,
        crc_poly=crc_poly,
        pac_impulse=pac_impulse,
        profile_kind=profile_kind,
        design_snr_db=design_snr_db,
    )


def attach_crc(payload, crc_poly) -> np.ndarray:
    """Append parity bits so the result is divisible by ``crc_poly``."""
    payload = np.asarray(payload, dtype=np.int8)
    poly = np.asarray(crc_poly, dtype=np.int8)
    if payload.size == 0:
        raise ConstructionError("payload must be nonempty")
    d = poly.size - 1
    if d < 1:
        raise ConstructionError("CRC polynomial degree must be >= 1")
    reg = np.concatenate([payload, np.zeros(d, dtype=np.int8)])
    for i in range(payload.size):
        if reg[i]:
            reg[i : i + d + 1] ^= poly
    return np.concatenate([payload, reg[-d:]])


def check_crc(bits, crc_poly) -> bool:
    """True iff ``bits`` read as a polynomial is divisible by ``crc_poly``."""
    bits = np.asarray(bits, dtype=np.int8)
    poly = np.asarray(crc_poly, dtype=np.int8)
    d = poly.size - 1
    if bits.size <= d:
        raise ConstructionError("bit sequence shorter than CRC degree")
    reg = bits.copy()
    for i in range(bits.size - d):
        if reg[i]:
            reg[i : i + d + 1] ^= poly
    return not reg[-d:].any()


def pac_convolve(u_bits, impulse, init_state=None):
    """Binary convolution of ``u_bits`` with ``impulse``.

    ``init_state`` carries the most-recent-first history of previous
    inputs so a frame can be convolved segment by segment. Returns the
    output segment and the register state after consuming ``u_bits``.
    """
    u = np.asarray(u_bits, dtype=np.int8)
    g = np.asarray(impulse, dtype=np.int8)
    if g.size == 0 or g[0] != 1:
        raise ConstructionError("impulse must start with 1")
    m = g.size - 1
    if init_state is None:
        state = np.zeros(m, dtype=np.int8)
    else:
        state = np.asarray(init_state, dtype=np.int8)
        if state.size != m:
            raise ConstructionError("register length must be len(impulse) - 1")
    if m == 0:
        return u.copy(), state.copy()
    # prepend history (state[0] is u[-1]) and convolve over the window
    hist = state[::-1]
    ext = np.concatenate([hist, u])
    v = np.zeros(u.size, dtype=np.int8)
    for j in range(m + 1):
        if g[j]:
            v ^= ext[m - j : m - j + u.size]
    new_state = ext[::-1][:m].copy()
    return v, new_state
