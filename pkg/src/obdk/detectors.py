"""Weighted-Hamming detectors and the sphere-list decoder.

Four detectors share one scoring core:

* maximum-likelihood detection (sum of log Gaussian tails),
* minimum weighted-Hamming-distance detection with exact weights
  (identical decisions to maximum likelihood),
* the same rule with closed-form approximate weights,
* its high-SNR variant that drops the match weights entirely.

The sphere decoder precomputes, for every possible sub-vector pattern of
the observation, the indices of the L nearest sub-codewords; at
detection time the candidate list is the union of the looked-up
sub-lists and the weighted-distance rule runs only on that list.

All distances are affine in the +/-1 observation: d_k(y) = base_k -
coef_k . y. Detectors therefore reduce to one matrix-vector product per
observation, and ties always resolve to the smallest codeword index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .channel import RealChannel
from .codebook import Codebook
from .weights import WeightSet, log_q

# Dense sub-list tables hold G * 2^n_sub * L indices; n_sub is capped to
# keep the pattern axis bounded.
MAX_SUBVECTOR_DIM = 20

_TABLE_MAGIC = b"OSD1"


@dataclass(frozen=True)
class SphereConfig:
    """Sub-vector dimension and per-pattern list size of the sphere decoder."""

    n_sub: int
    list_size: int

    def __post_init__(self):
        if self.n_sub < 1 or self.list_size < 1:
            raise ValueError("sub-vector dimension and list size must be >= 1")
        if self.n_sub > MAX_SUBVECTOR_DIM:
            raise ValueError(f"sub-vector dimension capped at {MAX_SUBVECTOR_DIM}")

    def group_count(self, n_outputs: int) -> int:
        if n_outputs % self.n_sub:
            raise ValueError(
                f"sub-vector dimension {self.n_sub} must divide the observation length {n_outputs}"
            )
        return n_outputs // self.n_sub


@dataclass(frozen=True)
class DetectionResult:
    """Winning codeword index, its score, and the searched list length.

    ``distance`` is the achieved weighted Hamming distance (the
    log-likelihood for maximum-likelihood detection); ``list_len`` is K
    for full-search detectors.
    """

    index: int
    distance: float
    list_len: int


@dataclass(frozen=True)
class SphereTable:
    """Per-pattern nearest sub-codeword lists, shape (G, 2^n_sub, L).

    Entry (g, p) lists the codeword indices (zero-based, ascending
    distance, ties by index) whose g-th sub-codeword is nearest to the
    p-th sub-vector pattern. Patterns are numbered by mapping element i
    of the +/-1 sub-vector to bit i via (1 - y_i) / 2, little-endian.
    """

    indices: np.ndarray
    n_sub: int
    list_size: int
    codebook_size: int

    @property
    def group_count(self) -> int:
        return self.indices.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.group_count * self.n_sub


def weighted_hamming(y, c, w, w_tilde) -> float:
    """Sum of w_i over sign mismatches plus w_tilde_i over sign matches."""
    y = np.asarray(y)
    c = np.asarray(c)
    w = np.asarray(w, dtype=np.float64)
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    if not (y.shape == c.shape == w.shape == w_tilde.shape):
        raise ValueError("all four vectors must have the same length")
    mismatch = y != c
    return float(np.sum(np.where(mismatch, w, w_tilde)))


def pattern_index(signs) -> int:
    """Pattern number of a +/-1 vector: bit i = (1 - y_i) / 2, little-endian."""
    bits = (1 - np.asarray(signs, dtype=np.int64)) // 2
    return int(bits @ (1 << np.arange(len(bits), dtype=np.int64)))


def pattern_signs(p: int, n: int) -> np.ndarray:
    """Inverse of :func:`pattern_index`."""
    bits = (p >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _pattern_matrix(n: int) -> np.ndarray:
    """All 2^n sign patterns, row p = pattern_signs(p, n)."""
    p = np.arange(1 << n, dtype=np.int64)
    bits = (p[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def distance_affine(codebook: Codebook, ws: WeightSet, columns=None):
    """Affine form of the weighted Hamming distance, d_k(y) = base - coef @ y.

    ``columns`` restricts the distance to a slice of observation
    positions (used for sub-codeword scoring).
    """
    c = codebook.codewords.astype(np.float64)
    w, wt = ws.w, ws.w_tilde
    if columns is not None:
        c, w, wt = c[:, columns], w[:, columns], wt[:, columns]
    diff = w - wt
    base = wt.sum(axis=1) + 0.5 * diff.sum(axis=1)
    coef = 0.5 * c * diff
    return base, coef


def _mismatch_affine(codebook: Codebook, ws: WeightSet):
    c = codebook.codewords.astype(np.float64)
    base = 0.5 * ws.w.sum(axis=1)
    coef = 0.5 * c * ws.w
    return base, coef


def loglik_affine(codebook: Codebook, ch: RealChannel):
    """Affine form of the exact log-likelihood, llk_k(y) = base + coef @ y."""
    scaled = np.sqrt(2.0 / ch.noise_variance) * (codebook.symbols.vectors @ ch.entries.T)
    match = log_q(-scaled)
    mismatch = log_q(scaled)
    base = 0.5 * (match + mismatch).sum(axis=1)
    coef = 0.5 * (match - mismatch)
    return base, coef


def _check_observation(y, n_outputs: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_outputs,):
        raise ValueError(f"observation has shape {y.shape}, expected ({n_outputs},)")
    return y.astype(np.float64)


def detect_mld(y, codebook: Codebook, ch: RealChannel) -> DetectionResult:
    """Maximum-likelihood detection; ties break to the smallest index."""
    yf = _check_observation(y, ch.n_outputs)
    base, coef = loglik_affine(codebook, ch)
    scores = base + coef @ yf
    k = int(np.argmax(scores))
    return DetectionResult(k, float(scores[k]), codebook.size)


def detect_mwd(y, codebook: Codebook, ws: WeightSet) -> DetectionResult:
    """Minimum weighted-Hamming-distance detection over the full codebook."""
    yf = _check_observation(y, codebook.n_outputs)
    base, coef = distance_affine(codebook, ws)
    d = base - coef @ yf
    k = int(np.argmin(d))
    return DetectionResult(k, float(d[k]), codebook.size)


def detect_mwd_high_snr(y, codebook: Codebook, ws: WeightSet) -> DetectionResult:
    """Distance rule with match weights dropped (they vanish at high SNR)."""
    yf = _check_observation(y, codebook.n_outputs)
    base, coef = _mismatch_affine(codebook, ws)
    d = base - coef @ yf
    k = int(np.argmin(d))
    return DetectionResult(k, float(d[k]), codebook.size)


def build_sphere_table(codebook: Codebook, ws: WeightSet, cfg: SphereConfig) -> SphereTable:
    """Rank every sub-codeword against every sub-vector pattern.

    For group g and pattern p the stored list holds the L codeword
    indices whose g-th sub-codeword has the smallest weighted Hamming
    distance to the pattern, ascending, ties by index. Runs once per
    channel coherence block; detection then only looks lists up.
    """
    two_n = codebook.n_outputs
    k_total = codebook.size
    g_count = cfg.group_count(two_n)
    if cfg.list_size >= k_total:
        raise ValueError(
            f"list size {cfg.list_size} must be smaller than the codebook size {k_total}"
        )
    n_patterns = 1 << cfg.n_sub
    patterns = _pattern_matrix(cfg.n_sub).astype(np.float64)
    table = np.empty((g_count, n_patterns, cfg.list_size), dtype=np.uint32)
    # Bound the (patterns x codewords) score block per chunk.
    chunk = max(1, (1 << 22) // k_total)
    for g in range(g_count):
        cols = slice(g * cfg.n_sub, (g + 1) * cfg.n_sub)
        base, coef = distance_affine(codebook, ws, columns=cols)
        for start in range(0, n_patterns, chunk):
            block = patterns[start:start + chunk]
            d = base[None, :] - block @ coef.T
            order = np.argsort(d, axis=1, kind="stable")
            table[g, start:start + len(block)] = order[:, :cfg.list_size]
    return SphereTable(table, cfg.n_sub, cfg.list_size, k_total)


def _group_patterns(y, table: SphereTable) -> np.ndarray:
    bits = (1 - np.asarray(y, dtype=np.int64).reshape(table.group_count, table.n_sub)) // 2
    return bits @ (1 << np.arange(table.n_sub, dtype=np.int64))


def assemble_list(y, table: SphereTable) -> np.ndarray:
    """Union of the per-group sub-lists addressed by y's sub-patterns.

    Returned sorted ascending; its length lies in [L, G*L].
    """
    y = np.asarray(y)
    if y.shape != (table.n_outputs,):
        raise ValueError(f"observation has shape {y.shape}, expected ({table.n_outputs},)")
    pats = _group_patterns(y, table)
    rows = table.indices[np.arange(table.group_count), pats]
    return np.unique(rows).astype(np.int64)


def detect_osd(y, table: SphereTable, codebook: Codebook, ws: WeightSet) -> DetectionResult:
    """Weighted-distance rule restricted to the assembled candidate list."""
    candidates = assemble_list(y, table)
    yf = np.asarray(y, dtype=np.float64)
    base, coef = distance_affine(codebook, ws)
    d = base[candidates] - coef[candidates] @ yf
    j = int(np.argmin(d))
    return DetectionResult(int(candidates[j]), float(d[j]), len(candidates))


def sphere_table_to_bytes(table: SphereTable) -> bytes:
    """Serialize to the flat binary layout.

    Header: magic ``OSD1`` then four little-endian u32 fields G, n_sub,
    L, K. Payload: G * 2^n_sub * L little-endian u32 zero-based codeword
    indices, group-major, then pattern, then list position.
    """
    head = _TABLE_MAGIC + struct.pack(
        "<4I", table.group_count, table.n_sub, table.list_size, table.codebook_size
    )
    return head + table.indices.astype("<u4").tobytes()


def sphere_table_from_bytes(data: bytes) -> SphereTable:
    if data[:4] != _TABLE_MAGIC:
        raise ValueError("not a sphere-table blob (bad magic)")
    g, n_sub, list_size, k_total = struct.unpack("<4I", data[4:20])
    count = g * (1 << n_sub) * list_size
    payload = np.frombuffer(data, dtype="<u4", offset=20)
    if len(payload) != count:
        raise ValueError(f"expected {count} table entries, found {len(payload)}")
    if payload.size and payload.max() >= k_total:
        raise ValueError("table entry out of codebook range")
    indices = payload.reshape(g, 1 << n_sub, list_size).astype(np.uint32)
    return SphereTable(indices, n_sub, list_size, k_total)


def write_sphere_table(table: SphereTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(sphere_table_to_bytes(table))


def read_sphere_table(path) -> SphereTable:
    with open(path, "rb") as fh:
        return sphere_table_from_bytes(fh.read())
