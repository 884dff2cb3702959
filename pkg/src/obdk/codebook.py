"""Constellations, exhaustive symbol-vector enumeration, and codebooks.

The codebook maps every transmit hypothesis x_k to the sign pattern
c_k = sign(H x_k), i.e. the observation the receiver would see without
noise. All detectors search over these codewords.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import RealChannel, quantize_sign

# Hard cap on the number of enumerated symbol vectors.
MAX_CODEBOOK_SIZE = 1 << 24

_SCHEMES = ("bpsk", "qam4", "qam16")


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power constellation.

    ``complex_points`` are ordered ascending by real part, then imaginary
    part. ``real_points`` are the per-axis levels (ascending); BPSK keeps
    its imaginary axis pinned to zero.
    """

    scheme: str
    complex_points: np.ndarray
    real_points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.complex_points, dtype=np.complex128)
        power = np.mean(np.abs(pts) ** 2)
        if abs(power - 1.0) > 1e-12:
            raise ValueError(f"constellation average power is {power}, expected 1")
        object.__setattr__(self, "complex_points", pts)
        object.__setattr__(self, "real_points", np.asarray(self.real_points, dtype=np.float64))

    @property
    def size(self) -> int:
        """Number of complex points, M."""
        return len(self.complex_points)


def make_constellation(scheme: str) -> Constellation:
    """Build one of the supported unit-power constellations.

    ``bpsk``: {-1, +1}. ``qam4``: square 4-QAM with per-axis levels
    +/- 1/sqrt(2). ``qam16``: square 16-QAM with levels {-3,-1,1,3}/sqrt(10).
    """
    key = scheme.lower()
    if key == "bpsk":
        points = np.array([-1.0 + 0j, 1.0 + 0j])
        levels = np.array([-1.0, 1.0])
    elif key == "qam4":
        levels = np.array([-1.0, 1.0]) / np.sqrt(2.0)
        points = np.array([r + 1j * i for r in levels for i in levels])
    elif key == "qam16":
        levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
        points = np.array([r + 1j * i for r in levels for i in levels])
    else:
        raise ValueError(f"unsupported constellation scheme: {scheme!r}")
    return Constellation(key, points, levels)


@dataclass(frozen=True)
class SymbolTable:
    """All K = M^U transmit hypotheses as real vectors of length 2U.

    Element order is [Re(x_1)..Re(x_U), Im(x_1)..Im(x_U)]. The index
    order is fixed: user 1 is the most significant digit and each user's
    symbol runs from the largest constellation point (descending real,
    then descending imaginary) downwards, so index 0 is the all-largest
    vector. Indices are stable across runs.
    """

    vectors: np.ndarray
    constellation: Constellation
    users: int

    @property
    def size(self) -> int:
        return self.vectors.shape[0]


def enumerate_symbol_vectors(c: Constellation, u: int, cap: int = MAX_CODEBOOK_SIZE) -> SymbolTable:
    """Enumerate all M^u symbol vectors in the fixed mixed-radix order."""
    if u < 1:
        raise ValueError("user count must be >= 1")
    m = c.size
    k = m ** u
    if k > cap:
        raise ValueError(f"codebook size {k} exceeds the cap of {cap}")
    # Descending traversal of the ascending point list; digit 0 of every
    # user is the largest point.
    points_desc = c.complex_points[::-1]
    digits = np.unravel_index(np.arange(k), (m,) * u)
    symbols = np.stack([points_desc[d] for d in digits], axis=1)
    vectors = np.concatenate([symbols.real, symbols.imag], axis=1)
    return SymbolTable(np.ascontiguousarray(vectors), c, u)


@dataclass(frozen=True)
class Codebook:
    """Sign codewords c_k = sign(H x_k), aligned with their symbol table."""

    codewords: np.ndarray
    symbols: SymbolTable

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.codewords.shape[1]


def build_codebook(ch: RealChannel, s: SymbolTable) -> Codebook:
    if s.vectors.shape[1] != ch.n_inputs:
        raise ValueError(
            f"symbol vectors have {s.vectors.shape[1]} dimensions, channel expects {ch.n_inputs}"
        )
    noiseless = s.vectors @ ch.entries.T
    return Codebook(quantize_sign(noiseless), s)
