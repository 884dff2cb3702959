"""Channel models, noise generation, and one-bit quantization.

A complex N x U uplink channel is mirrored into its stacked real form
(2N x 2U) so that the sign quantizer acts separately on the real and
imaginary parts of each receive antenna. Quantized observations are
+/-1 vectors of length 2N, stored as int8 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Noise variances below this are treated as this value; lets noiseless
# regressions run without dividing by zero.
SIGMA_SQ_FLOOR = 1e-12


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream).

    Streams are independent Philox keys, so workers can own disjoint
    streams (e.g. one per channel realization) and results do not depend
    on how work is distributed.
    """
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, stream]))


@dataclass(frozen=True)
class ComplexChannel:
    """Complex channel matrix, N receive antennas x U single-antenna users."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries, dtype=np.complex128)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError("channel matrix must be 2-D with positive dimensions")
        if not np.all(np.isfinite(h.real)) or not np.all(np.isfinite(h.imag)):
            raise ValueError("channel matrix contains non-finite entries")
        object.__setattr__(self, "entries", h)

    @property
    def n_antennas(self) -> int:
        return self.entries.shape[0]

    @property
    def n_users(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class RealChannel:
    """Real-form channel (2N x 2U) plus the complex-noise variance sigma^2.

    Each real noise component has variance sigma^2 / 2.
    """

    entries: np.ndarray
    noise_variance: float

    def __post_init__(self):
        h = np.asarray(self.entries, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] % 2 or h.shape[1] % 2 or h.size == 0:
            raise ValueError("real channel matrix must be 2-D with even dimensions")
        if not np.all(np.isfinite(h)):
            raise ValueError("real channel matrix contains non-finite entries")
        s2 = float(self.noise_variance)
        if not np.isfinite(s2) or s2 <= 0.0:
            raise ValueError("noise variance must be finite and positive")
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "noise_variance", max(s2, SIGMA_SQ_FLOOR))

    @classmethod
    def from_complex(cls, ch: ComplexChannel, noise_variance: float) -> "RealChannel":
        return cls(expand_real_channel(ch), noise_variance)

    @property
    def n_outputs(self) -> int:
        """Number of real observation dimensions, 2N."""
        return self.entries.shape[0]

    @property
    def n_inputs(self) -> int:
        """Number of real symbol dimensions, 2U."""
        return self.entries.shape[1]

    @property
    def noise_std_per_component(self) -> float:
        return float(np.sqrt(self.noise_variance / 2.0))


@dataclass(frozen=True)
class TapSet:
    """Ordered impulse-response taps of a frequency-selective real channel.

    ``taps[l]`` is the 2N x 2U real matrix of the l-th tap; ``block_len``
    is the number of data symbols per transmission block.
    """

    taps: tuple
    block_len: int

    def __post_init__(self):
        taps = tuple(np.asarray(t, dtype=np.float64) for t in self.taps)
        if len(taps) < 1:
            raise ValueError("tap list must not be empty")
        shape = taps[0].shape
        for t in taps:
            if t.shape != shape or t.ndim != 2:
                raise ValueError("all taps must share the same 2-D shape")
        if self.block_len < 1:
            raise ValueError("block length must be >= 1")
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return len(self.taps)


def expand_real_channel(ch: ComplexChannel) -> np.ndarray:
    """Stack a complex channel into its real 2N x 2U block form
    [[Re, -Im], [Im, Re]]."""
    re, im = ch.entries.real, ch.entries.imag
    return np.block([[re, -im], [im, re]])


def sample_rayleigh_channel(n: int, u: int, rng: np.random.Generator) -> ComplexChannel:
    """Draw an N x U channel with i.i.d. unit-variance circularly-symmetric
    complex Gaussian entries (real/imag parts each have variance 1/2)."""
    if n < 1 or u < 1:
        raise ValueError("channel dimensions must be >= 1")
    scale = np.sqrt(0.5)
    re = rng.standard_normal((n, u)) * scale
    im = rng.standard_normal((n, u)) * scale
    return ComplexChannel(re + 1j * im)


def quantize_sign(v) -> np.ndarray:
    """Elementwise one-bit quantizer: positive and zero map to +1, negative
    to -1."""
    a = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot quantize non-finite values")
    return np.where(a >= 0.0, 1, -1).astype(np.int8)


def transmit_and_quantize(ch: RealChannel, x, rng: np.random.Generator) -> np.ndarray:
    """One channel use: returns sign(H x + z) with z i.i.d. real Gaussian of
    variance sigma^2 / 2 per component."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (ch.n_inputs,):
        raise ValueError(
            f"symbol vector has shape {x.shape}, expected ({ch.n_inputs},)"
        )
    z = rng.standard_normal(ch.n_outputs) * ch.noise_std_per_component
    return quantize_sign(ch.entries @ x + z)


def expand_frequency_selective(t: TapSet) -> np.ndarray:
    """Lower-banded block-Toeplitz expansion of a tapped channel.

    A block transmission of B symbol vectors through an n_taps-tap channel
    is equivalent to one flat channel use with 2UB inputs and
    2N(B + n_taps - 1) outputs; the returned matrix is that flat channel.
    """
    two_n, two_u = t.taps[0].shape
    b, n_taps = t.block_len, t.n_taps
    out = np.zeros((two_n * (b + n_taps - 1), two_u * b))
    for col in range(b):
        for ell in range(n_taps):
            row = col + ell
            out[row * two_n:(row + 1) * two_n, col * two_u:(col + 1) * two_u] = t.taps[ell]
    return out
