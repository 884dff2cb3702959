"""Seeded Monte-Carlo experiments and their CSV/JSON records.

Every experiment draws channels and noise from counter-based generator
streams keyed by (seed, channel index), so results are bit-identical no
matter how many worker processes share the channel loop. Within one
trial all selected detectors see the same observation (common random
numbers), which is what makes the loss-versus-miss accounting of the
sphere decoder a well-defined joint event.

SNR convention: snr_db = 10 * log10(1 / sigma^2) per user, i.e.
sigma^2 = 10 ** (-snr_db / 10) with unit-power symbols.
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import dataclass
from functools import partial

import numpy as np

from .analysis import ComplexityQuery, SepBoundInputs, complexity_model, sep_bound
from .channel import RealChannel, quantize_sign, sample_rayleigh_channel, stream_rng
from .codebook import Codebook, build_codebook, enumerate_symbol_vectors, make_constellation
from .detectors import (
    SphereConfig,
    assemble_list,
    build_sphere_table,
    distance_affine,
    loglik_affine,
    _mismatch_affine,
)
from .weights import compute_weights_approx, compute_weights_exact

DETECTOR_NAMES = ("mld", "mwd-exact", "mwd", "mwd-hs", "osd")

CSV_COLUMNS = (
    "detector",
    "snr_db",
    "channels",
    "trials",
    "errors",
    "rate",
    "mean_list_len",
    "distance_evals",
    "seed",
)

# Dense trial x codeword membership masks are used when the pattern
# table is small enough; otherwise candidate lists are assembled per
# trial.
_DENSE_MEMBER_LIMIT = 1 << 26


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


def snr_db_to_sigma_sq(snr_db: float) -> float:
    return 10.0 ** (-float(snr_db) / 10.0)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial rate; sane near 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def resolve_workers(requested: int | None = None) -> int:
    """Worker count; the OBDK_THREADS environment variable overrides."""
    env = os.environ.get("OBDK_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"OBDK_THREADS must be an integer, got {env!r}") from exc
    return max(1, int(requested) if requested else 1)


@dataclass(frozen=True)
class ExperimentConfig:
    users: int
    antennas: int
    modulation: str = "qam4"
    snr_db: tuple = (0.0, 5.0, 10.0)
    detectors: tuple = ("mld", "mwd")
    n_sub: int | None = None
    list_size: int | None = None
    list_sizes: tuple | None = None
    trials: int = 10_000
    channels: int = 100
    seed: int = 0
    time_slots: int = 4096
    workers: int = 1
    out: str | None = None
    fmt: str = "csv"


@dataclass
class ExperimentRecord:
    """One aggregated measurement row; ``rate`` is the SER (or list-miss
    rate / loss rate / clamped bound, depending on the experiment)."""

    detector: str
    snr_db: float
    channels: int
    trials: int
    errors: int
    rate: float
    mean_list_len: float
    distance_evals: int
    seed: int
    wall_ns: int = 0
    rel_ser: float | None = None
    rel_complexity: float | None = None

    def output_fields(self) -> dict:
        # wall_ns is runtime diagnostics only; keeping it out of the
        # serialized row makes equal-seed outputs byte-identical.
        out = {
            "detector": self.detector,
            "snr_db": float(self.snr_db),
            "channels": self.channels,
            "trials": self.trials,
            "errors": self.errors,
            "rate": float(self.rate),
            "mean_list_len": float(self.mean_list_len),
            "distance_evals": self.distance_evals,
            "seed": self.seed,
        }
        if self.rel_ser is not None:
            out["rel_ser"] = float(self.rel_ser)
        if self.rel_complexity is not None:
            out["rel_complexity"] = float(self.rel_complexity)
        return out


def _check_common(cfg: ExperimentConfig) -> None:
    if cfg.users < 1 or cfg.antennas < 1:
        raise ConfigError("--users and --antennas must be >= 1")
    if cfg.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if cfg.channels < 1:
        raise ConfigError("--channels must be >= 1")
    if not cfg.snr_db:
        raise ConfigError("--snr-db must list at least one value")
    if cfg.modulation not in ("bpsk", "qam4", "qam16"):
        raise ConfigError(f"unsupported --mod value: {cfg.modulation!r}")


def _check_osd_params(cfg: ExperimentConfig) -> None:
    if cfg.n_sub is None:
        raise ConfigError("--ns is required when the sphere decoder is selected")
    if cfg.list_size is None:
        raise ConfigError("--list-size is required when the sphere decoder is selected")


def validate_ser_config(cfg: ExperimentConfig) -> None:
    _check_common(cfg)
    if not cfg.detectors:
        raise ConfigError("--detectors must list at least one detector")
    unknown = [d for d in cfg.detectors if d not in DETECTOR_NAMES]
    if unknown:
        raise ConfigError(f"unknown detector(s): {', '.join(unknown)}")
    if "osd" in cfg.detectors:
        _check_osd_params(cfg)
    elif cfg.n_sub is not None or cfg.list_size is not None:
        raise ConfigError("--ns/--list-size are only valid when 'osd' is selected")


def validate_sep_config(cfg: ExperimentConfig) -> None:
    _check_common(cfg)
    _check_osd_params(cfg)


def validate_tradeoff_config(cfg: ExperimentConfig) -> None:
    _check_common(cfg)
    if cfg.n_sub is None:
        raise ConfigError("--ns is required for the tradeoff sweep")
    if not cfg.list_sizes:
        raise ConfigError("--list-sizes must list at least one value")


def _channel_setup(cfg: ExperimentConfig, channel_index: int):
    """Channel draw plus codebook for one realization; the returned rng
    continues the same stream for the trial noise."""
    rng = stream_rng(cfg.seed, channel_index)
    hbar = sample_rayleigh_channel(cfg.antennas, cfg.users, rng)
    constellation = make_constellation(cfg.modulation)
    table = enumerate_symbol_vectors(constellation, cfg.users)
    # Codeword signs do not depend on the noise level; any variance works here.
    ch0 = RealChannel.from_complex(hbar, 1.0)
    cb = build_codebook(ch0, table)
    return rng, ch0.entries, cb


def _draw_observations(cfg, rng, h_entries, cb, sigma_sq):
    ks = rng.integers(0, cb.size, size=cfg.trials)
    noise = rng.standard_normal((cfg.trials, h_entries.shape[0])) * np.sqrt(sigma_sq / 2.0)
    obs = quantize_sign(cb.symbols.vectors[ks] @ h_entries.T + noise)
    return ks, obs


def _osd_batch(cb: Codebook, ws, sphere: SphereConfig, obs_f: np.ndarray, dists: np.ndarray):
    """Sphere-decode a batch: (winner indices, per-trial list length,
    true-index membership test array shape (T, K))."""
    table = build_sphere_table(cb, ws, sphere)
    n_patterns = 1 << table.n_sub
    trials = obs_f.shape[0]
    if n_patterns * cb.size <= _DENSE_MEMBER_LIMIT:
        members = np.zeros((trials, cb.size), dtype=bool)
        weights_bits = 1 << np.arange(table.n_sub, dtype=np.int64)
        for g in range(table.group_count):
            cols = slice(g * table.n_sub, (g + 1) * table.n_sub)
            pats = ((1 - obs_f[:, cols].astype(np.int64)) // 2) @ weights_bits
            group_members = np.zeros((n_patterns, cb.size), dtype=bool)
            np.put_along_axis(group_members, table.indices[g].astype(np.int64), True, axis=1)
            members |= group_members[pats]
        masked = np.where(members, dists, np.inf)
        winners = np.argmin(masked, axis=1)
        return winners, members.sum(axis=1), members
    winners = np.empty(trials, dtype=np.int64)
    members = np.zeros((trials, cb.size), dtype=bool)
    for t in range(trials):
        cand = assemble_list(obs_f[t].astype(np.int8), table)
        members[t, cand] = True
        winners[t] = cand[np.argmin(dists[t, cand])]
    return winners, members.sum(axis=1), members


def _ser_channel(cfg: ExperimentConfig, channel_index: int) -> dict:
    rng, h_entries, cb = _channel_setup(cfg, channel_index)
    out = {}
    for snr in cfg.snr_db:
        sigma_sq = snr_db_to_sigma_sq(snr)
        ch = RealChannel(h_entries, sigma_sq)
        ks, obs = _draw_observations(cfg, rng, ch.entries, cb, sigma_sq)
        obs_f = obs.astype(np.float64)

        ws_exact = ws_approx = None
        if "mwd-exact" in cfg.detectors:
            ws_exact = compute_weights_exact(ch, cb.symbols)
        if any(d in cfg.detectors for d in ("mwd", "mwd-hs", "osd")):
            ws_approx = compute_weights_approx(ch, cb.symbols)

        dists_approx = None
        if ws_approx is not None:
            base, coef = distance_affine(cb, ws_approx)
            dists_approx = base[None, :] - obs_f @ coef.T

        for det in cfg.detectors:
            if det == "mld":
                base, coef = loglik_affine(cb, ch)
                winners = np.argmax(base[None, :] + obs_f @ coef.T, axis=1)
                lens, evals = None, cfg.trials * cb.size
            elif det == "mwd-exact":
                base, coef = distance_affine(cb, ws_exact)
                winners = np.argmin(base[None, :] - obs_f @ coef.T, axis=1)
                lens, evals = None, cfg.trials * cb.size
            elif det == "mwd":
                winners = np.argmin(dists_approx, axis=1)
                lens, evals = None, cfg.trials * cb.size
            elif det == "mwd-hs":
                base, coef = _mismatch_affine(cb, ws_approx)
                winners = np.argmin(base[None, :] - obs_f @ coef.T, axis=1)
                lens, evals = None, cfg.trials * cb.size
            else:
                sphere = SphereConfig(cfg.n_sub, cfg.list_size)
                winners, lens, _ = _osd_batch(cb, ws_approx, sphere, obs_f, dists_approx)
                evals = int(lens.sum())
            out[(det, snr)] = {
                "errors": int(np.count_nonzero(winners != ks)),
                "list_sum": int(lens.sum()) if lens is not None else cfg.trials * cb.size,
                "evals": evals,
            }
    return out


def _sep_channel(cfg: ExperimentConfig, channel_index: int) -> dict:
    rng, h_entries, cb = _channel_setup(cfg, channel_index)
    sphere = SphereConfig(cfg.n_sub, cfg.list_size)
    out = {}
    for snr in cfg.snr_db:
        sigma_sq = snr_db_to_sigma_sq(snr)
        ch = RealChannel(h_entries, sigma_sq)
        ks, obs = _draw_observations(cfg, rng, ch.entries, cb, sigma_sq)
        obs_f = obs.astype(np.float64)
        ws = compute_weights_approx(ch, cb.symbols)
        base, coef = distance_affine(cb, ws)
        dists = base[None, :] - obs_f @ coef.T
        mwd_winners = np.argmin(dists, axis=1)
        osd_winners, lens, members = _osd_batch(cb, ws, sphere, obs_f, dists)
        in_list = members[np.arange(cfg.trials), ks]
        bound = sep_bound(SepBoundInputs.build(cb, ws, sphere))
        out[snr] = {
            "misses": int(np.count_nonzero(~in_list)),
            "losses": int(np.count_nonzero((mwd_winners == ks) & (osd_winners != ks))),
            "list_sum": int(lens.sum()),
            "evals": int(lens.sum()),
            "bound": float(min(1.0, max(0.0, bound))),
        }
    return out


def _tradeoff_channel(cfg: ExperimentConfig, channel_index: int) -> dict:
    rng, h_entries, cb = _channel_setup(cfg, channel_index)
    out = {}
    for snr in cfg.snr_db:
        sigma_sq = snr_db_to_sigma_sq(snr)
        ch = RealChannel(h_entries, sigma_sq)
        ks, obs = _draw_observations(cfg, rng, ch.entries, cb, sigma_sq)
        obs_f = obs.astype(np.float64)
        base, coef = loglik_affine(cb, ch)
        mld_winners = np.argmax(base[None, :] + obs_f @ coef.T, axis=1)
        ws = compute_weights_approx(ch, cb.symbols)
        dbase, dcoef = distance_affine(cb, ws)
        dists = dbase[None, :] - obs_f @ dcoef.T
        per_l = {}
        for lsz in cfg.list_sizes:
            winners, lens, _ = _osd_batch(cb, ws, SphereConfig(cfg.n_sub, lsz), obs_f, dists)
            per_l[lsz] = {
                "errors": int(np.count_nonzero(winners != ks)),
                "list_sum": int(lens.sum()),
            }
        out[snr] = {"mld_errors": int(np.count_nonzero(mld_winners != ks)), "per_l": per_l}
    return out


def _map_channels(worker, cfg: ExperimentConfig):
    """Run the per-channel worker over all channel indices, in order."""
    if cfg.workers <= 1:
        return [worker(cfg, ci) for ci in range(cfg.channels)]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(partial(worker, cfg), range(cfg.channels)))


def run_ser_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Paired symbol-error-rate sweep; one record per (detector, SNR)."""
    validate_ser_config(cfg)
    t0 = time.perf_counter_ns()
    partials = _map_channels(_ser_channel, cfg)
    wall = time.perf_counter_ns() - t0
    n = cfg.trials * cfg.channels
    records = []
    for det in cfg.detectors:
        for snr in cfg.snr_db:
            cells = [p[(det, snr)] for p in partials]
            errors = sum(c["errors"] for c in cells)
            list_sum = sum(c["list_sum"] for c in cells)
            evals = sum(c["evals"] for c in cells)
            records.append(
                ExperimentRecord(
                    det, float(snr), cfg.channels, cfg.trials, errors, errors / n,
                    list_sum / n, evals, cfg.seed, wall,
                )
            )
    return records


def run_sep_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """List-miss rate, loss rate, and the analytic bound, side by side.

    Emits rows labelled ``sep`` (true index missing from the list),
    ``p_loss`` (sphere decoder wrong while full search is right on the
    same observation), and ``bound`` (channel-averaged analytic bound,
    clamped to [0, 1]).
    """
    validate_sep_config(cfg)
    t0 = time.perf_counter_ns()
    partials = _map_channels(_sep_channel, cfg)
    wall = time.perf_counter_ns() - t0
    n = cfg.trials * cfg.channels
    records = []
    for snr in cfg.snr_db:
        cells = [p[snr] for p in partials]
        misses = sum(c["misses"] for c in cells)
        losses = sum(c["losses"] for c in cells)
        list_sum = sum(c["list_sum"] for c in cells)
        evals = sum(c["evals"] for c in cells)
        mean_bound = sum(c["bound"] for c in cells) / cfg.channels
        mean_len = list_sum / n
        records.append(
            ExperimentRecord("sep", float(snr), cfg.channels, cfg.trials, misses,
                             misses / n, mean_len, evals, cfg.seed, wall)
        )
        records.append(
            ExperimentRecord("p_loss", float(snr), cfg.channels, cfg.trials, losses,
                             losses / n, mean_len, evals, cfg.seed, wall)
        )
        records.append(
            ExperimentRecord("bound", float(snr), cfg.channels, 0, 0,
                             mean_bound, 0.0, 0, cfg.seed, wall)
        )
    return records


def run_tradeoff_sweep(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """SER and complexity of the sphere decoder relative to full-search
    maximum likelihood, for each configured list size.

    Sphere-decoder rows carry ``rel_ser`` = SER(mld) / SER(osd) and
    ``rel_complexity`` = (preprocessing + detection) multiplications of
    the sphere decoder over the maximum-likelihood detection count
    (JSON output only; the CSV keeps the fixed column set).
    """
    validate_tradeoff_config(cfg)
    t0 = time.perf_counter_ns()
    partials = _map_channels(_tradeoff_channel, cfg)
    wall = time.perf_counter_ns() - t0
    n = cfg.trials * cfg.channels
    k_total = make_constellation(cfg.modulation).size ** cfg.users
    _, mld_mults = complexity_model(
        ComplexityQuery("mld", cfg.users, cfg.antennas, k_total, cfg.time_slots)
    )
    records = []
    for snr in cfg.snr_db:
        mld_errors = sum(p[snr]["mld_errors"] for p in partials)
        records.append(
            ExperimentRecord("mld", float(snr), cfg.channels, cfg.trials, mld_errors,
                             mld_errors / n, float(k_total), n * k_total, cfg.seed, wall)
        )
        for lsz in cfg.list_sizes:
            errors = sum(p[snr]["per_l"][lsz]["errors"] for p in partials)
            list_sum = sum(p[snr]["per_l"][lsz]["list_sum"] for p in partials)
            pre, det = complexity_model(
                ComplexityQuery("osd", cfg.users, cfg.antennas, k_total, cfg.time_slots,
                                n_sub=cfg.n_sub, list_size=lsz)
            )
            records.append(
                ExperimentRecord(
                    f"osd-l{lsz}", float(snr), cfg.channels, cfg.trials, errors,
                    errors / n, list_sum / n, list_sum, cfg.seed, wall,
                    rel_ser=(mld_errors / errors) if errors else None,
                    rel_complexity=(pre + det) / mld_mults,
                )
            )
    return records


def _fmt_number(x) -> str:
    return repr(float(x))


def records_to_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                (
                    r.detector,
                    _fmt_number(r.snr_db),
                    str(r.channels),
                    str(r.trials),
                    str(r.errors),
                    _fmt_number(r.rate),
                    _fmt_number(r.mean_list_len),
                    str(r.distance_evals),
                    str(r.seed),
                )
            )
        )
    return "\n".join(lines) + "\n"


def records_to_json(records) -> str:
    return json.dumps([r.output_fields() for r in records], indent=2) + "\n"


def write_records(records, out: str | None, fmt: str = "csv") -> None:
    text = records_to_csv(records) if fmt == "csv" else records_to_json(records)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
