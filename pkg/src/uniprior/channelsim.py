"""Monte Carlo simulation of index codes over AWGN and fading channels.

The source encodes a random message vector, maps the coded symbols onto M-PSK
(Gray mapping for binary fields, natural mapping for F_3), and broadcasts.
Each receiver sees its own quasi-static fading coefficient (one per frame) and
its own per-symbol complex Gaussian noise, performs coherent per-symbol ML
detection, then applies its decoding plan to the detected symbols.  Error
counts per (receiver, demand, SNR) are accumulated exactly, using
counter-based RNG streams keyed by (seed, SNR index, block index) so that
results are byte-identical regardless of thread count or schedule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .codegen import LinearCode, DecodingPlan, decoding_plan, design_min_max_code, parse_code
from .enumeration import enumerate_optimal_codes, optimal_length
from .errors import InfeasibleError, ValidationError
from .graphcore import IndexCodingProblem, _as_int

DEFAULT_SEED = 20240
# Trials are simulated in fixed-size blocks; each block owns one RNG stream.
BLOCK_TRIALS = 4096

_MODULATION_ORDERS = (2, 3, 4, 8, 16)
_FADING_KINDS = ("none", "rayleigh", "rician")


@dataclass(frozen=True)
class ChannelConfig:
    """Modulation, fading model, SNR grid, and trial budget for a sweep."""

    modulation: int
    mapping: str
    fading: str
    snr_points_db: tuple[float, ...]
    trials: int
    seed: int = DEFAULT_SEED
    rician_k: float | None = None

    def __post_init__(self):
        if self.modulation not in _MODULATION_ORDERS:
            raise ValidationError(
                f"modulation order must be one of {_MODULATION_ORDERS}, got {self.modulation}"
            )
        expected_mapping = "natural" if self.modulation == 3 else "gray"
        if self.mapping != expected_mapping:
            raise ValidationError(
                f"modulation {self.modulation} requires {expected_mapping!r} mapping, "
                f"got {self.mapping!r}"
            )
        if self.fading not in _FADING_KINDS:
            raise ValidationError(f"fading must be one of {_FADING_KINDS}, got {self.fading!r}")
        if self.fading == "rician":
            if self.rician_k is None or not self.rician_k > 0:
                raise ValidationError("rician fading requires rician_k > 0")
        elif self.rician_k is not None:
            raise ValidationError(f"rician_k only applies to rician fading, got {self.fading!r}")
        if not self.snr_points_db:
            raise ValidationError("snr_db must list at least one SNR point")
        if self.trials < 1:
            raise ValidationError(f"trials must be at least 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 bits")

    @property
    def bits_per_symbol(self) -> int:
        """Code symbols carried per channel symbol (1 for the ternary mapping)."""
        return 1 if self.modulation == 3 else self.modulation.bit_length() - 1

    def field_order(self) -> int:
        return 3 if self.modulation == 3 else 2


@dataclass(frozen=True)
class BepRecord:
    """Estimated error probability for one (receiver, demand) at one SNR."""

    receiver: int
    demand: int
    snr_db: float
    trials: int
    bit_errors: int
    message_errors: int
    bep: float


def config_from_mapping(data) -> ChannelConfig:
    if not isinstance(data, dict):
        raise ValidationError("config document must be a mapping")
    allowed = {"modulation", "mapping", "fading", "snr_db", "trials", "seed", "rician_k"}
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"unknown field(s) {sorted(unknown)} in config document")
    required = {"modulation", "mapping", "fading", "snr_db", "trials"}
    missing = required - set(data)
    if missing:
        raise ValidationError(f"missing field(s) {sorted(missing)} in config document")

    snr = data["snr_db"]
    if not isinstance(snr, list) or not snr:
        raise ValidationError("snr_db must be a non-empty list of dB values")
    points = []
    for value in snr:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"snr_db entries must be numbers, got {value!r}")
        points.append(float(value))

    rician_k = data.get("rician_k")
    if rician_k is not None:
        if isinstance(rician_k, bool) or not isinstance(rician_k, (int, float)):
            raise ValidationError(f"rician_k must be a number, got {rician_k!r}")
        rician_k = float(rician_k)

    mapping = data["mapping"]
    if not isinstance(mapping, str):
        raise ValidationError("mapping must be a string")
    fading = data["fading"]
    if not isinstance(fading, str):
        raise ValidationError("fading must be a string")

    return ChannelConfig(
        modulation=_as_int(data["modulation"], "modulation"),
        mapping=mapping,
        fading=fading,
        snr_points_db=tuple(points),
        trials=_as_int(data["trials"], "trials"),
        seed=_as_int(data.get("seed", DEFAULT_SEED), "seed"),
        rician_k=rician_k,
    )


def parse_config_text(text: str) -> ChannelConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed config document: {exc}") from exc
    return config_from_mapping(data)


def parse_config(path: str | Path) -> ChannelConfig:
    return parse_config_text(Path(path).read_text())


def with_overrides(
    config: ChannelConfig, *, seed: int | None = None, trials: int | None = None
) -> ChannelConfig:
    if seed is not None:
        config = replace(config, seed=seed)
    if trials is not None:
        config = replace(config, trials=trials)
    return config


def _phase_offset(config: ChannelConfig) -> float:
    # Even orders straddle the axes (e.g. 4-PSK points on the diagonals);
    # the ternary constellation keeps a point at angle zero.
    return 0.0 if config.mapping == "natural" else math.pi / config.modulation


def _gray_tables(m: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(m)
    gray = k ^ (k >> 1)
    inverse = np.empty(m, dtype=np.int64)
    inverse[gray] = k
    return gray, inverse


def _unit_constellation(config: ChannelConfig) -> np.ndarray:
    m = config.modulation
    angles = 2.0 * np.pi * np.arange(m) / m + _phase_offset(config)
    return np.exp(1j * angles)


def _symbols_to_points(code_symbols: np.ndarray, config: ChannelConfig) -> np.ndarray:
    """(..., N) code symbols -> (..., S) unit-energy constellation points."""
    m = config.modulation
    const = _unit_constellation(config)
    if config.mapping == "natural":
        if code_symbols.max(initial=0) >= 3 or code_symbols.min(initial=0) < 0:
            raise ValidationError("natural mapping requires symbols in 0..2")
        return const[code_symbols]
    if code_symbols.max(initial=0) >= 2 or code_symbols.min(initial=0) < 0:
        raise ValidationError("Gray M-PSK carries binary code symbols only")
    b = config.bits_per_symbol
    n_trans = code_symbols.shape[-1]
    pad = (-n_trans) % b
    if pad:
        pad_width = [(0, 0)] * (code_symbols.ndim - 1) + [(0, pad)]
        code_symbols = np.pad(code_symbols, pad_width)
    groups = code_symbols.reshape(code_symbols.shape[:-1] + (-1, b))
    weights = 1 << np.arange(b - 1, -1, -1)
    gray_values = groups @ weights
    _, inverse = _gray_tables(m)
    return const[inverse[gray_values]]


def _points_needed(n_transmissions: int, config: ChannelConfig) -> int:
    return -(-n_transmissions // config.bits_per_symbol)


def modulate(code_symbols, config: ChannelConfig, snr_db: float = 0.0) -> np.ndarray:
    """Map code symbols to channel symbols at energy Es = 10^(snr_db/10).

    Binary symbols ride Gray-mapped M-PSK, most significant bit first within
    each channel symbol, with zero bits appended when the symbol count is not
    a multiple of bits-per-symbol; F_3 symbol k maps to the point at angle
    2*pi*k/3.  Noise is unit-variance, so Es/N0 in dB equals snr_db.
    """
    arr = np.asarray(code_symbols, dtype=np.int64)
    amplitude = math.sqrt(10.0 ** (snr_db / 10.0))
    return amplitude * _symbols_to_points(arr, config)


def _draw_fading(rng: np.random.Generator, count: int, config: ChannelConfig) -> np.ndarray:
    """One coefficient per frame.  Draw order is part of the RNG contract."""
    if config.fading == "none":
        return np.ones(count, dtype=np.complex128)
    z = rng.standard_normal((count, 2))
    scattered = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)
    if config.fading == "rayleigh":
        return scattered
    k = config.rician_k
    return math.sqrt(k / (k + 1.0)) + math.sqrt(1.0 / (k + 1.0)) * scattered


def _draw_noise(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def _detect_indices(y: np.ndarray, h: np.ndarray, config: ChannelConfig) -> np.ndarray:
    """Coherent per-symbol ML detection, as constellation indices.

    For PSK, minimizing |y - h s| over the ring is the same as quantizing the
    phase of y * conj(h) to the nearest constellation angle.
    """
    m = config.modulation
    rotated = y * np.conj(h)[..., None]
    step = 2.0 * np.pi / m
    idx = np.rint((np.angle(rotated) - _phase_offset(config)) / step).astype(np.int64)
    return idx % m


def _indices_to_symbols(
    idx: np.ndarray, config: ChannelConfig, n_transmissions: int
) -> np.ndarray:
    """Constellation indices back to code symbols, dropping padding."""
    if config.mapping == "natural":
        return idx[..., :n_transmissions]
    gray, _ = _gray_tables(config.modulation)
    b = config.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    bits = (gray[idx][..., None] >> shifts) & 1
    flat = bits.reshape(idx.shape[:-1] + (-1,))
    return flat[..., :n_transmissions]


def transmit_and_detect(
    symbols, config: ChannelConfig, rng: np.random.Generator, n_transmissions: int | None = None
) -> np.ndarray:
    """Pass channel symbols through fading + noise and hard-detect them.

    symbols has shape (S,) or (frames, S); each frame row gets one fading
    coefficient and independent per-symbol noise.  Returns detected code
    symbols (padding dropped when n_transmissions is given).
    """
    arr = np.asarray(symbols, dtype=np.complex128)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    frames, points = arr.shape
    h = _draw_fading(rng, frames, config)
    noise = _draw_noise(rng, (frames, points))
    y = h[:, None] * arr + noise
    idx = _detect_indices(y, h, config)
    if n_transmissions is None:
        n_transmissions = points * (1 if config.mapping == "natural" else config.bits_per_symbol)
    out = _indices_to_symbols(idx, config, n_transmissions)
    return out[0] if single else out


def _plan_by_receiver(plan: DecodingPlan) -> dict[int, list]:
    grouped: dict[int, list] = {}
    for entry in plan.entries:
        grouped.setdefault(entry.receiver, []).append(entry)
    return grouped


def _run_block(
    problem: IndexCodingProblem,
    code: LinearCode,
    grouped_plan: dict[int, list],
    config: ChannelConfig,
    snr_idx: int,
    block_idx: int,
    block_size: int,
):
    """Simulate one block of trials at one SNR point.

    The RNG stream is keyed by (seed, snr_idx, block_idx) and consumed in a
    fixed order: message draw, then per receiver (ascending) fading then
    noise.  Returns exact integer error counts, so any summation order gives
    identical totals.
    """
    rng = np.random.Generator(
        np.random.Philox(key=config.seed, counter=[0, 0, snr_idx, block_idx])
    )
    q, n = problem.q, problem.n
    n_trans = code.length
    snr_db = config.snr_points_db[snr_idx]
    amplitude = math.sqrt(10.0 ** (snr_db / 10.0))

    messages = rng.integers(0, q, size=(block_size, n), dtype=np.int64)
    code_symbols = messages @ code.matrix() % q
    tx = amplitude * _symbols_to_points(code_symbols, config)

    errors: dict[tuple[int, int], int] = {}
    raw_errors: dict[int, int] = {}
    for receiver in range(1, problem.m + 1):
        h = _draw_fading(rng, block_size, config)
        noise = _draw_noise(rng, tx.shape)
        y = h[:, None] * tx + noise
        idx = _detect_indices(y, h, config)
        detected = _indices_to_symbols(idx, config, n_trans)
        raw_errors[receiver] = int((detected != code_symbols).sum())
        for entry in grouped_plan.get(receiver, []):
            estimate = np.zeros(block_size, dtype=np.int64)
            for msg, coeff in entry.known_terms:
                estimate += coeff * messages[:, msg - 1]
            for col, coeff in entry.code_terms:
                estimate += coeff * detected[:, col - 1]
            estimate %= q
            wrong = int((estimate != messages[:, entry.demand - 1]).sum())
            errors[(receiver, entry.demand)] = wrong
    return errors, raw_errors


def simulate_bep(
    problem: IndexCodingProblem,
    code: LinearCode,
    plan: DecodingPlan,
    config: ChannelConfig,
    *,
    threads: int = 1,
    return_raw: bool = False,
):
    """Estimate per-(receiver, demand) error probability at each SNR point.

    Returns BepRecords ordered by (SNR point, receiver, demand).  With
    return_raw=True, also returns {(snr_idx, receiver): raw transmission
    errors} with denominator trials * code length, for checking measured
    per-transmission error rates against the closed-form combination law.
    """
    if config.field_order() != problem.q:
        raise ValidationError(
            f"modulation {config.modulation} carries F_{config.field_order()} symbols "
            f"but the problem is over F_{problem.q}"
        )
    if plan.code != code:
        raise ValidationError("decoding plan was built for a different code")
    if code.length == 0:
        raise ValidationError("cannot simulate a code with no transmissions")

    grouped = _plan_by_receiver(plan)
    tasks = []
    for snr_idx in range(len(config.snr_points_db)):
        remaining = config.trials
        block_idx = 0
        while remaining > 0:
            size = min(BLOCK_TRIALS, remaining)
            tasks.append((snr_idx, block_idx, size))
            remaining -= size
            block_idx += 1

    def run(task):
        snr_idx, block_idx, size = task
        return task, _run_block(problem, code, grouped, config, snr_idx, block_idx, size)

    results = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    error_totals: dict[tuple[int, int, int], int] = {}
    raw_totals: dict[tuple[int, int], int] = {}
    for (snr_idx, _block, _size), (errors, raw_errors) in results:
        for (receiver, demand), count in errors.items():
            key = (snr_idx, receiver, demand)
            error_totals[key] = error_totals.get(key, 0) + count
        for receiver, count in raw_errors.items():
            key2 = (snr_idx, receiver)
            raw_totals[key2] = raw_totals.get(key2, 0) + count

    records = []
    for snr_idx, snr_db in enumerate(config.snr_points_db):
        for receiver, demand in problem.demands():
            wrong = error_totals.get((snr_idx, receiver, demand), 0)
            records.append(
                BepRecord(
                    receiver=receiver,
                    demand=demand,
                    snr_db=snr_db,
                    trials=config.trials,
                    bit_errors=wrong,
                    message_errors=wrong,
                    bep=wrong / config.trials,
                )
            )
    if return_raw:
        return records, raw_totals
    return records


def resolve_code_selector(problem: IndexCodingProblem, selector: str) -> LinearCode:
    """Turn a code selector into a code: alg2 | matrix:<path> | enum:<index>."""
    if selector == "alg2":
        return design_min_max_code(problem).code
    if selector.startswith("matrix:"):
        path = selector[len("matrix:") :]
        if not path:
            raise ValidationError("matrix: selector needs a file path")
        return parse_code(path)
    if selector.startswith("enum:"):
        text = selector[len("enum:") :]
        try:
            wanted = int(text)
        except ValueError:
            raise ValidationError(f"enum: selector needs an integer index, got {text!r}") from None
        if wanted < 1:
            raise ValidationError("enum: index is 1-based")
        length = optimal_length(problem)
        for index, code in enumerate(enumerate_optimal_codes(problem, length), start=1):
            if index == wanted:
                return code
        raise ValidationError(f"enum: index {wanted} exceeds the number of optimal codes")
    raise ValidationError(
        f"unknown code selector {selector!r}; expected alg2, matrix:<path>, or enum:<index>"
    )


def _config_summary(config: ChannelConfig) -> str:
    snr = ":".join(f"{v:g}" for v in config.snr_points_db)
    parts = [
        f"modulation={config.modulation}",
        f"mapping={config.mapping}",
        f"fading={config.fading}",
    ]
    if config.rician_k is not None:
        parts.append(f"rician_k={config.rician_k:g}")
    parts.append(f"snr_db={snr}")
    parts.append(f"trials={config.trials}")
    return ",".join(parts)


def records_to_csv(
    records, config: ChannelConfig, code: LinearCode, code_label: str = "code"
) -> str:
    """CSV with reproducibility header comments: seed, config, code hash."""
    lines = [
        f"# seed={config.seed}",
        f"# config={_config_summary(config)}",
        f"# code={code_label} sha256={code.code_hash()}",
        "receiver,demand,snr_db,trials,bit_errors,bep",
    ]
    for rec in records:
        lines.append(
            f"{rec.receiver},{rec.demand},{rec.snr_db:g},{rec.trials},"
            f"{rec.bit_errors},{rec.bep:.10g}"
        )
    return "\n".join(lines) + "\n"


def sweep(
    problem: IndexCodingProblem,
    code_selector,
    config: ChannelConfig,
    *,
    threads: int = 1,
) -> str:
    """End-to-end: resolve code, build plan, simulate, render CSV."""
    if isinstance(code_selector, LinearCode):
        code = code_selector
        label = "custom"
    else:
        code = resolve_code_selector(problem, code_selector)
        label = code_selector
    plan = decoding_plan(code, problem)
    records = simulate_bep(problem, code, plan, config, threads=threads)
    return records_to_csv(records, config, code, code_label=label)
