"""Reproducible Monte Carlo estimation of the expected ranging bound.

Design notes, shared by every estimator here:

* Symbol draws come from counter-based streams keyed by (seed, trial), so a
  trial index identifies one symbol vector regardless of execution order,
  thread count, or which waveforms consume it. Sweeps evaluate all
  waveforms on the same streams, making every cross-waveform comparison a
  paired difference.
* Trials are processed in fixed-size chunks. Per-draw FIMs are assembled
  with one matrix product against the precomputed per-bin FIM stack, then
  handed to the batched eigendecomposition kernel, which returns the
  selected trace of the inverse and the eigenvalue ratio per draw.
* Draws whose eigenvalue ratio falls below the singularity threshold are
  skipped and counted, which conditions the estimate on the invertible
  event. The strict policy aborts instead.
* The FIM is linear in 1/noise_var while the skip decision is scale
  invariant, so one eigendecomposition per (draw, waveform) serves an
  entire SNR grid: values are computed at unit noise and rescaled.
* Statistics are folded in trial order with Welford-style combining, so
  results are a pure function of (inputs, seed).

The assembly product is always issued at the full chunk height (short
final chunks are padded with a repeated row and sliced afterwards). BLAS
row results then depend only on the row content, which keeps analytically
constant estimates (frequency-localized basis with constant-modulus
symbols) bitwise constant across trials, with exactly zero spread.
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .constellation import Constellation, sample_symbols
from .errors import (
    InvalidParameterError,
    NoValidDrawsError,
    SingularFimError,
)
from .linalg import RCOND_SINGULAR
from .rngstream import DOMAIN_BULK, stream
from .scenario import Geometry, Scenario, SelectionMatrix, build_geometry
from .waveform import UnitaryBasis

CHUNK_TRIALS = 4096

_ENUMERATION_CAP = 1 << 20


@dataclass(frozen=True)
class CrbEstimate:
    """Monte Carlo estimate of the expected conditional bound."""

    mean: float
    stderr: float
    trials_used: int
    trials_skipped: int
    jensen: float
    skip_policy: str
    seed: int


@dataclass(frozen=True)
class SweepRow:
    """One (SNR, waveform) cell of a sweep."""

    snr_db: float
    waveform: str
    constellation: str
    crb_mc: float
    crb_jensen: float
    stderr: float
    trials_used: int
    trials_skipped: int


@dataclass(frozen=True)
class PairedDelta:
    """Paired mean difference of a waveform against the reference waveform."""

    snr_db: float
    waveform: str
    reference: str
    delta_mean: float
    delta_stderr: float
    trials_common: int


@dataclass(frozen=True)
class ZMomentPoint:
    n: int
    moment: float
    stderr: float


@dataclass(frozen=True)
class ZScalingReport:
    """Fluctuation-norm moments across block lengths with a log-log slope."""

    moment_order: int
    points: tuple
    slope: float


def stream_stats(values: np.ndarray) -> tuple[int, float, float]:
    """(count, mean, stderr) over the finite entries of ``values``.

    Chunks are folded in fixed order. Bitwise-identical samples short
    circuit to a spread of exactly zero.
    """
    finite = values[np.isfinite(values)]
    count = int(finite.size)
    if count == 0:
        return 0, math.nan, math.nan
    if np.all(finite == finite[0]):
        return count, float(finite[0]), 0.0
    total = 0
    mean = 0.0
    m2 = 0.0
    for start in range(0, count, CHUNK_TRIALS):
        v = finite[start : start + CHUNK_TRIALS]
        cn = v.size
        cmean = float(v.mean())
        cm2 = float(np.sum((v - cmean) ** 2))
        delta = cmean - mean
        new_total = total + cn
        m2 += cm2 + delta * delta * total * cn / new_total
        mean += delta * cn / new_total
        total = new_total
    stderr = math.sqrt(m2 / (total - 1) / total) if total > 1 else 0.0
    return total, mean, stderr


def _pad_rows(block: np.ndarray) -> np.ndarray:
    """Pad a (b, k) block to CHUNK_TRIALS rows by repeating the last row."""
    b = block.shape[0]
    if b == CHUNK_TRIALS:
        return block
    pad = np.repeat(block[-1:], CHUNK_TRIALS - b, axis=0)
    return np.concatenate([block, pad], axis=0)


def _unit_noise_geometry(scenario: Scenario) -> tuple[Geometry, np.ndarray]:
    geom = build_geometry(replace(scenario, noise_var=1.0))
    flat = geom.bin_fims.reshape(scenario.n, -1)
    return geom, flat


def symbol_chunks(c: Constellation, n: int, seed: int, trials: int):
    """Yield (start, symbol block) pairs over the per-trial streams."""
    for start in range(0, trials, CHUNK_TRIALS):
        count = min(CHUNK_TRIALS, trials - start)
        block = np.empty((count, n), dtype=np.complex128)
        for i in range(count):
            block[i] = sample_symbols(c, n, seed, start + i).symbols
        yield start, block


def bin_weight_block(symbols: np.ndarray, basis: UnitaryBasis) -> np.ndarray:
    """Per-bin powers |spectrum @ s|^2 for a block of symbol rows."""
    spec = symbols @ basis.spectrum.T
    return spec.real**2 + spec.imag**2


def assemble_fims(weight_block: np.ndarray, flat_bin_fims: np.ndarray) -> np.ndarray:
    """Stack of per-draw FIMs from a block of per-bin weights."""
    b = weight_block.shape[0]
    dim = int(round(math.sqrt(flat_bin_fims.shape[1])))
    stacked = _pad_rows(weight_block) @ flat_bin_fims
    return stacked[:b].reshape(b, dim, dim)


def _trial_values(
    scenario: Scenario,
    bases: list,
    c: Constellation,
    t: SelectionMatrix,
    trials: int,
    seed: int,
    threads=None,
) -> tuple[list, list, float]:
    """Unit-noise per-trial bound values for each basis on shared streams.

    Returns (values per basis, rcond per basis, unit-noise Jensen value).
    Values are NaN for skipped draws; multiply by noise_var for the bound
    at a given noise level.
    """
    _, flat = _unit_noise_geometry(scenario)
    n = scenario.n
    for basis in bases:
        if basis.n != n:
            raise InvalidParameterError(
                f"basis {basis.kind!r} has size {basis.n}, scenario has n={n}"
            )
    # The expected FIM is the all-ones weight case of the same assembly
    # pipeline the trials use, so exactly-constant draws reproduce the
    # Jensen value bit for bit.
    jensen_stack = assemble_fims(np.ones((1, n)), flat)
    jensen_vals, _ = _kernels.eig_crb_batch(jensen_stack, t.indices, 0.0, threads)
    jensen_unit = float(jensen_vals[0])

    vals = [np.empty(trials) for _ in bases]
    rconds = [np.empty(trials) for _ in bases]
    for start, symbols in symbol_chunks(c, n, seed, trials):
        stop = start + symbols.shape[0]
        for bi, basis in enumerate(bases):
            weights = bin_weight_block(symbols, basis)
            jstack = assemble_fims(weights, flat)
            v, rc = _kernels.eig_crb_batch(jstack, t.indices, RCOND_SINGULAR, threads)
            vals[bi][start:stop] = v
            rconds[bi][start:stop] = rc
    return vals, rconds, jensen_unit


def _finalize_estimate(
    values: np.ndarray, jensen: float, trials: int, seed: int, skip_policy: str
) -> CrbEstimate:
    if skip_policy not in ("skip", "strict"):
        raise InvalidParameterError(f"unknown skip policy {skip_policy!r}")
    used, mean, stderr = stream_stats(values)
    skipped = trials - used
    if skip_policy == "strict" and skipped > 0:
        raise SingularFimError(
            f"strict skip policy: {skipped} singular draw(s) encountered", 0.0
        )
    if used == 0:
        raise NoValidDrawsError("every draw produced a singular FIM")
    return CrbEstimate(
        mean=mean,
        stderr=stderr,
        trials_used=used,
        trials_skipped=skipped,
        jensen=jensen,
        skip_policy=skip_policy,
        seed=seed,
    )


def estimate_crb(
    scenario: Scenario,
    basis: UnitaryBasis,
    c: Constellation,
    t: SelectionMatrix,
    trials: int,
    seed: int,
    skip_policy: str = "skip",
    threads=None,
) -> CrbEstimate:
    """Mean and spread of the conditional bound over symbol draws.

    Skipped (singular) draws are excluded and counted, conditioning the
    estimate on the invertible event. The result is a pure function of the
    arguments; thread count only affects speed.
    """
    if trials < 1:
        raise InvalidParameterError("at least one trial is required")
    vals, _, jensen_unit = _trial_values(scenario, [basis], c, t, trials, seed, threads)
    noise = scenario.noise_var
    return _finalize_estimate(
        noise * vals[0], noise * jensen_unit, trials, seed, skip_policy
    )


def enumerate_crb(
    scenario: Scenario, basis: UnitaryBasis, c: Constellation, t: SelectionMatrix
) -> CrbEstimate:
    """Exact expectation over every symbol vector of the alphabet.

    Only feasible for tiny alphabets and block lengths (the draw count is
    order**n); used as the exhaustive oracle for the sampling estimator.
    """
    n = scenario.n
    total = c.order**n
    if total > _ENUMERATION_CAP:
        raise InvalidParameterError(
            f"enumeration of {total} draws exceeds the cap of {_ENUMERATION_CAP}"
        )
    _, flat = _unit_noise_geometry(scenario)
    jensen_stack = assemble_fims(np.ones((1, n)), flat)
    jensen_vals, _ = _kernels.eig_crb_batch(jensen_stack, t.indices, 0.0, None)
    jensen_unit = float(jensen_vals[0])

    values = np.empty(total)
    digits = c.order ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, CHUNK_TRIALS):
        stop = min(start + CHUNK_TRIALS, total)
        codes = np.arange(start, stop, dtype=np.int64)
        idx = (codes[:, None] // digits[None, :]) % c.order
        symbols = c.points[idx]
        weights = bin_weight_block(symbols, basis)
        jstack = assemble_fims(weights, flat)
        v, _ = _kernels.eig_crb_batch(jstack, t.indices, RCOND_SINGULAR, None)
        values[start:stop] = v
    noise = scenario.noise_var
    return _finalize_estimate(noise * values, noise * jensen_unit, total, 0, "skip")


def _snr_to_noise_var(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def snr_sweep_paired(
    scenario: Scenario,
    bases: list,
    c: Constellation,
    t: SelectionMatrix,
    snr_grid_db,
    trials: int,
    seed: int,
    skip_policy: str = "skip",
    threads=None,
) -> tuple[list, list]:
    """Sweep all (SNR, waveform) cells on shared symbol streams.

    The scenario's targets are held fixed across the grid; only the noise
    power changes with SNR (bound values scale linearly, skip decisions do
    not change). Returns the rows sorted by (snr_db, waveform) plus paired
    per-trial differences of every waveform against the reference (the
    first frequency-localized basis in the list, else the first basis).

    Raises NoValidDrawsError naming the cell if some cell has no usable
    draws.
    """
    grid = [float(s) for s in snr_grid_db]
    if not grid:
        raise InvalidParameterError("SNR grid must be nonempty")
    if len({b.kind for b in bases}) != len(bases):
        raise InvalidParameterError("waveform kinds must be distinct within a sweep")
    vals, _, jensen_unit = _trial_values(scenario, bases, c, t, trials, seed, threads)

    ref_idx = next((i for i, b in enumerate(bases) if b.kind == "ofdm"), 0)
    rows = []
    deltas = []
    for snr in grid:
        noise = _snr_to_noise_var(snr)
        for bi, basis in enumerate(bases):
            try:
                est = _finalize_estimate(
                    noise * vals[bi], noise * jensen_unit, trials, seed, skip_policy
                )
            except (NoValidDrawsError, SingularFimError) as exc:
                raise NoValidDrawsError(
                    f"cell (snr={snr} dB, waveform={basis.kind}): {exc}"
                ) from exc
            rows.append(
                SweepRow(
                    snr_db=snr,
                    waveform=basis.kind,
                    constellation=c.name,
                    crb_mc=est.mean,
                    crb_jensen=est.jensen,
                    stderr=est.stderr,
                    trials_used=est.trials_used,
                    trials_skipped=est.trials_skipped,
                )
            )
            if bi != ref_idx:
                diff = noise * (vals[bi] - vals[ref_idx])
                common, dmean, dstderr = stream_stats(diff)
                deltas.append(
                    PairedDelta(
                        snr_db=snr,
                        waveform=basis.kind,
                        reference=bases[ref_idx].kind,
                        delta_mean=dmean,
                        delta_stderr=dstderr,
                        trials_common=common,
                    )
                )
    rows.sort(key=lambda r: (r.snr_db, r.waveform))
    deltas.sort(key=lambda d: (d.snr_db, d.waveform))
    return rows, deltas


def snr_sweep(
    scenario: Scenario,
    bases: list,
    c: Constellation,
    t: SelectionMatrix,
    snr_grid_db,
    trials: int,
    seed: int,
    skip_policy: str = "skip",
    threads=None,
) -> list:
    """Sweep rows only (see snr_sweep_paired)."""
    rows, _ = snr_sweep_paired(
        scenario, bases, c, t, snr_grid_db, trials, seed, skip_policy, threads
    )
    return rows


def empirical_sigma_s(
    basis: UnitaryBasis, c: Constellation, samples: int, seed: int
) -> np.ndarray:
    """Sample covariance of the per-bin power vector |spectrum @ s|^2.

    Draws come from bulk streams keyed by (seed, chunk); accumulation runs
    in fixed chunk order, so the result depends only on (basis, c, samples,
    seed).
    """
    if samples < 2:
        raise InvalidParameterError("need at least two samples for a covariance")
    n = basis.n
    sum_w = np.zeros(n)
    sum_outer = np.zeros((n, n))
    done = 0
    chunk_index = 0
    while done < samples:
        count = min(CHUNK_TRIALS, samples - done)
        rng = stream(seed, DOMAIN_BULK, chunk_index)
        idx = rng.integers(0, c.order, size=(count, n))
        weights = bin_weight_block(c.points[idx], basis)
        sum_w += weights.sum(axis=0)
        sum_outer += weights.T @ weights
        done += count
        chunk_index += 1
    mean = sum_w / samples
    return (sum_outer - samples * np.outer(mean, mean)) / (samples - 1)


def z_moment_scaling(
    template: Scenario,
    basis_selector: str,
    c: Constellation,
    n_list,
    moment_k: int,
    trials: int,
    seed: int,
) -> ZScalingReport:
    """Moments of the normalized FIM fluctuation norm across block lengths.

    The template's targets are reused at every n (its delays must fit the
    smallest n). For each n, E ||Jbar^{-1} (J - Jbar)||_2^k is estimated
    with a fresh stream per n; the report carries the log-log slope.
    """
    from .waveform import basis_from_selector

    if moment_k < 1:
        raise InvalidParameterError("moment order must be at least 1")
    n_list = [int(n) for n in n_list]
    if min(n_list) <= 3 * template.num_targets:
        raise InvalidParameterError(
            "every block length must exceed 3 * targets"
        )
    if min(n_list) <= np.max(template.delays):
        raise InvalidParameterError(
            "template delays must lie inside the smallest block length"
        )
    points = []
    for n in n_list:
        scen = Scenario(
            n=n, delays=template.delays, gains=template.gains, noise_var=1.0
        )
        _, flat = _unit_noise_geometry(scen)
        # Reference matrix through the same padded assembly as the draws:
        # constant-weight draws then fluctuate by exactly zero.
        jbar_row = assemble_fims(np.ones((1, n)), flat)[0]
        jbar_inv = np.linalg.inv(jbar_row)
        basis = basis_from_selector(basis_selector, n)
        norms = np.empty(trials)
        for start, symbols in symbol_chunks(c, n, seed + n, trials):
            weights = bin_weight_block(symbols, basis)
            jstack = assemble_fims(weights, flat)
            z = np.matmul(jbar_inv[None, :, :], jstack - jbar_row[None, :, :])
            norms[start : start + symbols.shape[0]] = np.linalg.svd(
                z, compute_uv=False
            )[:, 0]
        _, mom, err = stream_stats(norms**moment_k)
        points.append(ZMomentPoint(n=n, moment=mom, stderr=err))
    if len(points) >= 2 and all(p.moment > 0 for p in points):
        slope = float(
            np.polyfit(
                np.log([p.n for p in points]), np.log([p.moment for p in points]), 1
            )[0]
        )
    else:
        slope = math.nan
    return ZScalingReport(moment_order=moment_k, points=tuple(points), slope=slope)
