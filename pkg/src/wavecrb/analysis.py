"""Closed-form bound gaps and the local geometry at the subcarrier basis.

The expected second-order excess of the bound over its Jensen floor is
controlled by two ingredients that this module combines:

* geometry weights mu[n, m]: the squared Frobenius norm of
  T Jbar^{-1} (C_n - C_m) Jbar^{-1/2}, where C_k is the FIM term of
  frequency bin k. They depend only on the scenario and the parameter
  selection, are symmetric with zero diagonal, and are cached on the
  Geometry because every formula here reuses them.
* spectral overlaps: entries of B^T B for the basis mixing matrix B
  (column dot products), which vanish off the diagonal exactly for the
  frequency-localized basis.

Closed forms implemented: the per-bin power covariance
I + (kappa - 2) B^T B, the second-order bound gap
(2 - kappa) * sum_{n<m} mu[n,m] (B^T B)[n,m], the sidelobe-energy gap
N (2 - kappa) (N - ||B||_F^2), and the curvature of the second-order term
along a geodesic, 4 (2 - kappa) * sum_{n<m} |K[n,m]|^2 mu[n,m]. Each has a
paired Monte Carlo estimator for cross-validation.
"""
import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .errors import (
    DegenerateScenarioError,
    InapplicableBasisError,
    InvalidParameterError,
    NoValidDrawsError,
    SingularMatrixError,
)
from .linalg import RCOND_SINGULAR, inv_sqrt_psd, inverse
from .montecarlo import (
    assemble_fims,
    bin_weight_block,
    stream_stats,
    symbol_chunks,
    _unit_noise_geometry,
)
from . import _kernels
from .scenario import Geometry, Scenario, SelectionMatrix, build_geometry, selection
from .waveform import GeodesicDirection, UnitaryBasis, alpha_spread, basis_from_selector, basis_geodesic, basis_ofdm


@dataclass(frozen=True)
class GapReport:
    """Second-order bound gap of a basis against the frequency-localized one."""

    gap_closed: float
    gap_mc: float | None
    stderr_mc: float | None
    mu_weights: np.ndarray
    kappa: float


@dataclass(frozen=True)
class GeodesicReport:
    """Finite-difference derivatives of the expected bound along a geodesic.

    first_deriv / second_deriv are central differences of the full bound at
    the base point, with Monte Carlo standard errors under common random
    numbers. The *_second_order fields isolate the second-order expansion
    term, whose curvature also has a closed form.
    """

    step: float
    trials_used: int
    mean_at_base: float
    first_deriv: float
    first_stderr: float
    second_deriv: float
    second_stderr: float
    second_order_hess_fd: float
    second_order_hess_stderr: float
    second_order_hess_closed: float


@dataclass(frozen=True)
class SpreadScalingRow:
    n: int
    alpha: float
    gap_closed: float
    gap_scaled_n2: float
    overlap: float
    overlap_bound: float
    bound_ok: bool


@dataclass(frozen=True)
class SpreadScalingReport:
    rows: tuple
    gap_n2_min: float
    gap_n2_max: float


def jensen_bound(geom: Geometry, t: SelectionMatrix) -> float:
    """Selected trace of the inverse expected FIM (the Jensen floor)."""
    try:
        inv = inverse(geom.expected_fim)
    except SingularMatrixError as exc:
        raise DegenerateScenarioError(
            f"expected FIM is singular ({exc})"
        ) from exc
    return float(np.sum(np.diag(inv)[t.indices]))


def sigma_s_closed(basis: UnitaryBasis, kappa: float) -> np.ndarray:
    """Covariance of the per-bin power vector: I + (kappa - 2) B^T B."""
    _check_kappa(kappa)
    b = basis.mixing
    return np.eye(basis.n) + (kappa - 2.0) * (b.T @ b)


def eisl_gap(basis: UnitaryBasis, kappa: float) -> float:
    """Expected integrated sidelobe excess over the frequency-localized
    basis: N (2 - kappa) (N - ||B||_F^2), nonnegative for kappa < 2."""
    _check_kappa(kappa)
    n = basis.n
    return float(n * (2.0 - kappa) * (n - np.sum(basis.mixing**2)))


def _check_kappa(kappa: float) -> None:
    # The Gaussian boundary kappa = 2 is admitted; every gap degenerates
    # to zero there.
    if not (1.0 <= kappa <= 2.0):
        raise InvalidParameterError(f"kurtosis must lie in [1, 2], got {kappa}")


def pair_weights(geom: Geometry, t: SelectionMatrix) -> np.ndarray:
    """Geometry weights mu[n, m] for all bin pairs (symmetric, zero diagonal).

    Computed once per (geometry, selection) and cached: the rows
    vec(T Jbar^{-1} C_n Jbar^{-1/2}) give mu[n, m] = |row_n - row_m|^2 via
    one Gram product.
    """
    key = ("mu", t.kind)
    if key not in geom._cache:
        geom._cache[key] = _pair_rows_and_mu(geom, t)
    return geom._cache[key][1]


def _pair_rows_and_mu(geom: Geometry, t: SelectionMatrix):
    n = geom.scenario.n
    jinv = inverse(geom.expected_fim)
    jm12 = inv_sqrt_psd(geom.expected_fim)
    lead = jinv[t.indices, :]
    rows = np.einsum("ij,njk,kl->nil", lead, geom.bin_fims, jm12).reshape(n, -1)
    gram = rows @ rows.T
    diag = np.diag(gram)
    mu = diag[:, None] + diag[None, :] - 2.0 * gram
    np.fill_diagonal(mu, 0.0)
    mu = np.clip(mu, 0.0, None)
    return rows, mu


def _second_order_rows(geom: Geometry, t: SelectionMatrix) -> np.ndarray:
    pair_weights(geom, t)
    return geom._cache[("mu", t.kind)][0]


def second_order_trace_block(
    geom: Geometry, t: SelectionMatrix, weight_block: np.ndarray
) -> np.ndarray:
    """Per-draw second-order expansion term from a block of bin weights.

    Equals |T Jbar^{-1} (J - Jbar) Jbar^{-1/2}|_F^2 =
    |(w - 1) @ rows|^2 with the cached pair rows; one matrix product per
    block."""
    rows = _second_order_rows(geom, t)
    centered = weight_block - 1.0
    return np.sum((centered @ rows) ** 2, axis=1)


def second_order_gap(
    geom: Geometry,
    basis: UnitaryBasis,
    kappa: float | None = None,
    constellation: Constellation | None = None,
    t: SelectionMatrix | None = None,
    trials: int = 0,
    seed: int = 0,
) -> GapReport:
    """Closed-form second-order bound gap, optionally cross-checked by a
    paired Monte Carlo difference of the second-order term.

    The Monte Carlo side needs an actual alphabet (``constellation``); the
    closed form needs only its kurtosis. Both sides share the geometry
    weights and, when sampling, the same symbol streams for the basis and
    the frequency-localized reference.
    """
    if kappa is None:
        if constellation is None:
            raise InvalidParameterError("either kappa or a constellation is required")
        kappa = constellation.kurtosis
    _check_kappa(kappa)
    if t is None:
        t = selection("delay", geom.scenario.num_targets)
    mu = pair_weights(geom, t)
    overlap = basis.mixing.T @ basis.mixing
    iu = np.triu_indices(geom.scenario.n, 1)
    gap_closed = float((2.0 - kappa) * np.sum(mu[iu] * overlap[iu]))

    gap_mc = stderr_mc = None
    if trials > 0:
        if constellation is None:
            raise InvalidParameterError("Monte Carlo gap requires a constellation")
        reference = basis_ofdm(geom.scenario.n)
        diffs = np.empty(trials)
        for start, symbols in symbol_chunks(
            constellation, geom.scenario.n, seed, trials
        ):
            stop = start + symbols.shape[0]
            r2_basis = second_order_trace_block(
                geom, t, bin_weight_block(symbols, basis)
            )
            r2_ref = second_order_trace_block(
                geom, t, bin_weight_block(symbols, reference)
            )
            diffs[start:stop] = r2_basis - r2_ref
        _, gap_mc, stderr_mc = stream_stats(diffs)
    return GapReport(
        gap_closed=gap_closed,
        gap_mc=gap_mc,
        stderr_mc=stderr_mc,
        mu_weights=np.triu(mu),
        kappa=kappa,
    )


def hessian_r2_closed(
    geom: Geometry,
    k,
    kappa: float,
    t: SelectionMatrix | None = None,
) -> float:
    """Closed-form curvature of the second-order term along direction K:
    4 (2 - kappa) * sum_{n<m} |K[n,m]|^2 mu[n,m] (nonnegative for kappa <= 2).

    Accepts a GeodesicDirection or a raw skew-Hermitian matrix; the value
    depends on K only through the off-diagonal squared magnitudes.
    """
    _check_kappa(kappa)
    if t is None:
        t = selection("delay", geom.scenario.num_targets)
    kmat = k.matrix if isinstance(k, GeodesicDirection) else np.asarray(k)
    if kmat.shape[0] != geom.scenario.n:
        raise InvalidParameterError("direction size does not match the scenario")
    mu = pair_weights(geom, t)
    iu = np.triu_indices(geom.scenario.n, 1)
    mag2 = (kmat.real**2 + kmat.imag**2)[iu]
    return float(4.0 * (2.0 - kappa) * np.sum(mag2 * mu[iu]))


def geodesic_derivatives(
    geom: Geometry,
    k: GeodesicDirection,
    c: Constellation,
    t: SelectionMatrix,
    step: float,
    trials: int,
    seed: int,
    threads=None,
) -> GeodesicReport:
    """Central finite differences of the expected bound along the geodesic
    leaving the frequency-localized basis in direction K.

    All three evaluation points consume identical symbol streams (common
    random numbers), and draws that are singular at any point are dropped
    from every difference, so the derivative estimates are paired. The
    second-order term is differentiated separately and compared against
    its closed-form curvature.
    """
    if not (0.0 < step <= 0.1):
        raise InvalidParameterError("step must lie in (0, 0.1]")
    n = geom.scenario.n
    base = basis_ofdm(n)
    points = [
        basis_geodesic(base, k, -step),
        base,
        basis_geodesic(base, k, step),
    ]
    _, flat = _unit_noise_geometry(geom.scenario)
    noise = geom.scenario.noise_var
    vals = [np.empty(trials) for _ in points]
    r2 = [np.empty(trials) for _ in points]
    for start, symbols in symbol_chunks(c, n, seed, trials):
        stop = start + symbols.shape[0]
        for pi, basis in enumerate(points):
            weights = bin_weight_block(symbols, basis)
            jstack = assemble_fims(weights, flat)
            v, _ = _kernels.eig_crb_batch(jstack, t.indices, RCOND_SINGULAR, threads)
            vals[pi][start:stop] = noise * v
            r2[pi][start:stop] = second_order_trace_block(geom, t, weights)
    valid = np.isfinite(vals[0]) & np.isfinite(vals[1]) & np.isfinite(vals[2])
    if not np.any(valid):
        raise NoValidDrawsError("every common draw was singular at some step")
    minus, center, plus = (v[valid] for v in vals)
    used, base_mean, _ = stream_stats(center)
    _, d1, d1_err = stream_stats((plus - minus) / (2.0 * step))
    _, d2, d2_err = stream_stats((plus - 2.0 * center + minus) / step**2)
    r2m, r2c, r2p = (r[valid] for r in r2)
    _, r2_d2, r2_d2_err = stream_stats((r2p - 2.0 * r2c + r2m) / step**2)
    closed = hessian_r2_closed(geom, k, c.kurtosis, t)
    return GeodesicReport(
        step=step,
        trials_used=used,
        mean_at_base=base_mean,
        first_deriv=d1,
        first_stderr=d1_err,
        second_deriv=d2,
        second_stderr=d2_err,
        second_order_hess_fd=r2_d2,
        second_order_hess_stderr=r2_d2_err,
        second_order_hess_closed=closed,
    )


def spread_gap_lower_bound_check(
    template: Scenario, basis_selector: str, kappa: float, n_list
) -> SpreadScalingReport:
    """Scaling check of the closed-form gap for a frequency-spread family.

    For each block length: the gap times n^2 (expected to stay bounded away
    from zero and roughly constant) and the frequency-difference-weighted
    overlap sum, which must be at least alpha^2 * n. Bases whose minimum
    column RMS bandwidth is zero are rejected as not frequency spread.
    """
    _check_kappa(kappa)
    n_list = [int(n) for n in n_list]
    if min(n_list) <= np.max(template.delays):
        raise InvalidParameterError(
            "template delays must lie inside the smallest block length"
        )
    rows = []
    for n in n_list:
        scen = Scenario(
            n=n,
            delays=template.delays,
            gains=template.gains,
            noise_var=template.noise_var,
        )
        basis = basis_from_selector(basis_selector, n)
        alpha = alpha_spread(basis)
        if alpha <= 1e-12:
            raise InapplicableBasisError(
                f"basis {basis.kind!r} is not frequency spread (alpha = {alpha:g})"
            )
        geom = build_geometry(scen)
        report = second_order_gap(geom, basis, kappa=kappa)
        freqs = np.arange(n) / n
        overlap_mat = basis.mixing.T @ basis.mixing
        iu = np.triu_indices(n, 1)
        overlap = float(np.sum((freqs[iu[0]] - freqs[iu[1]]) ** 2 * overlap_mat[iu]))
        bound = alpha**2 * n
        rows.append(
            SpreadScalingRow(
                n=n,
                alpha=alpha,
                gap_closed=report.gap_closed,
                gap_scaled_n2=report.gap_closed * n * n,
                overlap=overlap,
                overlap_bound=bound,
                bound_ok=overlap >= bound * (1.0 - 1e-9) - 1e-12,
            )
        )
    scaled = [r.gap_scaled_n2 for r in rows]
    return SpreadScalingReport(
        rows=tuple(rows), gap_n2_min=min(scaled), gap_n2_max=max(scaled)
    )
