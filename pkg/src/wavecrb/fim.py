"""Single-draw Fisher information: assembly, conditional bound, resolvent terms.

The FIM of one symbol draw factors into the deterministic geometry and the
random per-bin signal power: J = (2/sigma^2) Re{H^H Diag(w) H} with
w = |spectrum @ s|^2. Everything here is the per-draw reference path; the
Monte Carlo engine batches the same computations.
"""
from dataclasses import dataclass, field

import numpy as np

from .constellation import SymbolVector
from .errors import InvalidDimensionError, InvalidParameterError, SingularFimError
from .linalg import RCOND_SINGULAR, hermitian_eig, inverse
from .scenario import Geometry, SelectionMatrix
from .waveform import UnitaryBasis


@dataclass(frozen=True, eq=False)
class FimSample:
    """FIM of one symbol draw.

    matrix: 3L x 3L real symmetric PSD.
    rcond: eigenvalue ratio lambda_min/lambda_max (skip policy input).
    bin_weights: the per-bin powers |spectrum @ s|^2 that produced it.
    """

    matrix: np.ndarray = field(repr=False)
    rcond: float = 0.0
    bin_weights: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class ResolventTerms:
    """Traces of the inverse-FIM expansion around the expected FIM.

    With D = J - Jbar and Z = Jbar^{-1} D:
    first_order  = Tr(T Z Jbar^{-1})
    second_order = Tr(T Z^2 Jbar^{-1})   (nonnegative for delay selection)
    third_order  = Tr(T Z^3 (I+Z)^{-1} Jbar^{-1}), None when the expansion
                   does not converge (fluctuation_norm >= 1).
    The identity Tr(T J^{-1}) = Tr(T Jbar^{-1}) - first + second - third
    holds whenever third_order is available.
    """

    first_order: float
    second_order: float
    third_order: float | None
    fluctuation_norm: float


def _symbols_array(s) -> np.ndarray:
    if isinstance(s, SymbolVector):
        return s.symbols
    return np.asarray(s, dtype=np.complex128)


def fim(geom: Geometry, basis: UnitaryBasis, s) -> FimSample:
    """Assemble the FIM of one draw.

    Accepts a SymbolVector or a plain complex vector. The weighted Gram
    product is evaluated on split real/imaginary parts, which keeps the
    result exactly symmetric apart from the final (cheap) symmetrization
    and reproduces the expected FIM bit for bit when the weights are
    exactly one.
    """
    sym = _symbols_array(s)
    n = geom.scenario.n
    if basis.n != n or len(sym) != n:
        raise InvalidDimensionError(
            f"dimension mismatch: geometry n={n}, basis n={basis.n}, symbols {len(sym)}"
        )
    spec = basis.spectrum @ sym
    weights = spec.real**2 + spec.imag**2
    re, im = geom.jacobian.real, geom.jacobian.imag
    scale = 2.0 / geom.scenario.noise_var
    j = scale * (re.T @ (weights[:, None] * re) + im.T @ (weights[:, None] * im))
    j = (j + j.T) / 2
    w = np.linalg.eigvalsh(j)
    rcond = float(w[0] / w[-1]) if w[-1] > 0 else 0.0
    weights.setflags(write=False)
    j.setflags(write=False)
    return FimSample(matrix=j, rcond=rcond, bin_weights=weights)


def fim_via_cn(geom: Geometry, weights) -> np.ndarray:
    """FIM from explicit per-bin weights: sum_k weights[k] * bin_fims[k].

    Dual route to fim(); the two agree to rounding for the same weights.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (geom.scenario.n,):
        raise InvalidDimensionError(
            f"weights must have length {geom.scenario.n}, got shape {w.shape}"
        )
    if np.any(w < 0):
        raise InvalidParameterError("bin weights must be nonnegative")
    flat = geom.bin_fims.reshape(geom.scenario.n, -1)
    dim = geom.bin_fims.shape[1]
    return (w @ flat).reshape(dim, dim)


def conditional_crb(f: FimSample, t: SelectionMatrix) -> float:
    """Tr(T J^{-1}) for one draw, via the eigendecomposition of J.

    Raises SingularFimError when the draw's rcond is below the singularity
    threshold; the Monte Carlo layer decides whether to skip or abort.
    """
    if f.rcond < RCOND_SINGULAR:
        raise SingularFimError(
            f"draw FIM is singular (rcond={f.rcond:.3e})", f.rcond
        )
    eig = hermitian_eig(f.matrix)
    sel_rows = eig.eigenvectors[t.indices, :]
    return float(np.sum((sel_rows**2).sum(axis=0) / eig.eigenvalues))


def resolvent(geom: Geometry, f: FimSample, t: SelectionMatrix) -> ResolventTerms:
    """Expansion terms of Tr(T J^{-1}) around the expected FIM."""
    jbar_inv = inverse(geom.expected_fim)
    delta = f.matrix - geom.expected_fim
    z = jbar_inv @ delta
    z_norm = float(np.linalg.norm(z, ord=2))
    tz = z[t.indices, :]  # rows of T Z
    first = float(np.trace(tz @ jbar_inv[:, t.indices]))
    second = float(np.trace(tz @ z @ jbar_inv[:, t.indices]))
    third = None
    if z_norm < 1.0:
        core = np.linalg.solve(np.eye(z.shape[0]) + z, jbar_inv)
        third = float(np.trace(tz @ z @ z @ core[:, t.indices]))
    return ResolventTerms(
        first_order=first,
        second_order=second,
        third_order=third,
        fluctuation_norm=z_norm,
    )
