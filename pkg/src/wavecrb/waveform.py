"""Unitary modulation bases and their spectral-spread statistics.

A basis is the unitary matrix U mapping a block of data symbols to the
transmitted time-domain block. Alongside U each basis caches:

* ``spectrum``: F_N @ U, whose column n is the frequency-domain shape of
  basis vector n. The per-bin signal power of a draw s is
  ``|spectrum @ s|**2``, which is what the Fisher information sees.
* ``mixing``: the doubly stochastic matrix of squared spectral magnitudes
  (entry (m, n) is the power that symbol m contributes to the spectrum of
  basis column n). The identity characterizes the frequency-localized
  (subcarrier) basis up to permutation and phase.

Both caches are computed once at construction; the Monte Carlo engine and
every closed-form gap formula reuse them.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError, LinalgDomainError
from .linalg import dft_matrix, exp_skew
from .rngstream import DOMAIN_BASIS, DOMAIN_DIRECTION, stream

_UNITARITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class UnitaryBasis:
    """A unitary modulation basis with cached spectral structure."""

    kind: str
    matrix: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)
    mixing: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class GeodesicDirection:
    """A skew-Hermitian tangent direction with unit spectral norm."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.asarray(self.matrix)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise InvalidDimensionError("direction must be square")
        if np.linalg.norm(k + k.conj().T) > 1e-9:
            raise LinalgDomainError("direction is not skew-Hermitian")
        norm = np.linalg.norm(k, ord=2)
        if abs(norm - 1.0) > 1e-9:
            raise LinalgDomainError(f"direction spectral norm must be 1, got {norm}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _finalize(kind: str, u: np.ndarray, spectrum: np.ndarray | None = None) -> UnitaryBasis:
    n = u.shape[0]
    gram_err = np.linalg.norm(u.conj().T @ u - np.eye(n))
    if gram_err > _UNITARITY_TOL * np.sqrt(n):
        raise LinalgDomainError(f"basis {kind!r} is not unitary (residual {gram_err:.3e})")
    if spectrum is None:
        spectrum = dft_matrix(n) @ u
    mixing = (spectrum.real**2 + spectrum.imag**2).T
    sums = np.concatenate([mixing.sum(axis=0) - 1.0, mixing.sum(axis=1) - 1.0])
    if np.max(np.abs(sums)) > 1e-9:
        raise LinalgDomainError(f"mixing matrix of {kind!r} is not doubly stochastic")
    u = u.copy()
    u.setflags(write=False)
    spectrum = np.ascontiguousarray(spectrum)
    spectrum.setflags(write=False)
    mixing.setflags(write=False)
    return UnitaryBasis(kind=kind, matrix=u, spectrum=spectrum, mixing=mixing)


def basis_sc(n: int) -> UnitaryBasis:
    """Single-carrier basis: U = I, every symbol spread over the full band."""
    if n < 1:
        raise InvalidDimensionError("block length must be at least 1")
    return _finalize("sc", np.eye(n, dtype=np.complex128), spectrum=dft_matrix(n))


def basis_ofdm(n: int) -> UnitaryBasis:
    """Subcarrier basis: U is the inverse DFT, one frequency bin per symbol.

    The spectrum is the exact identity so per-bin powers are exactly the
    symbol powers.
    """
    if n < 1:
        raise InvalidDimensionError("block length must be at least 1")
    u = dft_matrix(n).conj().T
    return _finalize("ofdm", u, spectrum=np.eye(n, dtype=np.complex128))


def basis_otfs(n1: int, n2: int) -> UnitaryBasis:
    """Doppler-delay basis: U = F_{n1}^H kron I_{n2}, block length n1*n2.

    n2 = 1 reduces to the subcarrier basis; each spectrum column has n2
    equal-power bins spaced n1 apart.
    """
    if n1 < 1 or n2 < 1:
        raise InvalidDimensionError("OTFS grid dimensions must be at least 1")
    u = np.kron(dft_matrix(n1).conj().T, np.eye(n2))
    return _finalize(f"otfs:{n1}x{n2}", u)


def chirp_diag(n: int, c: float) -> np.ndarray:
    """Diagonal chirp Diag{exp(-2j*pi*c*(m-1)^2)}, m = 1..n."""
    return np.exp(-2j * np.pi * c * np.arange(n, dtype=float) ** 2)


def basis_afdm(n: int, c1, c2: float) -> UnitaryBasis:
    """Chirp-modulated basis U = Lambda_{c1}^H F^H Lambda_{c2}^H.

    c1 must be an exact rational with 2*n*c1 integral (accepted as a
    Fraction, a string like "1/16", or an int); c2 is unconstrained.
    c1 = 1/2 collapses to the subcarrier basis up to permutation.
    """
    if n < 1:
        raise InvalidDimensionError("block length must be at least 1")
    try:
        c1 = Fraction(c1)
    except (ValueError, TypeError) as exc:
        raise InvalidParameterError(f"chirp rate c1 must be rational, got {c1!r}") from exc
    if (2 * n * c1).denominator != 1:
        raise InvalidParameterError(f"chirp rate c1={c1} does not satisfy 2*N*c1 integral")
    lam1 = chirp_diag(n, float(c1))
    lam2 = chirp_diag(n, float(c2))
    u = (np.conj(lam1)[:, None]) * dft_matrix(n).conj().T * np.conj(lam2)[None, :]
    return _finalize(f"afdm:{c1},{c2:g}", u)


def basis_geodesic(base: UnitaryBasis, k: GeodesicDirection, t: float) -> UnitaryBasis:
    """Point U(t) = base @ exp(t*K) on the geodesic leaving ``base`` along K."""
    if base.n != k.n:
        raise InvalidDimensionError(
            f"direction size {k.n} does not match basis size {base.n}"
        )
    if t == 0.0:
        return base
    step = exp_skew(k.matrix, t)
    return _finalize(
        f"geodesic:{base.kind}:{t:g}", base.matrix @ step, spectrum=base.spectrum @ step
    )


def random_direction(n: int, seed: int) -> GeodesicDirection:
    """Seeded random skew-Hermitian direction with unit spectral norm."""
    rng = stream(seed, DOMAIN_DIRECTION)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = (g - g.conj().T) / 2
    k /= np.linalg.norm(k, ord=2)
    return GeodesicDirection(matrix=k)


def random_unitary_basis(n: int, seed: int) -> UnitaryBasis:
    """Seeded Haar-random unitary basis (QR of a Gaussian matrix with the
    phase convention fixed). Used by the exploratory random-search flag."""
    rng = stream(seed, DOMAIN_BASIS)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    diag = np.diag(r)
    u = q * (diag / np.abs(diag))[None, :]
    return _finalize(f"haar:{seed}", u)


def rms_bandwidth(u_col) -> float:
    """Discrete RMS bandwidth of a unit-norm vector.

    The power spectrum p_k = |(F u)_k|^2 is a distribution over the linear
    frequency grid f_k = (k-1)/N; the result is its standard deviation,
    which lies in [0, 1/2].
    """
    u = np.asarray(u_col, dtype=np.complex128).ravel()
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise LinalgDomainError("column must have unit norm")
    p = np.abs(np.fft.fft(u, norm="ortho")) ** 2
    f = np.arange(len(u)) / len(u)
    centroid = float(f @ p)
    second = float(((f - centroid) ** 2) @ p)
    return float(np.sqrt(max(second, 0.0)))


def alpha_spread(basis: UnitaryBasis) -> float:
    """Minimum per-column RMS bandwidth of the basis."""
    return min(rms_bandwidth(basis.matrix[:, i]) for i in range(basis.n))


def mixing_matrix(basis: UnitaryBasis) -> np.ndarray:
    """The cached doubly stochastic matrix of squared spectral magnitudes."""
    return basis.mixing


def load_custom_basis(path) -> UnitaryBasis:
    """Load a basis from plain text: first line N, then N*N lines "re im".

    Entries are row-major. The unitarity invariant is enforced at load
    time; a file that fails it is rejected.
    """
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidParameterError(f"basis file {path} is empty")
    try:
        n = int(lines[0])
        if len(lines) != 1 + n * n:
            raise ValueError(f"expected {n * n} entry lines, found {len(lines) - 1}")
        entries = np.array(
            [[float(tok) for tok in ln.split()] for ln in lines[1:]], dtype=float
        )
        if entries.shape[1] != 2:
            raise ValueError("each entry line must contain exactly 're im'")
    except ValueError as exc:
        raise InvalidParameterError(f"malformed basis file {path}: {exc}") from exc
    u = (entries[:, 0] + 1j * entries[:, 1]).reshape(n, n)
    return _finalize("custom", u)


def save_custom_basis(basis: UnitaryBasis, path) -> None:
    """Write a basis in the plain-text interchange format."""
    rows = [str(basis.n)]
    for value in basis.matrix.ravel():
        rows.append(f"{float(value.real)!r} {float(value.imag)!r}")
    Path(path).write_text("\n".join(rows) + "\n")


def basis_from_selector(selector: str, n: int) -> UnitaryBasis:
    """Build a basis from a selector string.

    Accepted forms: ``sc``, ``ofdm``, ``otfs:N1xN2`` (N1*N2 must equal n),
    ``afdm:c1num/c1den,c2``, and ``custom:<path>``.
    """
    sel = selector.strip()
    if sel == "sc":
        return basis_sc(n)
    if sel == "ofdm":
        return basis_ofdm(n)
    if sel.startswith("otfs:"):
        dims = sel.split(":", 1)[1]
        try:
            n1_txt, n2_txt = dims.lower().split("x")
            n1, n2 = int(n1_txt), int(n2_txt)
        except ValueError as exc:
            raise InvalidParameterError(f"bad OTFS selector {selector!r}") from exc
        if n1 * n2 != n:
            raise InvalidDimensionError(
                f"OTFS grid {n1}x{n2} does not match block length {n}"
            )
        return basis_otfs(n1, n2)
    if sel.startswith("afdm:"):
        params = sel.split(":", 1)[1]
        try:
            c1_txt, c2_txt = params.split(",")
            c2 = float(Fraction(c2_txt))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameterError(f"bad AFDM selector {selector!r}") from exc
        return basis_afdm(n, c1_txt, c2)
    if sel.startswith("custom:"):
        basis = load_custom_basis(sel.split(":", 1)[1])
        if basis.n != n:
            raise InvalidDimensionError(
                f"custom basis size {basis.n} does not match block length {n}"
            )
        return basis
    raise InvalidParameterError(f"unknown waveform selector {selector!r}")
