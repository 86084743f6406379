"""Target geometry: delays, amplitudes, steering vectors and the expected FIM.

A Scenario fixes the multi-target ranging problem (block length, delays in
sampling units, complex gains, noise power). Geometry derives everything
the estimation bounds need from it:

* the Jacobian of the noise-free observation with respect to the 3L real
  parameters (delays, then real gains, then imaginary gains),
* one rank<=2 PSD matrix per frequency bin whose weighted sum is the
  single-draw FIM,
* the expected FIM (all bin weights equal to one).
"""
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateScenarioError,
    InfeasibleSeparationError,
    InvalidParameterError,
)
from .linalg import dft_matrix
from .rngstream import DOMAIN_SCENARIO, stream

SPEED_OF_LIGHT = 299792458.0

_MAX_PLACEMENT_ATTEMPTS = 10_000


@dataclass(frozen=True, eq=False)
class Scenario:
    """Multi-target ranging setup.

    n: block length (number of observed samples).
    delays: length-L, in sampling units, each in [0, n), pairwise distinct.
    gains: length-L complex amplitudes, all nonzero.
    noise_var: complex noise variance (SNR = 1/noise_var for unit gains).
    """

    n: int
    delays: np.ndarray
    gains: np.ndarray
    noise_var: float

    def __post_init__(self):
        object.__setattr__(self, "delays", np.asarray(self.delays, dtype=float))
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=np.complex128))
        _check_scenario(self)

    @property
    def num_targets(self) -> int:
        return len(self.delays)


def _check_scenario(s: Scenario) -> None:
    l = len(s.delays)
    if len(s.gains) != l:
        raise DegenerateScenarioError("delays and gains must have equal length")
    if l < 1:
        raise DegenerateScenarioError("at least one target is required")
    # 2n real observations must cover the 3l real parameters; experiment
    # generators additionally stay in the comfortable n > 3l regime.
    if 2 * s.n < 3 * l:
        raise DegenerateScenarioError(
            f"too many targets for the block length (n={s.n}, targets={l})"
        )
    if np.any(s.delays < 0) or np.any(s.delays >= s.n):
        raise DegenerateScenarioError("delays must lie in [0, n)")
    if len(np.unique(s.delays)) != l:
        raise DegenerateScenarioError("delays must be pairwise distinct")
    if np.any(s.gains == 0):
        raise DegenerateScenarioError("gains must be nonzero")
    if not (s.noise_var > 0) or not math.isfinite(s.noise_var):
        raise DegenerateScenarioError("noise variance must be positive and finite")


@dataclass(frozen=True, eq=False)
class Geometry:
    """Derived geometry of a scenario.

    jacobian: n x 3L complex Jacobian [gain*dsteer | steer | j*steer].
    bin_fims: (n, 3L, 3L) real PSD stack; the FIM of a draw with per-bin
        powers w is sum_k w[k] * bin_fims[k].
    expected_fim: sum of bin_fims (all bin powers at their mean of one).
    """

    scenario: Scenario
    jacobian: np.ndarray = field(repr=False)
    bin_fims: np.ndarray = field(repr=False)
    expected_fim: np.ndarray = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class SelectionMatrix:
    """Diagonal 0/1 projector choosing which parameters enter the bound."""

    kind: str
    indices: np.ndarray
    projector: np.ndarray = field(repr=False)

    @property
    def trace(self) -> int:
        return len(self.indices)


def steering(tau: float, n: int) -> np.ndarray:
    """Frequency-domain steering vector exp(-2j*pi*(m-1)*tau/n), m = 1..n."""
    return np.exp(-2j * np.pi * np.arange(n) * tau / n)


def steering_derivative(tau: float, n: int) -> np.ndarray:
    """Derivative of the steering vector with respect to the delay."""
    return (-2j * np.pi * np.arange(n) / n) * steering(tau, n)


def delay_operator(tau: float, n: int) -> np.ndarray:
    """Periodic (circular) delay by tau samples, fractional tau allowed.

    Diagonal in the DFT basis, hence unitary and commuting for all delays.
    """
    f = dft_matrix(n)
    return f.conj().T @ (steering(tau, n)[:, None] * f)


def build_geometry(s: Scenario) -> Geometry:
    """Assemble the Jacobian, per-bin FIM terms and the expected FIM."""
    _check_scenario(s)
    n, l = s.n, s.num_targets
    steer = np.stack([steering(t, n) for t in s.delays], axis=1)
    dsteer = (-2j * np.pi * np.arange(n) / n)[:, None] * steer
    jac = np.concatenate([dsteer * s.gains[None, :], steer, 1j * steer], axis=1)

    scale = 2.0 / s.noise_var
    re, im = jac.real, jac.imag
    bin_fims = scale * (
        np.einsum("ni,nj->nij", re, re) + np.einsum("ni,nj->nij", im, im)
    )
    expected = scale * (re.T @ re + im.T @ im)
    expected = (expected + expected.T) / 2
    bin_fims = np.ascontiguousarray(bin_fims)
    for arr in (jac, bin_fims, expected):
        arr.setflags(write=False)
    assert expected.shape == (3 * l, 3 * l)
    return Geometry(scenario=s, jacobian=jac, bin_fims=bin_fims, expected_fim=expected)


def selection(kind: str, l: int) -> SelectionMatrix:
    """Parameter selector: "delay" (L), "amplitude" (2L) or "full" (3L)."""
    if l < 1:
        raise InvalidParameterError("target count must be at least 1")
    if kind == "delay":
        idx = np.arange(l)
    elif kind == "amplitude":
        idx = np.arange(l, 3 * l)
    elif kind == "full":
        idx = np.arange(3 * l)
    else:
        raise InvalidParameterError(f"unknown selection kind {kind!r}")
    proj = np.zeros((3 * l, 3 * l))
    proj[idx, idx] = 1.0
    idx.setflags(write=False)
    proj.setflags(write=False)
    return SelectionMatrix(kind=kind, indices=idx, projector=proj)


def _circular_gap(a: float, b: float, n: int) -> float:
    d = abs(a - b) % n
    return min(d, n - d)


def random_scenario(
    seed: int,
    n: int,
    l: int,
    min_separation: float = 1.0,
    amplitude_law: str = "unit",
    noise_var: float = 1.0,
) -> Scenario:
    """Random placement: delays uniform on [0, n) with pairwise circular
    separation >= min_separation, unit-magnitude gains with uniform phase.

    Placement is rejection-sampled; a configuration that cannot be placed
    within 10^4 attempts (or that is infeasible on the ring outright)
    raises InfeasibleSeparationError.
    """
    if n <= 3 * l:
        raise DegenerateScenarioError(
            f"block length must exceed 3 * targets (n={n}, targets={l})"
        )
    if amplitude_law != "unit":
        raise InvalidParameterError(f"unknown amplitude law {amplitude_law!r}")
    if l * min_separation >= n:
        raise InfeasibleSeparationError(
            f"{l} targets with separation {min_separation} cannot fit on a ring of length {n}"
        )
    rng = stream(seed, DOMAIN_SCENARIO)
    delays: list[float] = []
    attempts = 0
    while len(delays) < l:
        attempts += 1
        if attempts > _MAX_PLACEMENT_ATTEMPTS:
            raise InfeasibleSeparationError(
                f"placement failed after {_MAX_PLACEMENT_ATTEMPTS} attempts "
                f"(n={n}, targets={l}, separation={min_separation})"
            )
        cand = float(rng.uniform(0.0, n))
        if all(_circular_gap(cand, d, n) >= min_separation for d in delays):
            delays.append(cand)
    phases = rng.uniform(0.0, 2 * np.pi, size=l)
    return Scenario(
        n=n, delays=np.array(delays), gains=np.exp(1j * phases), noise_var=noise_var
    )


def range_unit_factor(bandwidth_hz: float) -> float:
    """Factor converting a delay variance in sampling units to squared
    meters: c^2 / (4 B^2)."""
    if bandwidth_hz <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    return SPEED_OF_LIGHT**2 / (4.0 * bandwidth_hz**2)


def save_scenario(s: Scenario, path) -> None:
    """Write the plain-text scenario format (keys, then one target per line)."""
    lines = [f"n {s.n}", f"l {s.num_targets}", f"sigma2 {float(s.noise_var)!r}"]
    for tau, gain in zip(s.delays, s.gains):
        lines.append(f"{float(tau)!r} {float(gain.real)!r} {float(gain.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_scenario(path) -> Scenario:
    """Parse the plain-text scenario format written by save_scenario."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    header: dict[str, str] = {}
    targets: list[tuple[float, complex]] = []
    for ln in lines:
        tokens = ln.split()
        if tokens[0] in ("n", "l", "sigma2") and len(tokens) == 2:
            header[tokens[0]] = tokens[1]
        elif len(tokens) == 3:
            tau, re, im = (float(t) for t in tokens)
            targets.append((tau, complex(re, im)))
        else:
            raise InvalidParameterError(f"malformed scenario line: {ln!r}")
    missing = {"n", "l", "sigma2"} - set(header)
    if missing:
        raise InvalidParameterError(f"scenario file missing keys: {sorted(missing)}")
    if len(targets) != int(header["l"]):
        raise InvalidParameterError(
            f"scenario file declares l={header['l']} but lists {len(targets)} targets"
        )
    return Scenario(
        n=int(header["n"]),
        delays=np.array([t for t, _ in targets]),
        gains=np.array([g for _, g in targets]),
        noise_var=float(header["sigma2"]),
    )
