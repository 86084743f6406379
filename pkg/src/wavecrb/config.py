"""Flat run-configuration files.

Three sections, plain key = value pairs, no nesting:

    [scenario]   either "file = <path>" or inline random placement via
                 n, l, seed, min_separation
    [run]        constellation, selection, snr_start/stop/step, trials,
                 seed, skip_policy, optional bandwidth_hz, snr_db, out
    [waveforms]  one selector per line (no values)

Parsing validates everything it can without running: section and key
names, numeric ranges, waveform selector syntax, and that every referenced
file exists. A parsed config regenerates a canonical text form whose hash
identifies the run in output metadata.
"""
import configparser
import hashlib
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, WavecrbError
from .scenario import Scenario, load_scenario, random_scenario
from .waveform import basis_from_selector

_SCENARIO_KEYS = {"file", "n", "l", "seed", "min_separation"}
_RUN_KEYS = {
    "constellation",
    "selection",
    "snr_start",
    "snr_stop",
    "snr_step",
    "snr_db",
    "trials",
    "seed",
    "skip_policy",
    "bandwidth_hz",
    "out",
}


@dataclass(frozen=True)
class RunConfig:
    """Canonical, validated run description."""

    scenario_file: str | None
    n: int | None
    l: int | None
    scenario_seed: int | None
    min_separation: float
    waveforms: tuple
    constellation: str
    selection: str
    snr_start: float
    snr_stop: float
    snr_step: float
    snr_db: float
    trials: int
    seed: int
    skip_policy: str
    bandwidth_hz: float | None
    out: str | None


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = section[key]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config(path) -> RunConfig:
    """Parse and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(allow_no_value=True, delimiters=("=",))
    parser.optionxform = str  # selectors and paths are case sensitive
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    for section in parser.sections():
        if section not in ("scenario", "run", "waveforms"):
            raise ConfigError(f"unknown section [{section}]")
    if not parser.has_section("run") or not parser.has_section("waveforms"):
        raise ConfigError("config requires [run] and [waveforms] sections")

    scen = parser["scenario"] if parser.has_section("scenario") else {}
    for key in scen:
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"unknown [scenario] key {key!r}")
    run = parser["run"]
    for key in run:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown [run] key {key!r}")

    scenario_file = _get(scen, "file", str)
    n = _get(scen, "n", int)
    l = _get(scen, "l", int)
    scenario_seed = _get(scen, "seed", int)
    if scenario_file is None and (n is None or l is None or scenario_seed is None):
        raise ConfigError("[scenario] needs either file=... or all of n, l, seed")
    if scenario_file is not None:
        base = path.parent / scenario_file
        if not base.is_file():
            raise ConfigError(f"scenario file not found: {base}")
        scenario_file = str(base)

    waveforms = tuple(parser["waveforms"])
    if not waveforms:
        raise ConfigError("[waveforms] must list at least one selector")
    for sel in waveforms:
        if sel.startswith("custom:") and not Path(sel.split(":", 1)[1]).is_file():
            raise ConfigError(f"custom basis file not found: {sel.split(':', 1)[1]}")

    cfg = RunConfig(
        scenario_file=scenario_file,
        n=n,
        l=l,
        scenario_seed=scenario_seed,
        min_separation=_get(scen, "min_separation", float, default=1.0),
        waveforms=waveforms,
        constellation=_get(run, "constellation", str, required=True),
        selection=_get(run, "selection", str, default="delay"),
        snr_start=_get(run, "snr_start", float, default=0.0),
        snr_stop=_get(run, "snr_stop", float, default=30.0),
        snr_step=_get(run, "snr_step", float, default=5.0),
        snr_db=_get(run, "snr_db", float, default=0.0),
        trials=_get(run, "trials", int, default=20000),
        seed=_get(run, "seed", int, default=0),
        skip_policy=_get(run, "skip_policy", str, default="skip"),
        bandwidth_hz=_get(run, "bandwidth_hz", float),
        out=_get(run, "out", str),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.selection not in ("delay", "amplitude", "full"):
        raise ConfigError(f"unknown selection {cfg.selection!r}")
    if cfg.skip_policy not in ("skip", "strict"):
        raise ConfigError(f"unknown skip policy {cfg.skip_policy!r}")
    if cfg.trials < 1:
        raise ConfigError("trials must be at least 1")
    if cfg.snr_step <= 0:
        raise ConfigError("snr_step must be positive")
    if cfg.snr_stop < cfg.snr_start:
        raise ConfigError("snr_stop must not be below snr_start")
    if cfg.bandwidth_hz is not None and cfg.bandwidth_hz <= 0:
        raise ConfigError("bandwidth_hz must be positive")


def canonical_text(cfg: RunConfig) -> str:
    """Regenerate the canonical config text (stable key order and formats)."""
    out = io.StringIO()
    out.write("[scenario]\n")
    if cfg.scenario_file is not None:
        out.write(f"file = {cfg.scenario_file}\n")
    else:
        out.write(f"n = {cfg.n}\n")
        out.write(f"l = {cfg.l}\n")
        out.write(f"seed = {cfg.scenario_seed}\n")
    out.write(f"min_separation = {cfg.min_separation!r}\n")
    out.write("\n[run]\n")
    out.write(f"constellation = {cfg.constellation}\n")
    out.write(f"selection = {cfg.selection}\n")
    out.write(f"snr_start = {cfg.snr_start!r}\n")
    out.write(f"snr_stop = {cfg.snr_stop!r}\n")
    out.write(f"snr_step = {cfg.snr_step!r}\n")
    out.write(f"snr_db = {cfg.snr_db!r}\n")
    out.write(f"trials = {cfg.trials}\n")
    out.write(f"seed = {cfg.seed}\n")
    out.write(f"skip_policy = {cfg.skip_policy}\n")
    if cfg.bandwidth_hz is not None:
        out.write(f"bandwidth_hz = {cfg.bandwidth_hz!r}\n")
    if cfg.out is not None:
        out.write(f"out = {cfg.out}\n")
    out.write("\n[waveforms]\n")
    for sel in cfg.waveforms:
        out.write(f"{sel}\n")
    return out.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode()).hexdigest()


def snr_grid(cfg: RunConfig) -> list:
    grid = []
    value = cfg.snr_start
    while value <= cfg.snr_stop + 1e-9:
        grid.append(round(value, 12))
        value += cfg.snr_step
    return grid


def build_scenario(cfg: RunConfig, noise_var: float = 1.0) -> Scenario:
    """Materialize the scenario (load from file or place randomly)."""
    try:
        if cfg.scenario_file is not None:
            scen = load_scenario(cfg.scenario_file)
            if scen.noise_var != noise_var:
                scen = Scenario(
                    n=scen.n,
                    delays=scen.delays,
                    gains=scen.gains,
                    noise_var=noise_var,
                )
            return scen
        return random_scenario(
            cfg.scenario_seed,
            cfg.n,
            cfg.l,
            min_separation=cfg.min_separation,
            noise_var=noise_var,
        )
    except WavecrbError:
        raise
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot build scenario: {exc}") from exc


def build_bases(cfg: RunConfig, n: int) -> list:
    return [basis_from_selector(sel, n) for sel in cfg.waveforms]


def bundled_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package (e.g. "fig1_qam")."""
    if not name.endswith(".cfg"):
        name += ".cfg"
    ref = resources.files("wavecrb") / "configs" / name
    with resources.as_file(ref) as concrete:
        if not concrete.is_file():
            raise ConfigError(f"no bundled config named {name!r}")
        return concrete


def resolve_config(name_or_path) -> Path:
    """Accept a filesystem path or the name of a bundled config."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    try:
        return bundled_config_path(str(name_or_path))
    except ConfigError:
        raise ConfigError(f"config not found: {name_or_path}") from None
