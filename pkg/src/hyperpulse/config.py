"""
Hyperpulse Framework.

Copyright 2024.
"""

import configparser
import json
import math
import os
from dataclasses import asdict, dataclass, fields

from .exceptions import ConfigError, ValidationError
from .oracle import DEFAULT_CUTOFF, LARGE_CUTOFF
from .solvers.direct import DEFAULT_GRID, MIN_GRID, SEED_SETS, DirectOptions
from .solvers.enumerate import AXES, METHODS, sweep_values

COMMANDS = ("solve", "sweep", "verify", "oracle")
LOGLEVELS = ("debug", "info", "warning", "error", "critical")


def as_bool(value):
    """Return a boolean from common true/false spellings."""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


TRANSFORMS = {
    "string": str,
    "str": str,
    "number": float,
    "float": float,
    "integer": int,
    "int": int,
    "boolean": as_bool,
    "bool": as_bool,
    "object": json.loads,
}


def load_config(config_file):
    """
    Load configuration file.

    :param str config_file:    Configuration file
    :return dict:              Options dictionary
    """
    params = {}

    try:
        section = "config"
        config = configparser.ConfigParser()
        config.read(config_file)

        for option in config.options(section):
            params[option] = config.get(section, option)
    except (TypeError, configparser.NoSectionError):
        pass

    return params


@dataclass(frozen=True)
class RunConfig:
    """
    Effective settings of one command.

    :param str command:            solve, sweep, verify or oracle
    :param float g_max:            Control bound G
    :param float T:                Duration
    :param str method:             direct, switch or enumerate
    :param int grid:               Direct solver intervals
    :param float step:             Integrator step bound
    :param float tol_feas:         Endpoint tolerance
    :param str seed_set:           Direct solver multi-start set
    :param bool referee:           Run the direct referee when enumerating
    :param str vary:               Sweep axis (T or g)
    :param float sweep_from:       First sweep value
    :param float sweep_to:         Last sweep value
    :param float sweep_step:       Sweep increment
    :param int workers:            Concurrent sweep points (default: core count)
    :param int na:                 Fock cutoff of mode a
    :param int nb:                 Fock cutoff of mode b
    :param float oracle_step:      Fock integrator step bound
    :param bool large_truncation:  Raise the cutoffs for strongly squeezed cases
    :param str result:             SolveResult file read by verify and oracle
    :param str out:                JSON or CSV output path
    :param str traj:               Trajectory CSV path
    :param str plot:               SVG plot path
    :param str loglevel:           Logging level
    """

    command: str = "solve"
    g_max: float = 1.0
    T: float = math.pi
    method: str = "enumerate"
    grid: int = DEFAULT_GRID
    step: float = 1e-4
    tol_feas: float = 1e-8
    seed_set: str = "standard"
    referee: bool = True
    vary: str = "T"
    sweep_from: float = None
    sweep_to: float = None
    sweep_step: float = None
    workers: int = None
    na: int = DEFAULT_CUTOFF
    nb: int = None
    oracle_step: float = 1e-4
    large_truncation: bool = False
    result: str = None
    out: str = None
    traj: str = None
    plot: str = None
    loglevel: str = "warning"

    @classmethod
    def from_sources(cls, config_file=None, **overrides):
        """
        Merge defaults, a config file and command-line values.

        Values that are ``None`` in ``overrides`` leave lower layers untouched.

        :param str config_file:   INI file with a [config] section
        :param overrides:         Command-line values by field name
        :return RunConfig:        Configuration
        :raises ConfigError:      Unknown key or value that does not convert
        """
        known = {f.name.lower(): f for f in fields(cls)}
        values = {}

        for key, raw in load_config(config_file).items() if config_file else ():
            name = key.replace("-", "_").lower()
            if name not in known:
                raise ConfigError(f"unknown configuration key {key!r} in {config_file}")
            target = known[name]
            type_name = target.type if isinstance(target.type, str) else target.type.__name__
            try:
                values[target.name] = TRANSFORMS.get(type_name, str)(raw)
            except ValueError as exc:
                raise ConfigError(f"configuration key {key!r}: {exc}") from exc

        for name, value in overrides.items():
            if name not in {f.name for f in fields(cls)}:
                raise ConfigError(f"unknown option {name!r}")
            if value is not None:
                values[name] = value

        return cls(**values)

    def validate(self):
        """
        Check ranges and paths.

        :return RunConfig:    self
        :raises ConfigError:  First violated constraint
        """
        checks = [
            (self.command in COMMANDS, f"unknown command {self.command!r}"),
            (self.g_max > 0, f"control bound must be positive, got {self.g_max}"),
            (self.T >= 0, f"duration must be nonnegative, got {self.T}"),
            (self.method in METHODS, f"unknown method {self.method!r}"),
            (self.grid >= MIN_GRID, f"grid needs at least {MIN_GRID} intervals, got {self.grid}"),
            (self.step > 0, f"step must be positive, got {self.step}"),
            (self.tol_feas > 0, f"feasibility tolerance must be positive, got {self.tol_feas}"),
            (self.seed_set in SEED_SETS and self.seed_set != "warm", f"unknown seed set {self.seed_set!r}"),
            (self.vary in AXES, f"unknown sweep axis {self.vary!r}"),
            (self.workers is None or self.workers >= 1, f"workers must be at least 1, got {self.workers}"),
            (self.na >= 3 and (self.nb is None or self.nb >= 3), "Fock cutoffs must be at least 3"),
            (self.oracle_step > 0, f"oracle step must be positive, got {self.oracle_step}"),
            (self.loglevel.lower() in LOGLEVELS, f"unknown log level {self.loglevel!r}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

        if self.command == "sweep":
            if None in (self.sweep_from, self.sweep_to, self.sweep_step):
                raise ConfigError("sweep needs --from, --to and --step")
            try:
                sweep_values(self.sweep_from, self.sweep_to, self.sweep_step)
            except ValidationError as exc:
                raise ConfigError(str(exc)) from exc

        if self.command in ("verify", "oracle") and not self.result:
            raise ConfigError(f"{self.command} needs a result file")

        for path in (self.out, self.traj, self.plot):
            if path:
                directory = os.path.dirname(os.path.abspath(path))
                if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
                    raise ConfigError(f"cannot write to {path}")
        return self

    def sweep_values(self):
        """Return the swept axis values."""
        return sweep_values(self.sweep_from, self.sweep_to, self.sweep_step)

    def worker_count(self):
        """Return the sweep pool size, defaulting to the available cores."""
        return self.workers or os.cpu_count() or 1

    def cutoffs(self):
        """Return the (Na, Nb) Fock cutoffs in effect."""
        na = max(self.na, LARGE_CUTOFF) if self.large_truncation else self.na
        nb = self.nb or na
        if self.large_truncation:
            nb = max(nb, LARGE_CUTOFF)
        return na, nb

    def direct_options(self):
        """Return the direct solver settings."""
        return DirectOptions(step=self.step, tol_feas=self.tol_feas, seed_set=self.seed_set)

    def as_dict(self):
        """Return the configuration echoed into output files."""
        return asdict(self)
