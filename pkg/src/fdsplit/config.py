"""Scenario and algorithm configuration.

All scenario constants live in :class:`SystemConfig`.  Fields keep the units
of the simulation table: powers and noise in dBm/dB, distortion factors and
the residual self-interference power as linear scalars.  Watt-level values
are derived on demand through the ``*_watt`` helpers.

Configs can be loaded from a flat ``key = value`` text file (see
``configs/table1.cfg`` for the documented key list).  In the file the three
linear-scalar fields ``tx_distortion``, ``rx_distortion`` and
``si_cancellation`` are written in dB and converted exactly once at load
time; every other key is stored in the unit of its field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class CapacityError(RuntimeError):
    """Requested problem size exceeds a hard capability guard."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class SystemConfig:
    """Scenario and optimizer constants (defaults: pico-cell benchmark)."""

    num_antennas: int = 8          # M, BS antennas
    num_ul: int = 4                # I, single-antenna UL users
    num_dl: int = 4                # J, single-antenna DL users
    cell_radius: float = 40.0      # m
    carrier_freq: float = 2e9      # Hz
    bandwidth: float = 10e6        # Hz
    noise_psd: float = -174.4      # dBm/Hz
    noise_figure_bs: float = 13.0  # dB
    noise_figure_ue: float = 9.0   # dB
    tx_distortion: float = 1e-12   # kappa, linear (-120 dB)
    rx_distortion: float = 1e-12   # beta, linear (-120 dB)
    si_cancellation: float = 1e-10  # sigma_SI^2, linear (-100 dB)
    rician_k: float = 1.0          # K_r of the self-interference channel
    p_dl_max: float = 30.0         # dBm, BS sum transmit power
    p_ul_max: float = 23.0         # dBm, per-UE transmit power
    epsilon: float = 1e-3          # solver convergence tolerance
    alpha: float = 1.0             # proximal weight
    rho: float = 0.9               # step size in (0, 1]
    num_restarts: int = 20         # L, random restarts
    seed: int = 1                  # master seed (64-bit)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.num_antennas < 2:
            raise ConfigError("num_antennas must be >= 2")
        if self.num_ul < 1 or self.num_dl < 1:
            raise ConfigError("num_ul and num_dl must be >= 1")
        if self.cell_radius < 0:
            raise ConfigError("cell_radius must be >= 0")
        if self.bandwidth <= 0 or self.carrier_freq <= 0:
            raise ConfigError("carrier_freq and bandwidth must be > 0")
        if self.tx_distortion < 0 or self.rx_distortion < 0:
            raise ConfigError("distortion factors must be >= 0")
        if self.si_cancellation <= 0:
            raise ConfigError("si_cancellation must be > 0 (linear power)")
        if self.rician_k < 0:
            raise ConfigError("rician_k must be >= 0")
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError("rho must be in (0, 1]")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.num_restarts < 1:
            raise ConfigError("num_restarts must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    # Derived linear quantities (Watts).

    @property
    def p_ul_max_watt(self) -> float:
        return dbm_to_watt(self.p_ul_max)

    @property
    def p_dl_max_watt(self) -> float:
        return dbm_to_watt(self.p_dl_max)

    @property
    def noise_var_bs_watt(self) -> float:
        """Thermal noise power at the BS: PSD + 10 log10(BW) + NF (in W)."""
        dbm = self.noise_psd + 10.0 * math.log10(self.bandwidth) + self.noise_figure_bs
        return dbm_to_watt(dbm)

    @property
    def noise_var_ue_watt(self) -> float:
        dbm = self.noise_psd + 10.0 * math.log10(self.bandwidth) + self.noise_figure_ue
        return dbm_to_watt(dbm)

    @property
    def si_cancellation_db(self) -> float:
        return linear_to_db(self.si_cancellation)


_INT_KEYS = {"num_antennas", "num_ul", "num_dl", "num_restarts", "seed"}

# Config-file keys whose values are written in dB but whose SystemConfig
# field is a linear scalar; converted exactly once at load time.
_DB_TO_LINEAR_KEYS = {"tx_distortion", "rx_distortion", "si_cancellation"}

# Keys consumed by the experiment harness rather than SystemConfig.
EXPERIMENT_KEYS = {
    "experiment",
    "methods",
    "monte_carlo_iters",
    "si_levels_db",
    "antenna_counts",
    "output_path",
}

_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)}


def _parse_scalar(key: str, raw: str) -> float | int:
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r}: {raw!r}") from exc


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` text; '#' starts a comment."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def load_config(path: str) -> tuple[SystemConfig, dict[str, str]]:
    """Load a config file.

    Returns the :class:`SystemConfig` plus the raw experiment-level
    key/value pairs (interpreted by the harness).  Unknown keys are errors.
    """
    with open(path, "r", encoding="utf-8") as fh:
        pairs = parse_kv_text(fh.read(), source=path)

    cfg_kwargs: dict[str, float | int] = {}
    experiment_pairs: dict[str, str] = {}
    for key, raw in pairs.items():
        if key in _SYSTEM_KEYS:
            value = _parse_scalar(key, raw)
            if key in _DB_TO_LINEAR_KEYS:
                value = db_to_linear(float(value))
            cfg_kwargs[key] = value
        elif key in EXPERIMENT_KEYS:
            experiment_pairs[key] = raw
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")

    return SystemConfig(**cfg_kwargs), experiment_pairs
