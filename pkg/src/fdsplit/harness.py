"""Monte Carlo orchestration, CSV persistence and result aggregation.

All methods at one (sweep point, realization) consume the identical channel
draw, so comparisons are paired; the channel digest is attached to every
in-memory record and asserted equal across methods.  Output is a pure
function of (config, flags): records are emitted in canonical
(point, realization, method) order with fixed number formatting, and the
``wall_ms`` column is written as 0 unless timing is explicitly requested
(measured times would break byte-identical reruns).
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .baselines import EXHAUSTIVE_MAX_ANTENNAS, exhaustive, split_result
from .channel import draw_realization, substream
from .config import CapacityError, ConfigError, SystemConfig, db_to_linear
from .solver import rlx_prox

CSV_HEADER = (
    "experiment,M,si_db,realization,method,sum_mse,sum_se_bits,"
    "iterations,converged,wall_ms,seed"
)

VALID_EXPERIMENTS = ("single", "cdf", "sweep_si", "sweep_antennas")
#: Canonical method order; fixes the record order within one realization.
METHOD_ORDER = ("EXH", "RLX", "SPLIT")


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    methods: tuple[str, ...]
    monte_carlo_iters: int
    si_levels_db: tuple[float, ...]
    antenna_counts: tuple[int, ...]
    output_path: str
    seed: int

    def __post_init__(self) -> None:
        if self.experiment not in VALID_EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for method in self.methods:
            if method not in METHOD_ORDER:
                raise ConfigError(f"unknown method {method!r}")
        if self.monte_carlo_iters < 0:
            raise ConfigError("monte_carlo_iters must be >= 0")
        if self.experiment == "sweep_si" and not self.si_levels_db:
            raise ConfigError("sweep_si needs at least one SI level")
        if self.experiment == "sweep_antennas":
            if not self.antenna_counts:
                raise ConfigError("sweep_antennas needs at least one antenna count")
            if "EXH" in self.methods and max(self.antenna_counts) > EXHAUSTIVE_MAX_ANTENNAS:
                raise CapacityError(
                    "EXH restricted to antenna counts <= "
                    f"{EXHAUSTIVE_MAX_ANTENNAS}; drop it or reduce the sweep"
                )


@dataclass(eq=False)
class RunRecord:
    experiment: str
    m: int
    si_db: float
    realization: int
    method: str
    sum_mse: float
    sum_se: float
    iterations: int
    converged: bool
    wall_ms: float
    seed_used: int
    channel_digest: str = ""  # in-memory pairing witness, not persisted


def sweep_points(spec: ExperimentSpec, cfg: SystemConfig) -> list[tuple[int, float, SystemConfig]]:
    """Resolve the (M, si_db, point config) tuples of one experiment."""
    if spec.experiment in ("single", "cdf"):
        return [(cfg.num_antennas, cfg.si_cancellation_db, cfg)]
    if spec.experiment == "sweep_si":
        return [
            (cfg.num_antennas, float(level),
             dataclasses.replace(cfg, si_cancellation=db_to_linear(float(level))))
            for level in spec.si_levels_db
        ]
    return [
        (int(m), cfg.si_cancellation_db, dataclasses.replace(cfg, num_antennas=int(m)))
        for m in spec.antenna_counts
    ]


def _format_float(value: float) -> str:
    if np.isnan(value):
        return "nan"
    return f"{value:.12g}"


def record_to_csv_row(record: RunRecord) -> str:
    return ",".join(
        (
            record.experiment,
            str(record.m),
            _format_float(record.si_db),
            str(record.realization),
            record.method,
            _format_float(record.sum_mse),
            _format_float(record.sum_se),
            str(record.iterations),
            "true" if record.converged else "false",
            _format_float(record.wall_ms),
            str(record.seed_used),
        )
    )


def _run_method(method: str, ch, cfg_point: SystemConfig, spec: ExperimentSpec,
                point_index: int, realization: int):
    """Returns (sum_mse, sum_se, iterations, converged)."""
    if method == "RLX":
        solver_rng = substream(spec.seed, point_index, realization, 1)
        result = rlx_prox(ch, cfg_point, rng=solver_rng)
        return result.sum_mse, result.sum_se, result.iterations_used, result.converged
    if method == "EXH":
        result = exhaustive(ch)
        return result.sum_mse, result.sum_se, result.evaluations, True
    result = split_result(ch, cfg_point)
    return result.sum_mse, result.sum_se, 0, True


def run_experiment(
    spec: ExperimentSpec,
    cfg: SystemConfig,
    timing: bool = False,
    progress=None,
) -> list[RunRecord]:
    """Execute one experiment and stream records to ``spec.output_path``.

    Every method at a sweep point sees the same channel draw.  A method
    raising on one realization yields a failed record (NaN metrics,
    converged=false) and the run continues.  I/O errors propagate.
    """
    if "EXH" in spec.methods:
        for m, _, _ in sweep_points(spec, cfg):
            if m > EXHAUSTIVE_MAX_ANTENNAS:
                raise CapacityError(
                    f"EXH cannot enumerate M={m} (> {EXHAUSTIVE_MAX_ANTENNAS})"
                )

    methods = tuple(m for m in METHOD_ORDER if m in spec.methods)
    records: list[RunRecord] = []
    points = sweep_points(spec, cfg)

    with open(spec.output_path, "w", encoding="utf-8", newline="\n") as out:
        out.write(CSV_HEADER + "\n")
        for point_index, (m, si_db, cfg_point) in enumerate(points):
            for realization in range(spec.monte_carlo_iters):
                channel_rng = substream(spec.seed, point_index, realization, 0)
                seed_used = int(
                    np.random.SeedSequence(
                        [spec.seed, point_index, realization, 0]
                    ).generate_state(1, np.uint64)[0]
                )
                ch = draw_realization(cfg_point, channel_rng)
                digest = ch.digest()
                for method in methods:
                    started = time.perf_counter()
                    try:
                        sum_mse, sum_se, iterations, converged = _run_method(
                            method, ch, cfg_point, spec, point_index, realization
                        )
                    except Exception:
                        sum_mse, sum_se, iterations, converged = (
                            float("nan"), float("nan"), 0, False,
                        )
                    elapsed_ms = (time.perf_counter() - started) * 1e3
                    record = RunRecord(
                        experiment=spec.experiment,
                        m=m,
                        si_db=si_db,
                        realization=realization,
                        method=method,
                        sum_mse=sum_mse,
                        sum_se=sum_se,
                        iterations=iterations,
                        converged=converged,
                        wall_ms=elapsed_ms if timing else 0.0,
                        seed_used=seed_used,
                        channel_digest=digest,
                    )
                    assert record.channel_digest == digest  # paired by construction
                    records.append(record)
                    out.write(record_to_csv_row(record) + "\n")
                if progress is not None:
                    progress(point_index, len(points), realization, spec.monte_carlo_iters)
    return records


def aggregate_cdf(records: list[RunRecord], method: str) -> list[tuple[float, float]]:
    """Empirical CDF points (ascending SE, probability k/N) for one method."""
    values = sorted(r.sum_se for r in records if r.method == method and not np.isnan(r.sum_se))
    if not values:
        raise ValueError(f"no records for method {method!r}")
    n = len(values)
    return [(v, (k + 1) / n) for k, v in enumerate(values)]


def aggregate_mean(
    records: list[RunRecord], keys: tuple[str, ...]
) -> dict[tuple, float]:
    """Mean sum SE grouped by the given RunRecord attributes.

    Failed records (NaN SE) are excluded; groups left empty are omitted.
    """
    groups: dict[tuple, list[float]] = {}
    for record in records:
        if np.isnan(record.sum_se):
            continue
        group = tuple(getattr(record, key) for key in keys)
        groups.setdefault(group, []).append(record.sum_se)
    return {group: float(np.mean(vals)) for group, vals in groups.items() if vals}


def load_records_csv(path: str) -> list[RunRecord]:
    """Read back a results CSV produced by :func:`run_experiment`."""
    records: list[RunRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 11:
                raise ConfigError(f"{path}: malformed row {line!r}")
            records.append(
                RunRecord(
                    experiment=parts[0],
                    m=int(parts[1]),
                    si_db=float(parts[2]),
                    realization=int(parts[3]),
                    method=parts[4],
                    sum_mse=float(parts[5]),
                    sum_se=float(parts[6]),
                    iterations=int(parts[7]),
                    converged=parts[8] == "true",
                    wall_ms=float(parts[9]),
                    seed_used=int(parts[10]),
                )
            )
    return records


def build_spec(
    experiment: str,
    cfg: SystemConfig,
    experiment_pairs: dict[str, str] | None = None,
    *,
    methods: str | None = None,
    iters: int | None = None,
    output_path: str | None = None,
    seed: int | None = None,
    si_levels_db: tuple[float, ...] | None = None,
    antenna_counts: tuple[int, ...] | None = None,
    defaults: dict | None = None,
) -> ExperimentSpec:
    """Merge config-file pairs, profile defaults, and CLI overrides.

    Precedence (lowest to highest): profile defaults, config file, CLI.
    """
    pairs = dict(experiment_pairs or {})
    defaults = dict(defaults or {})

    def pick(name: str, override, parser):
        if override is not None:
            return override
        if name in pairs:
            return parser(pairs[name])
        return defaults[name]

    def parse_methods(raw: str) -> tuple[str, ...]:
        return tuple(part.strip().upper() for part in raw.split(",") if part.strip())

    def parse_floats(raw: str) -> tuple[float, ...]:
        return tuple(float(part) for part in raw.split(",") if part.strip())

    def parse_ints(raw: str) -> tuple[int, ...]:
        return tuple(int(part) for part in raw.split(",") if part.strip())

    try:
        spec = ExperimentSpec(
            experiment=experiment,
            methods=pick("methods", parse_methods(methods) if methods else None, parse_methods),
            monte_carlo_iters=int(pick("monte_carlo_iters", iters, int)),
            si_levels_db=pick("si_levels_db", si_levels_db, parse_floats),
            antenna_counts=pick("antenna_counts", antenna_counts, parse_ints),
            output_path=pick("output_path", output_path, str),
            seed=int(seed) if seed is not None else cfg.seed,
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid experiment settings: {exc}") from exc
    return spec
