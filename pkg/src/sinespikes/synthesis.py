"""Seeded generation of random demixing instances.

Randomness is driven by the counter-based Philox generator with explicit
stream splitting: the instance seed spawns four independent substreams
(frequencies, amplitudes, outlier positions, outlier values), so results do
not depend on call order or threading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigurationError, SynthesisFailureError
from .model import MixtureInstance, min_separation

__all__ = [
    "AMPLITUDE_MODELS",
    "OUTLIER_MODES",
    "SynthesisConfig",
    "spread_total_outliers",
    "synth_frequencies",
    "synth_instance",
]

AMPLITUDE_MODELS = ("complex-gaussian", "unit-modulus-uniform-phase")
OUTLIER_MODES = ("per-snapshot", "distinct-sensors-overall")

_MAX_REJECTIONS = 10**6


def _streams(seed: int):
    """Four independent Philox generators derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _complex_gaussian(rng, shape):
    # standard complex normal: unit total variance per entry
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _unit_phases(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


@dataclass(frozen=True)
class SynthesisConfig:
    """Describes one random instance.

    Frequencies are either given explicitly (``frequencies``) or drawn by
    rejection sampling (``n_frequencies`` points with pairwise wrap distance
    at least ``min_separation``).

    Outlier counts per snapshot come from ``s_per_snapshot``, or from
    ``total_outliers`` which is spread over the snapshots as evenly as
    possible (randomized assignment of the remainder).
    """

    n_sensors: int
    n_snapshots: int
    frequencies: tuple | None = None
    n_frequencies: int | None = None
    min_separation: float | None = None
    amplitude_model: str = "complex-gaussian"
    s_per_snapshot: int = 0
    total_outliers: int | None = None
    outlier_mode: str = "per-snapshot"
    outlier_magnitude: float = 1.0
    outlier_value_model: str = "unit-modulus"
    seed: int = 0

    def __post_init__(self):
        if self.n_sensors < 1 or self.n_snapshots < 1:
            raise InvalidConfigurationError("need at least one sensor and snapshot")
        if self.frequencies is None and self.n_frequencies is None:
            raise InvalidConfigurationError(
                "give frequencies explicitly or set n_frequencies"
            )
        if self.amplitude_model not in AMPLITUDE_MODELS:
            raise InvalidConfigurationError(
                f"unknown amplitude model {self.amplitude_model!r}"
            )
        if self.outlier_mode not in OUTLIER_MODES:
            raise InvalidConfigurationError(
                f"unknown outlier mode {self.outlier_mode!r}"
            )
        if self.outlier_value_model not in ("unit-modulus", "complex-gaussian"):
            raise InvalidConfigurationError(
                f"unknown outlier value model {self.outlier_value_model!r}"
            )
        if self.outlier_magnitude <= 0:
            raise InvalidConfigurationError("outlier magnitude must be positive")
        if self.s_per_snapshot < 0:
            raise InvalidConfigurationError("s_per_snapshot must be nonnegative")
        if self.s_per_snapshot > self.n_sensors:
            raise InvalidConfigurationError("more outliers per snapshot than sensors")
        if (self.outlier_mode == "distinct-sensors-overall"
                and self.total_outliers is None
                and self.s_per_snapshot * self.n_snapshots > self.n_sensors):
            raise InvalidConfigurationError(
                "distinct-sensor mode cannot place "
                f"{self.s_per_snapshot * self.n_snapshots} outliers on {self.n_sensors} sensors"
            )


def spread_total_outliers(total: int, n_snapshots: int, rng) -> np.ndarray:
    """Spread ``total`` outliers over snapshots as evenly as possible.

    The snapshots receiving the remainder are chosen uniformly at random.
    """
    if total < 0:
        raise InvalidConfigurationError("total outlier count must be nonnegative")
    base, extra = divmod(total, n_snapshots)
    counts = np.full(n_snapshots, base, dtype=int)
    if extra:
        counts[rng.choice(n_snapshots, extra, replace=False)] += 1
    return counts


def synth_frequencies(n_frequencies: int, delta_min: float, seed_or_rng) -> np.ndarray:
    """Draw frequencies uniformly, rejecting sets separated by < ``delta_min``."""
    if n_frequencies < 1:
        raise InvalidConfigurationError("need at least one frequency")
    if n_frequencies * delta_min > 1.0:
        raise InvalidConfigurationError(
            f"{n_frequencies} frequencies at separation {delta_min} do not fit on the circle"
        )
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_or_rng))))
    if n_frequencies == 1:
        return np.array([rng.random()])
    for _ in range(_MAX_REJECTIONS):
        f = rng.random(n_frequencies)
        if min_separation(f) >= delta_min:
            return np.sort(f)
    raise SynthesisFailureError(
        f"no admissible frequency set after {_MAX_REJECTIONS} draws"
    )


def _outlier_columns(cfg: SynthesisConfig, counts: np.ndarray, rng) -> list[np.ndarray]:
    """Row indices of the outliers in each snapshot, per the support mode."""
    n, l = cfg.n_sensors, cfg.n_snapshots
    if cfg.outlier_mode == "distinct-sensors-overall":
        total = int(counts.sum())
        if total > n:
            raise InvalidConfigurationError(
                f"distinct-sensor mode needs {total} sensors but only {n} exist"
            )
        rows = rng.choice(n, total, replace=False)
        splits = np.cumsum(counts)[:-1]
        return [np.sort(part) for part in np.split(rows, splits)]
    return [np.sort(rng.choice(n, int(counts[col]), replace=False)) for col in range(l)]


def synth_instance(cfg: SynthesisConfig) -> MixtureInstance:
    """Generate one instance; identical configs yield bit-identical output."""
    rng_f, rng_a, rng_pos, rng_val = _streams(cfg.seed)
    n, l = cfg.n_sensors, cfg.n_snapshots

    if cfg.frequencies is not None:
        freqs = np.asarray(cfg.frequencies, dtype=float) % 1.0
    else:
        if cfg.min_separation is None:
            freqs = np.sort(rng_f.random(cfg.n_frequencies))
        else:
            freqs = synth_frequencies(cfg.n_frequencies, cfg.min_separation, rng_f)
    k = freqs.size

    if cfg.amplitude_model == "complex-gaussian":
        amplitudes = _complex_gaussian(rng_a, (k, l))
    else:
        amplitudes = _unit_phases(rng_a, (k, l))

    if cfg.total_outliers is not None:
        counts = spread_total_outliers(cfg.total_outliers, l, rng_pos)
    else:
        counts = np.full(l, cfg.s_per_snapshot, dtype=int)
    columns = _outlier_columns(cfg, counts, rng_pos)

    outliers = np.zeros((n, l), dtype=complex)
    for col, rows in enumerate(columns):
        if rows.size == 0:
            continue
        if cfg.outlier_value_model == "unit-modulus":
            vals = _unit_phases(rng_val, rows.size)
        else:
            vals = _complex_gaussian(rng_val, rows.size)
        outliers[rows, col] = cfg.outlier_magnitude * vals

    support = np.unique(np.concatenate([c for c in columns] or [np.array([], int)]))
    return MixtureInstance.from_components(
        freqs, amplitudes, outliers, outlier_rows=support, seed=cfg.seed
    )
