"""Velocity ladders and the train/validation/test split protocol.

The full-scale protocol uses 50 conditions on [0.10, 0.60] m/s (0.40
excluded), five of them for validation, and holds out 0.40 m/s
(interpolation) and 0.70 m/s (extrapolation) as the test pair.  The desk
ladder follows the same pattern over 17 cases.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .fields import CaseMeta

FULL_VAL_VELOCITIES = (0.1, 0.2, 0.3, 0.5, 0.6)
TEST_VELOCITIES = (0.4, 0.7)

DESK_VAL_VELOCITIES = (0.1, 0.3, 0.6)


def paper_ladder() -> list[float]:
    """52 velocities: 50 train/val on [0.10, 0.60] plus the test pair."""
    vals = [round(0.10 + 0.01 * i, 2) for i in range(51)]
    vals.remove(0.4)
    return vals + list(TEST_VELOCITIES)


def desk_ladder() -> list[float]:
    """17 velocities: 15 train/val on [0.10, 0.60] plus the test pair."""
    vals = [
        0.10, 0.125, 0.15, 0.175, 0.20, 0.225, 0.25, 0.275,
        0.30, 0.325, 0.35, 0.45, 0.50, 0.55, 0.60,
    ]
    return vals + list(TEST_VELOCITIES)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[CaseMeta, ...]
    val: tuple[CaseMeta, ...]
    test: tuple[CaseMeta, ...]

    def __post_init__(self):
        groups = [
            {m.inlet_velocity for m in part} for part in (self.train, self.val, self.test)
        ]
        for i in range(3):
            for j in range(i + 1, 3):
                if groups[i] & groups[j]:
                    raise ConfigError(f"split groups overlap on {groups[i] & groups[j]}")

    @property
    def all_cases(self) -> tuple[CaseMeta, ...]:
        return self.train + self.val + self.test


def make_split(
    velocities: list[float],
    *,
    field_kind: str,
    n_timesteps: int,
    snapshot_interval: float,
    val_velocities: tuple[float, ...] | None = None,
    test_velocities: tuple[float, ...] = TEST_VELOCITIES,
) -> DatasetSplit:
    """Partition a velocity ladder into train/val/test case metadata."""
    vset = list(velocities)
    if len(set(vset)) != len(vset):
        raise ConfigError("velocity ladder contains duplicates")
    if val_velocities is None:
        val_velocities = tuple(v for v in FULL_VAL_VELOCITIES if v in vset) or None
        if val_velocities is None:
            raise ConfigError("no validation velocities found in the ladder")
    for v in tuple(val_velocities) + tuple(test_velocities):
        if v not in vset:
            raise ConfigError(f"designated velocity {v} missing from the ladder")
    if set(val_velocities) & set(test_velocities):
        raise ConfigError("validation and test velocities overlap")

    non_test = [v for v in vset if v not in test_velocities]
    if non_test:
        lo, hi = min(non_test), max(non_test)
        interp = [v for v in test_velocities if lo <= v <= hi]
        extrap = [v for v in test_velocities if v < lo or v > hi]
        if not interp or not extrap:
            raise ConfigError(
                "test velocities must contain an interpolation and an extrapolation case"
            )

    def metas(vs):
        return tuple(
            CaseMeta(v, field_kind, n_timesteps, snapshot_interval) for v in vs
        )

    train = [v for v in non_test if v not in val_velocities]
    return DatasetSplit(metas(train), metas(val_velocities), metas(test_velocities))
