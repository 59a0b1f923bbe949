"""Per-model token timing profiles.

The shipped ``table1_profiles.csv`` transcribes the 16 local-host
mean/std inter-token times; spike and response parameters are identical
across models so that class separability comes from the timing moments
alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from ..trace_model import ModelLabel, TraceError

DISTRIBUTIONS = ("truncnorm", "lognormal")

PROFILE_COLUMNS = (
    "family",
    "variant",
    "mean_itt",
    "std_itt",
    "spike_prob",
    "spike_scale",
    "tokens_min",
    "tokens_max",
    "distribution",
)


@dataclass(frozen=True)
class ModelProfile:
    """Generative parameters for one model's token stream."""

    label: ModelLabel
    mean_itt: float
    std_itt: float
    spike_prob: float = 0.0
    spike_scale: float = 1.0
    tokens_per_response: tuple[int, int] = (80, 400)
    distribution: str = "truncnorm"

    def __post_init__(self):
        if self.mean_itt <= 0:
            raise TraceError("mean_itt must be positive")
        if self.std_itt < 0:
            raise TraceError("std_itt must be non-negative")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise TraceError("spike_prob must be in [0, 1]")
        lo, hi = self.tokens_per_response
        if lo < 2 or hi < lo:
            raise TraceError("tokens_per_response must be a range with lo >= 2")
        if self.distribution not in DISTRIBUTIONS:
            raise TraceError(f"unknown distribution {self.distribution!r}")


def load_profiles(path: Path | str) -> list[ModelProfile]:
    """Read a profiles CSV; class indices follow row order."""
    path = Path(path)
    profiles: list[ModelProfile] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != PROFILE_COLUMNS:
            raise TraceError(f"{path}: expected columns {','.join(PROFILE_COLUMNS)}")
        for idx, row in enumerate(reader):
            try:
                profiles.append(
                    ModelProfile(
                        label=ModelLabel(row["family"], row["variant"], idx),
                        mean_itt=float(row["mean_itt"]),
                        std_itt=float(row["std_itt"]),
                        spike_prob=float(row["spike_prob"]),
                        spike_scale=float(row["spike_scale"]),
                        tokens_per_response=(int(row["tokens_min"]), int(row["tokens_max"])),
                        distribution=row["distribution"],
                    )
                )
            except (KeyError, ValueError) as exc:
                raise TraceError(f"{path}: bad profile row {idx + 2}: {exc}") from None
    if not profiles:
        raise TraceError(f"{path}: no profiles")
    names = [p.label.name for p in profiles]
    if len(set(names)) != len(names):
        raise TraceError(f"{path}: duplicate profile labels")
    return profiles


def write_profiles(profiles: list[ModelProfile], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for p in profiles:
            writer.writerow(
                [
                    p.label.family,
                    p.label.variant,
                    f"{p.mean_itt:.9g}",
                    f"{p.std_itt:.9g}",
                    f"{p.spike_prob:.9g}",
                    f"{p.spike_scale:.9g}",
                    p.tokens_per_response[0],
                    p.tokens_per_response[1],
                    p.distribution,
                ]
            )


def table1_profiles() -> list[ModelProfile]:
    """The 16 shipped local-host profiles."""
    ref = resources.files("trfp.simulator").joinpath("data/table1_profiles.csv")
    with resources.as_file(ref) as path:
        return load_profiles(path)


def scale_profile(profile: ModelProfile, factor: float) -> ModelProfile:
    """Profile with mean/std scaled by ``factor`` (hardware what-ifs)."""
    return replace(profile, mean_itt=profile.mean_itt * factor, std_itt=profile.std_itt * factor)
