"""
Parameters management.
"""

import json
import tomllib

from pathlib import Path
from typing import (
    Any,
    Literal,
    Optional,
)

from pydantic import (
    BaseModel,
    Field,
    PositiveFloat,
    PositiveInt,
)

from . import logger

WeightMethod = Literal["incomplete_gamma", "quadrature"]


class TruncationPolicy(BaseModel, extra="forbid", frozen=True):
    d_cutoff: int = Field(
        default=10_000,
        ge=10,
        title="d cutoff",
        description="Last index of the d-sum of the double series and of the moment scans",
    )
    m_cutoff: int = Field(
        default=1_000,
        ge=10,
        title="m cutoff",
        description="Last index of the m-sum on the swapped and reflected sides",
    )
    tail_exponent_margin: PositiveFloat = Field(
        default=0.5,
        title="Region margin",
        description="""
        Minimal distance to the boundary of the absolute convergence
        regions, it also drives the tail estimate of truncated sums.
        """,
    )
    tolerance: PositiveFloat = Field(
        default=1e-10,
        title="Tolerance",
        description="Target absolute error for L-values and Euler products",
    )
    afe_truncation: PositiveFloat = Field(
        default=12.0,
        title="AFE truncation",
        description="""
        The smoothed sum of the approximate functional equation is cut at
        n <= T * sqrt(c0 * d0 * q).
        """,
    )
    weight_method: WeightMethod = Field(
        default="incomplete_gamma",
        title="Weight method",
        description="""
        How the weight function G is evaluated: `incomplete_gamma` uses the
        closed form, `quadrature` integrates along a vertical line.
        """,
    )
    weight_line: PositiveFloat = Field(
        default=2.0,
        title="Quadrature line",
        description="Real part of the integration line of the weight function",
    )
    weight_height: PositiveFloat = Field(
        default=60.0,
        title="Quadrature height",
        description="The integration line is truncated at |Im s| <= height",
    )
    weight_step: PositiveFloat = Field(
        default=0.02,
        title="Quadrature step",
        description="Trapezoid step on the integration line",
    )
    prime_cutoff: int = Field(
        default=20_000,
        ge=10,
        title="Prime cutoff",
        description="Largest prime used in truncated Euler products",
    )
    hurwitz_terms: int = Field(
        default=12,
        ge=2,
        le=30,
        title="Euler-Maclaurin terms",
        description="Number of Bernoulli correction terms in the Hurwitz zeta evaluation",
    )
    block_size: PositiveInt = Field(
        default=4096,
        title="Reduction block size",
        description="""
        Long sums are reduced block by block in index order.
        Results depend on the block size but never on the thread count.
        """,
    )
    threads: PositiveInt = Field(
        default=1,
        title="Threads",
        description="Number of worker threads for block evaluation",
    )
    certify_factor: PositiveFloat = Field(
        default=10.0,
        title="Certification factor",
        description="A value is certified nonzero when |value| > factor * abs_error",
    )

    def with_cutoff(self, cutoff: int) -> "TruncationPolicy":
        return self.model_copy(update={"d_cutoff": cutoff, "m_cutoff": cutoff})


class RunParameters(BaseModel, extra="forbid"):
    policy: TruncationPolicy = Field(
        default=TruncationPolicy(),
        title="Truncation policy",
    )
    seed: int = Field(
        default=20240101,
        ge=0,
        title="Seed",
        description="Seed of the PCG64 generator used for random draws",
    )
    out: Optional[Path] = Field(
        default=None,
        title="Output file",
        description="Data file; the run manifest is written next to it",
    )
    cache: Optional[Path] = Field(
        default=None,
        title="L-value cache",
        description="Append-only CSV cache of central values",
    )


CONFIG_SECTION = "ddseries"


def find_config_file(rootdir: Path) -> Optional[Path]:
    """Find candidate config file"""
    for file in (
        "pyproject.toml",
        "ddseries.toml",
        ".ddseries.toml",
        "ddseries.json",
    ):
        p = rootdir.joinpath(file)
        if p.exists() and (p.stem != "pyproject" or _has_tool_section(p)):
            return p
    else:
        return None


def _has_tool_section(path: Path) -> bool:
    with path.open("rb") as fh:
        return CONFIG_SECTION in tomllib.load(fh).get("tool", {})


def read_config_from_file(path: Path) -> dict[str, Any]:
    """Read bare configuration from file

    JSON files are read as is; TOML files are read from the
    `ddseries` table (`tool.ddseries` in pyproject.toml).
    """
    if path.suffix == ".json":
        config = json.loads(path.read_text(encoding="utf-8"))
        logger.debug("== Read JSON config from %s", path)
        return config

    with path.open("rb") as fh:
        config = tomllib.load(fh)
        logger.debug("== Read config from %s", path)
        if path.stem == "pyproject":
            return config.get("tool", {}).get(CONFIG_SECTION, {})

        return config.get(CONFIG_SECTION, config)


def _merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_parameters(
    rootdir: Optional[Path] = None,
    config: Optional[Path] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunParameters:
    """Load parameters

    Precedence: overrides (command line flags) > config file > defaults.
    Policy fields may be given at the top level of the overrides.
    """
    if config is None:
        config = find_config_file(rootdir or Path.cwd())

    data = read_config_from_file(config) if config else {}

    overrides = dict(overrides or {})
    policy_fields = set(TruncationPolicy.model_fields)
    policy_overrides = {k: overrides.pop(k) for k in list(overrides) if k in policy_fields}
    if policy_overrides:
        overrides["policy"] = policy_overrides

    data = _merge(data, overrides)
    logger.debug("== Parameters: %s", data)
    return RunParameters.model_validate(data)
