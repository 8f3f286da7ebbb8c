"""Python access to the muzero-audit core."""

from ._core import (
    EnvState,
    Environment,
    contract,
    default_config,
    expand,
    make_environment,
    run_cli,
    scalar_to_support,
    support_to_scalar,
)

__all__ = [
    "EnvState",
    "Environment",
    "contract",
    "default_config",
    "expand",
    "make_environment",
    "run_cli",
    "scalar_to_support",
    "support_to_scalar",
]
