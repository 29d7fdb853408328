"""Dense linear and multilinear algebra driven by control trees."""

from ._core import (
    AliasingError,
    ConfigError,
    ContractError,
    DimensionError,
    Error,
    InvalidControlTree,
    NotPositiveDefinite,
    SingularMatrix,
    cholesky,
    contract,
    default_tree,
    describe,
    enumerate_trees,
    gemm,
    lu,
    lu_solve,
    ltlt,
    pfaffian,
    qr,
)

__all__ = [
    "AliasingError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "Error",
    "InvalidControlTree",
    "NotPositiveDefinite",
    "SingularMatrix",
    "cholesky",
    "contract",
    "default_tree",
    "describe",
    "enumerate_trees",
    "gemm",
    "lu",
    "lu_solve",
    "ltlt",
    "pfaffian",
    "qr",
]
