"""Tolerances and solver knobs shared by the numeric paths."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Config:
    # singular values below tol_rank * max(sigma_max, 1) count as zero
    tol_rank: float = 1e-8
    # pointwise zero test for float-valued form evaluations
    tol_zero: float = 1e-9
    # Gauss equation residual (max norm) accepted by the solver
    tol_residual: float = 1e-9
    # smallest/largest singular value of the independent H-vectors
    tol_independence: float = 1e-6
    max_iters: int = 500
    starts: int = 8
    seed: int = 0
    # radius of base-point perturbations used to sample regularity
    regularity_radius: float = 1e-3
    regularity_samples: int = 3

    def with_overrides(self, **kw) -> "Config":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Config()
