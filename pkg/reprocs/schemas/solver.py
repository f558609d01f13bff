"""
Schema for the constrained l1 / modified-CS solver.

Version: 1.0
"""

from typing import List

from pydantic import BaseModel, Field, validator  # pydantic v1.10+

from reprocs.core.constants import DEFAULT_MAX_ITERS, DEFAULT_TOL


class SolveConfig(BaseModel):
    """
    Solver settings: minimize ||s_{T^c}||_1 subject to ||y - A s||_2 <= epsilon.
    """
    epsilon: float = Field(default=0.0, ge=0.0, description="Constraint radius")
    known_support: List[int] = Field(default_factory=list, description="Partial support T with zero l1 weight")
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, gt=0)
    tol: float = Field(default=DEFAULT_TOL, gt=0.0, lt=1.0)
    rho: float = Field(default=1.0, gt=0.0, description="Initial ADMM penalty")
    polish: bool = Field(default=True, description="Refit on the detected support when it does not worsen the objective")

    @validator("known_support")
    def validate_known_support(cls, v: List[int]) -> List[int]:
        """Known support must be nonnegative and duplicate-free."""
        if any(i < 0 for i in v):
            raise ValueError("known_support indices must be nonnegative")
        if len(set(v)) != len(v):
            raise ValueError("known_support contains duplicate indices")
        return v

    class Config:
        extra = "forbid"
        validate_assignment = True
