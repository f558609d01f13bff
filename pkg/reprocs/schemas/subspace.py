"""
Schema for recursive PCA parameters.

Version: 1.0
"""

from typing import Optional

from pydantic import BaseModel, Field, root_validator, validator  # pydantic v1.10+

UPDATE_TRIGGERS = ("period", "epsilon")


class SubspaceConfig(BaseModel):
    """
    Initialization and update parameters of the principal-components estimate.
    """
    tau: int = Field(default=20, gt=0, description="Update period in frames")
    alpha: Optional[float] = Field(default=None, ge=0.0, description="Variance threshold; default 0.5 sigma_min^2 per frame")
    alpha0: float = Field(default=0.0, ge=0.0, description="Initialization singular-value threshold")
    energy: Optional[float] = Field(default=None, gt=0.0, le=100.0, description="p%-energy initialization request")
    subtract_mean: bool = False
    update_trigger: str = "period"
    epsilon_threshold: Optional[float] = Field(default=None, gt=0.0)
    checkpoint: Optional[str] = Field(default=None, description="Precomputed basis checkpoint file")

    @validator("update_trigger")
    def validate_trigger(cls, v: str) -> str:
        if v not in UPDATE_TRIGGERS:
            raise ValueError(f"update_trigger must be one of {UPDATE_TRIGGERS}")
        return v

    @root_validator(skip_on_failure=True)
    def validate_threshold(cls, values):
        """The epsilon trigger needs a user-supplied threshold."""
        if values.get("update_trigger") == "epsilon" and values.get("epsilon_threshold") is None:
            raise ValueError("epsilon_threshold is required when update_trigger = 'epsilon'")
        return values

    class Config:
        extra = "forbid"
