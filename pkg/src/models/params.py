"""
Scalar knobs of the toolkit with validation.

This module provides:
- Canonical occupancy grid settings
- Occupancy field parameters
- Loss weights
- Window and control-rate settings
- Baseline policy limits and metric thresholds
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    """Base for configuration models: unknown keys are rejected"""

    model_config = ConfigDict(extra="forbid")


class CanonicalOccupancyConfig(StrictModel):
    """Egocentric occupancy grid sampled around the human each control step"""

    size: int = Field(25, ge=1, description="Cells per side")
    unit: float = Field(0.08, gt=0, description="Cell edge length (m)")
    forward_offset: Optional[float] = Field(
        None, description="Grid center offset along the facing direction (m); default size*unit/4"
    )
    conservative: bool = Field(False, description="Mark a cell if any of its 8 corners is occupied")

    @property
    def offset(self) -> float:
        if self.forward_offset is not None:
            return self.forward_offset
        return self.size * self.unit / 4.0


class NormOrder(str, Enum):
    """Norm used for voxel distances in the occupancy field"""

    L1 = "1"
    L2 = "2"
    LINF = "inf"

    @property
    def ord(self) -> float:
        return float(self.value)


class FieldParams(StrictModel):
    """Occupancy field parameters"""

    k: float = Field(0.05, ge=0, description="Stiffness factor")
    norm: NormOrder = Field(NormOrder.L2, description="Distance norm order a")
    gamma: float = Field(0.20, ge=0, description="Inner threshold (m), body half-width")
    influence_radius: float = Field(1.0, gt=0, description="Distance (m) where the field vanishes when b is derived")
    b: Optional[float] = Field(None, ge=0, description="Outer falloff (1/m); default 1/(influence_radius - gamma)")
    c_max: float = Field(1.0, gt=0, le=1, description="Correction cap as a fraction of |v|")
    full_body: bool = Field(False, description="Regulate every joint instead of root, hands and feet")

    @model_validator(mode="after")
    def derive_falloff(self):
        if self.b is None:
            if self.influence_radius <= self.gamma:
                raise ValueError("influence_radius must exceed gamma")
            self.b = 1.0 / (self.influence_radius - self.gamma)
        return self

    @property
    def cutoff(self) -> float:
        """Distance beyond which a voxel contributes exactly zero"""
        if not self.b:
            return float("inf")
        return self.gamma + 1.0 / self.b


class LossWeights(StrictModel):
    """Weights of the total training objective"""

    alpha: float = Field(2.0, ge=0, description="Penetration loss weight")
    beta: float = Field(1.0, ge=0, description="Field loss weight")
    eps_v: float = Field(1e-6, gt=0, description="Speed floor (m/s) for the field-loss ratio term")
    field_root_only: bool = Field(False, description="Field-loss ratio term on the root only")


class WindowConfig(StrictModel):
    """History/future windows and control rate"""

    history: int = Field(1, ge=1, description="History window w (frames)")
    future: int = Field(1, ge=1, description="Future window f (frames)")
    rate: float = Field(10.0, gt=0, description="Control rate (Hz)")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate


class PolicyLimits(StrictModel):
    """Limits of the analytic baseline policy"""

    v_max: float = Field(1.4, gt=0, description="Maximum root speed (m/s)")
    turn_max_deg: float = Field(120.0, gt=0, description="Maximum yaw rate (deg/s)")
    ee_blend_rate: float = Field(1.0, gt=0, description="End-effector offset blend speed (m/s)")
    blend_radius: float = Field(1.0, gt=0, description="Root-goal distance where end-effectors start blending (m)")
    face_radius: float = Field(0.5, ge=0, description="Root-goal distance below which the target facing is adopted (m)")
    v_vertical: float = Field(0.5, gt=0, description="Maximum root height change (m/s)")


class MetricThresholds(StrictModel):
    """Thresholds of the evaluation suite"""

    success_distance: float = Field(0.20, gt=0, description="Mean 5-point distance for success (m)")
    success_penetration: int = Field(50, ge=1, description="Penetrated voxels must stay below this count")
    contact_height: float = Field(0.05, gt=0, description="Foot height below which a foot is grounded (m)")
    slide_speed: float = Field(0.075, gt=0, description="Horizontal foot speed above which a grounded foot slides (m/s)")


class CylinderSpec(StrictModel):
    """Rigid agent used by the path feasibility analysis"""

    radius: float = Field(0.25, gt=0)
    height: float = Field(1.7, gt=0)
    ground_z: float = Field(0.0)
