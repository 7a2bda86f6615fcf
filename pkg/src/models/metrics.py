"""
Evaluation and feasibility report schemas.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import Field

from models.params import StrictModel


class SuccessResult(StrictModel):
    """Goal reaching outcome of one episode"""

    success: bool
    min_distance: float = Field(..., ge=0, description="Minimum over frames of the mean target distance (m)")
    time: Optional[float] = Field(None, ge=0, description="First qualifying frame / rate (s)")
    frame: Optional[int] = None


class MetricReport(StrictModel):
    """Evaluation row; column order Suc., DT, Time, FS, PEN, ERP"""

    name: str
    episodes: int = Field(1, ge=1)
    success_rate: float = Field(..., ge=0, le=100, description="Suc. (%)")
    dt_cm: float = Field(..., ge=0, description="DT: minimum mean target distance (cm)")
    time_s: Optional[float] = Field(None, ge=0, description="Time to reach, successes only (s)")
    fs_percent: float = Field(..., ge=0, le=100, description="FS: foot sliding frames (%)")
    pen: float = Field(..., ge=0, description="PEN: penetrated voxels per frame")
    erp: Optional[float] = Field(None, ge=0, description="ERP to the reference root trajectory")


class InfeasibleReason(str, Enum):
    START_BLOCKED = "start_blocked"
    GOAL_BLOCKED = "goal_blocked"
    NO_PATH = "no_path"
    OUT_OF_BOUNDS = "out_of_bounds"


class FeasibilityResult(StrictModel):
    """Rigid cylinder path search outcome"""

    feasible: bool
    reason: Optional[InfeasibleReason] = None
    path: List[Tuple[float, float]] = Field(default_factory=list, description="World (x, y) waypoints")
    length: Optional[float] = Field(None, ge=0, description="Path length (m)")
    expanded: int = Field(0, ge=0, description="Cells expanded by the search")


class FeasibilitySummary(StrictModel):
    """Batch feasibility outcome"""

    total: int = Field(..., ge=0)
    infeasible: int = Field(..., ge=0)
    failed: int = Field(0, ge=0, description="Grids that could not be analysed")
    infeasible_fraction: float = Field(..., ge=0, le=1)


class EvaluationReport(StrictModel):
    """Per-item rows and their aggregate"""

    rows: List[MetricReport] = Field(default_factory=list)
    total: MetricReport
