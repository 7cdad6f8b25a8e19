from typing import Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from bevtrack.model.geometry import Vec3


class TrackerConfig(BaseModel):
    """
    Configuration of the query-propagation tracker.

    Defaults follow the desk-scale setting: 2 Hz keyframes, a 1.5 s query
    queue, 4.0 s forecasts and 2.0 s of track extension.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    d: int = Field(default=32, ge=2)
    tau_h: int = Field(default=3, ge=1)
    tau_f: int = Field(default=8, ge=1)
    tau_e: int = Field(default=4, ge=0)
    theta_init: float = 0.4
    theta_out: float = 0.2
    theta_ext: float = 0.4
    max_output: int = Field(default=300, ge=1)
    region_min: Vec3 = (-51.2, -51.2, -5.0)
    region_max: Vec3 = (51.2, 51.2, 3.0)
    frame_period: float = Field(default=0.5, gt=0.0)

    # decoder surrogate
    gate_radius: float = Field(default=2.0, gt=0.0)
    feature_blend: float = Field(default=0.5, gt=0.0, lt=1.0)
    detection_queries: int = Field(default=500, ge=1)

    # coasted boxes
    score_decay: float = Field(default=0.9, gt=0.0, le=1.0)

    # attention blocks
    n_heads: int = Field(default=4, ge=1)
    n_layers: int = Field(default=2, ge=1)
    time_pe_dim: int = Field(default=16, ge=2)
    pos_pe_dim: int = Field(default=24, ge=6)
    pe_base: float = Field(default=10000.0, gt=1.0)

    # ablations
    propagation: Literal["forecast", "velocity"] = "forecast"
    use_cross_frame: bool = True
    use_cross_object: bool = True
    use_track_refinement: bool = True

    @model_validator(mode="after")
    def _check_invariants(self) -> Self:
        if self.tau_e >= self.tau_f:
            raise ValueError(f"tau_e ({self.tau_e}) must be smaller than tau_f ({self.tau_f})")
        if not 0.0 < self.theta_out <= self.theta_init <= 1.0:
            raise ValueError("thresholds must satisfy 0 < theta_out <= theta_init <= 1")
        if not 0.0 < self.theta_ext <= 1.0:
            raise ValueError("theta_ext must lie in (0, 1]")
        if self.d % self.n_heads:
            raise ValueError(f"d ({self.d}) must be divisible by n_heads ({self.n_heads})")
        if self.time_pe_dim % 2:
            raise ValueError("time_pe_dim must be even")
        if self.pos_pe_dim % 6:
            raise ValueError("pos_pe_dim must be divisible by 6")
        if any(lo >= hi for lo, hi in zip(self.region_min, self.region_max)):
            raise ValueError("region_min must be below region_max on every axis")
        return self

    @property
    def head_dim(self) -> int:
        return self.d // self.n_heads


class LossConfig(BaseModel):
    """
    Loss weights. The detector-stage terms score the decoder stub's own boxes
    and carry no gradient; the refinement and motion terms train the heads.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda_box_d: float = Field(default=0.25, ge=0.0, allow_inf_nan=False)
    lambda_cls_d: float = Field(default=2.0, ge=0.0, allow_inf_nan=False)
    lambda_box_r: float = Field(default=0.25, ge=0.0, allow_inf_nan=False)
    lambda_cls_r: float = Field(default=2.0, ge=0.0, allow_inf_nan=False)
    lambda_f: float = Field(default=0.5, ge=0.0, allow_inf_nan=False)
    focal_alpha: float = Field(default=0.25, ge=0.0, le=1.0)
    focal_gamma: float = Field(default=2.0, ge=0.0)


class BaselineConfig(BaseModel):
    """Tracking-by-detection baseline settings."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["hungarian", "greedy"] = "hungarian"
    score_thresh: float = Field(default=0.2, ge=0.0, le=1.0)
    gate: float = Field(default=2.0, gt=0.0)
    max_age: int = Field(default=3, ge=0)
    min_hits: int = Field(default=1, ge=1)
    process_noise: float = Field(default=0.1, ge=0.0)
    measurement_noise: float = Field(default=0.5, gt=0.0)
    frame_period: float = Field(default=0.5, gt=0.0)


class TrainConfig(BaseModel):
    """Toy optimization of the motion head and, optionally, the refinement head."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: int = Field(default=400, ge=1)
    lr: float = Field(default=1e-2, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    # seeds the held-out split
    seed: int = 0
    train_refine_head: bool = False
    # least-squares fit of the kinematic decode path and the refinement residual readout before the gradient steps
    warm_start: bool = True
    # share of samples held out to pick the returned parameters; 0 selects on the training loss
    validation_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    loss: LossConfig = LossConfig()
    match_dist: float = Field(default=2.0, gt=0.0)
    # evenly spaced subset of the harvested samples
    max_samples: int = Field(default=256, ge=1)


RegionBounds = Tuple[Vec3, Vec3]
