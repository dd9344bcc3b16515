"""
Validated parameter models (pydantic). Defaults are the published values of the
noise and adaptation models and the documented stand-in plant values.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import UsageError
from .models import NoiseCondition


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# --- Noise models ---
class ComplianceModel(FrozenModel):
    c0: float = Field(5.18, ge=0)
    c1: float = Field(49.65, gt=0)
    c2: float = Field(6.11, gt=0)


class VisualRegression(FrozenModel):
    alpha_v: float = -1.21
    beta_v: float = 66.18


class HapticRegression(FrozenModel):
    alpha_p: float = 5.05
    beta_p: float = 6.84
    delta_p: float = 41.68


# --- Adaptation models ---
class OieParams(FrozenModel):
    gamma: float = Field(2.26, gt=0)
    learning_rate: float = Field(0.01, gt=0)
    u_max: float = Field(1.5, gt=0)
    compliance: ComplianceModel = Field(default_factory=ComplianceModel)


class TemParams(FrozenModel):
    alpha: float = Field(0.05, gt=0)
    gamma: float = Field(0.5, gt=0, lt=1)


# --- Identification ---
class PsoConfig(FrozenModel):
    swarm_size: int = Field(64, ge=2)
    iterations: int = Field(500, ge=0)
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    bounds: tuple[float, float] = (0.0, 70.0)
    grid_points: int = Field(5, ge=2)
    polish: bool = True
    seed: Optional[int] = None

    @field_validator("bounds")
    def validate_bounds(cls, v):
        low, high = v
        if not low < high:
            raise ValueError(f"empty search box: low={low} must be below high={high}")
        return v


# --- Trial simulation ---
class TargetSpec(FrozenModel):
    amplitude: float = Field(18.5, ge=0)
    freq_a: float = Field(2.031, gt=0)
    freq_b: float = Field(1.093, gt=0)
    duration: float = Field(20.0, gt=0)


class PlantConfig(FrozenModel):
    inertia: float = Field(0.005, gt=0)           # kg m^2
    damping: float = Field(0.05, ge=0)            # Nm s/rad
    k0: float = Field(0.1, ge=0)                  # Nm/rad
    k1: float = Field(2.0, gt=0)                  # Nm/rad per unit cocontraction
    plan_cutoff_hz: float = Field(2.0, gt=0)
    kp: float = Field(144.0, ge=0)                # 1/s^2
    kd: float = Field(24.0, ge=0)                 # 1/s
    controller_noise_deg: float = Field(0.0, ge=0)
    coupling_gain: float = Field(0.03, ge=0)      # Nm/deg
    screen_gain: float = Field(0.25, gt=0)        # deg/mm
    dt: float = Field(0.001, gt=0)
    frame_dt: float = Field(0.01, gt=0)
    emg_noise_sd: float = Field(0.05, ge=0)

    @model_validator(mode="after")
    def check_steps(self):
        ratio = self.frame_dt / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"integration step {self.dt} must divide the display step {self.frame_dt}")
        return self

    def stiffness(self, u: float) -> float:
        return self.k0 + self.k1 * u


# --- Protocol ---
Design = Literal["combined", "visual_only", "haptic_only", "separate"]


class ProtocolSpec(FrozenModel):
    trials_per_block: int = Field(9, ge=0)
    solo_trials: int = Field(9, ge=0)
    rule: Literal["oie", "tem"] = "oie"
    design: Design = "combined"
    conditions: Optional[list[str]] = None
    u_initial: float = Field(0.8, ge=0)
    transient_skip_s: float = Field(0.5, ge=0)
    target: TargetSpec = Field(default_factory=TargetSpec)
    plant: PlantConfig = Field(default_factory=PlantConfig)
    oie: OieParams = Field(default_factory=OieParams)
    tem: TemParams = Field(default_factory=TemParams)
    visual: VisualRegression = Field(default_factory=VisualRegression)
    haptic: HapticRegression = Field(default_factory=HapticRegression)

    @field_validator("conditions")
    def validate_conditions(cls, v):
        if v is None:
            return v
        labels = []
        for item in v:
            try:
                labels.append(NoiseCondition.from_label(item).label)
            except UsageError:
                raise ValueError(f"unknown condition '{item}'") from None
        return labels


# --- EMG ---
class EmgSettings(FrozenModel):
    rate: float = Field(100.0, gt=0)
    zero_phase: bool = False
    flexor_alpha0: float = 1.0
    flexor_alpha1: float = 0.0
    extensor_alpha0: float = 1.0
    extensor_alpha1: float = 0.0


# --- Run ---
Command = Literal["simulate", "protocol", "fit", "predict", "compare", "emg", "spectrum", "figures"]


class RunConfig(FrozenModel):
    command: Command
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    config_path: Optional[str] = None
    out_dir: str = "out"
    options: dict = Field(default_factory=dict)
    argv: list[str] = Field(default_factory=list)


class FigureSpec(FrozenModel):
    figure_id: str
    kind: Literal["bars", "lines", "heatmap"]
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    width: int = Field(720, ge=200)
    height: int = Field(440, ge=150)


class Settings(FrozenModel):
    visual: VisualRegression = Field(default_factory=VisualRegression)
    haptic: HapticRegression = Field(default_factory=HapticRegression)
    compliance: ComplianceModel = Field(default_factory=ComplianceModel)
    oie: OieParams = Field(default_factory=OieParams)
    tem: TemParams = Field(default_factory=TemParams)
    plant: PlantConfig = Field(default_factory=PlantConfig)
    target: TargetSpec = Field(default_factory=TargetSpec)
    pso: PsoConfig = Field(default_factory=PsoConfig)
    emg: EmgSettings = Field(default_factory=EmgSettings)
    protocol: ProtocolSpec = Field(default_factory=ProtocolSpec)
