""" Enums and result records shared by the OIE services. """
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import InputSchemaError, UsageError


# --- Noise levels ---
class VisualLevel(str, enum.Enum):
    V0 = "V0"
    V1 = "V1"
    V2 = "V2"

    @property
    def index(self) -> int:
        return int(self.value[1])

    @property
    def sigma_c(self) -> float:
        """Angular deviation of the target cloud in mm."""
        return VISUAL_LEVELS_MM[self.index]


class HapticLevel(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"
    H2 = "H2"

    @property
    def index(self) -> int:
        return int(self.value[1])

    @property
    def sigma_p(self) -> float:
        """Perturbation torque amplitude in Nm."""
        return HAPTIC_LEVELS_NM[self.index]


VISUAL_LEVELS_MM = (0.0, 21.32, 52.78)
HAPTIC_LEVELS_NM = (0.0, 0.08, 0.19)


class BlockMode(str, enum.Enum):
    solo = "solo"
    combined = "combined"   # vision + coupling
    visual = "visual"       # vision only, robot disconnected
    haptic = "haptic"       # blind, coupled to the controller


@dataclass(frozen=True)
class NoiseCondition:
    visual: VisualLevel = VisualLevel.V0
    haptic: HapticLevel = HapticLevel.H0

    @property
    def label(self) -> str:
        return f"{self.visual.value}{self.haptic.value}"

    @property
    def sigma_c(self) -> float:
        return self.visual.sigma_c

    @property
    def sigma_p(self) -> float:
        return self.haptic.sigma_p

    @classmethod
    def from_label(cls, label: str) -> NoiseCondition:
        text = label.strip().upper()
        try:
            if len(text) != 4:
                raise ValueError(text)
            return cls(VisualLevel(text[:2]), HapticLevel(text[2:]))
        except ValueError:
            raise UsageError(f"Unknown noise condition '{label}'", detail="expected V0-V2 followed by H0-H2, e.g. V1H2") from None

    @classmethod
    def grid(cls) -> list[NoiseCondition]:
        """The nine conditions, visual level major."""
        return [cls(v, h) for v in VisualLevel for h in HapticLevel]

    def __str__(self) -> str:
        return self.label


# --- Trial simulation ---
@dataclass(frozen=True)
class CloudFrame:
    """Eight target dots; offsets are drawn when a dot is (re)placed."""
    vertical_mm: np.ndarray
    angular_mm: np.ndarray
    velocity_mm_s: np.ndarray
    age_us: np.ndarray
    draw_time: np.ndarray
    anchor_deg: np.ndarray
    anchor_vel_deg: np.ndarray
    refreshes: int = 0

    @property
    def size(self) -> int:
        return int(self.age_us.shape[0])


TRIAL_COLUMNS = ["t", "q_star", "q", "q_c", "tau_couple", "tau_pert", "emg_f", "emg_e"]


@dataclass(frozen=True)
class TrialRecord:
    t: np.ndarray
    q_star: np.ndarray
    q: np.ndarray
    q_c: np.ndarray
    tau_couple: np.ndarray
    tau_pert: np.ndarray
    emg_f: np.ndarray
    emg_e: np.ndarray
    plan: np.ndarray
    q_dot: np.ndarray
    condition: NoiseCondition
    seed: int
    u: float
    t0: float
    coupled: bool = True
    vision: bool = True

    @property
    def rate(self) -> float:
        if self.t.size < 2:
            return 0.0
        return 1.0 / float(self.t[1] - self.t[0])

    def __len__(self) -> int:
        return int(self.t.size)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({name: getattr(self, name) for name in TRIAL_COLUMNS})


# --- Adaptation and identification ---
@dataclass(frozen=True)
class AdaptationTrace:
    trial: np.ndarray
    u: np.ndarray
    cost: np.ndarray

    @property
    def final(self) -> float:
        return float(self.u[-1])


@dataclass(frozen=True)
class ObservedGrid:
    """Normalized cocontraction per (visual level, haptic level) cell."""
    u: np.ndarray
    n: int = 9

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (3, 3):
            raise InputSchemaError("Observed grid must be 3x3", detail=f"got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise InputSchemaError("Observed grid has missing or non-finite cells")
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise InputSchemaError("Observed cocontraction must lie in [0, 1]")
        object.__setattr__(self, "u", u)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"visual_level": v.value, "haptic_level": h.value, "u_normalized": self.u[v.index, h.index]}
            for v in VisualLevel for h in HapticLevel
        ]
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class GammaEstimate:
    raw: float
    value: float
    violated: bool


@dataclass(frozen=True)
class FitResult:
    xi_star: np.ndarray
    gamma_star: float
    kkt_residual: float
    predicted: np.ndarray
    rss: float
    aic_oie: float
    aic_tem: float | None = None  # filled by with_comparison
    gamma_violated: bool = False
    degenerate: bool = False
    objective: float = 0.0

    @property
    def sigma_v(self) -> np.ndarray:
        return self.xi_star[:3]

    @property
    def sigma_h(self) -> np.ndarray:
        return self.xi_star[3:]

    def with_comparison(self, report: ComparisonReport) -> FitResult:
        """Copy carrying the TEM score of `report` on the same scale as aic_oie (AICc/n)."""
        return replace(self, aic_tem=report.aicc_tem)


@dataclass(frozen=True)
class ComparisonReport:
    rss_oie: float
    rss_tem: float
    aicc_oie: float
    aicc_tem: float
    aic_oie: float
    aic_tem: float
    oie_predicted: np.ndarray
    tem_predicted: np.ndarray
    residuals_oie: np.ndarray
    residuals_tem: np.ndarray
    criterion: str = "aic"

    @property
    def preferred(self) -> str:
        if self.criterion == "aicc":
            return "oie" if self.aicc_oie < self.aicc_tem else "tem"
        return "oie" if self.aic_oie < self.aic_tem else "tem"


@dataclass(frozen=True)
class PredictionSurface:
    sigma_c: np.ndarray
    sigma_p: np.ndarray
    sigma_v_eff: np.ndarray
    sigma_h_eff: np.ndarray
    u_star: np.ndarray   # shape (len(sigma_c), len(sigma_p))

    def to_frame(self) -> pd.DataFrame:
        cc, pp = np.meshgrid(self.sigma_c, self.sigma_p, indexing="ij")
        vv, hh = np.meshgrid(self.sigma_v_eff, self.sigma_h_eff, indexing="ij")
        return pd.DataFrame({
            "sigma_c_mm": cc.ravel(),
            "sigma_p_nm": pp.ravel(),
            "sigma_v_eff": vv.ravel(),
            "sigma_h_eff": hh.ravel(),
            "u_star": self.u_star.ravel(),
        })


# --- EMG ---
@dataclass(frozen=True)
class EmgSeries:
    samples: np.ndarray
    rate: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class Calibration:
    """Torque = alpha0 * envelope + alpha1 for one muscle."""
    alpha0: float
    alpha1: float

    @property
    def violations(self) -> list[str]:
        problems = []
        if not self.alpha0 > 0:
            problems.append(f"alpha0={self.alpha0:.6g} is not positive")
        if not self.alpha1 > 0:
            problems.append(f"alpha1={self.alpha1:.6g} is not positive")
        return problems


@dataclass(frozen=True)
class ActivationDecomposition:
    reciprocal: np.ndarray
    cocontraction: np.ndarray

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        tau_f = self.cocontraction + np.maximum(0.0, self.reciprocal)
        tau_e = self.cocontraction + np.maximum(0.0, -self.reciprocal)
        return tau_f, tau_e


@dataclass(frozen=True)
class Spectrum:
    freq: np.ndarray
    amplitude: np.ndarray
    peaks: np.ndarray = field(default_factory=lambda: np.empty(0))

    def has_peak_near(self, freq_hz: float, tol: float = 0.05) -> bool:
        return bool(np.any(np.abs(self.peaks - freq_hz) <= tol))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"freq_hz": self.freq, "amplitude": self.amplitude})


@dataclass(frozen=True)
class CorrelationReport:
    zero_lag_r: float
    best_lag_r: float
    best_lag_s: float
