"""
Closed-loop simulation of one tracking trial.

The wrist is a rotational mass-spring-damper whose stiffness grows with
cocontraction and which is pulled towards a motion plan: the low-passed
centroid of the dot cloud. The wrist is coupled by a virtual spring to a
second-order tracker of the target; the haptic perturbation acts on that
coupling. Angles are in degrees, torques in Nm, plant gains per radian.
"""
import logging
import math
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from oie.errors import DomainError, NumericalError
from oie.models import CloudFrame, NoiseCondition, TrialRecord
from oie.schemas import PlantConfig, TargetSpec
from oie.seeding import make_rng
from oie.services.noise_models import require_non_negative

logger = logging.getLogger(__name__)

D2R = math.pi / 180.0
R2D = 180.0 / math.pi

CLOUD_DOTS = 8
DOT_LIFETIME_US = 100_000
DOT_STAGGER_US = 12_500
VERTICAL_SD_MM = 15.0
VELOCITY_SD_MM_S = 101.6
PERTURBATION_RAD_S = (25.0, 30.0)

DEFAULT_TARGET = TargetSpec()
DEFAULT_PLANT = PlantConfig()


def _check_time(t, duration: float) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > duration + 1e-9):
        raise DomainError(f"time must lie in [0, {duration:g}] s")
    return arr


# --- Target ---
def target_position(t, t0: float = 0.0, spec: TargetSpec = DEFAULT_TARGET):
    """A sin(a (t+t0)) sin(b (t+t0)) in degrees."""
    s = _check_time(t, spec.duration) + t0
    return (spec.amplitude * np.sin(spec.freq_a * s) * np.sin(spec.freq_b * s))[()]


def target_velocity(t, t0: float = 0.0, spec: TargetSpec = DEFAULT_TARGET):
    s = _check_time(t, spec.duration) + t0
    a, b = spec.freq_a, spec.freq_b
    return (spec.amplitude * (a * np.cos(a * s) * np.sin(b * s) + b * np.sin(a * s) * np.cos(b * s)))[()]


def offset_zero_set(spec: TargetSpec = DEFAULT_TARGET) -> np.ndarray:
    """Times in [0, duration] where either sine factor vanishes, each bisected to 1e-12 s."""
    zeros = [0.0]
    for freq in (spec.freq_a, spec.freq_b):
        def factor(t, freq=freq):
            return math.sin(freq * t)
        for k in range(1, int(math.floor(spec.duration * freq / math.pi)) + 1):
            lo = (k - 0.5) * math.pi / freq
            hi = min((k + 0.5) * math.pi / freq, spec.duration)
            if factor(lo) * factor(hi) < 0.0:
                zeros.append(bisect(factor, lo, hi, xtol=1e-12))
            else:
                zeros.append(min(k * math.pi / freq, spec.duration))
    zeros.sort()
    unique = [zeros[0]]
    for z in zeros[1:]:
        if z - unique[-1] > 1e-9:
            unique.append(z)
    return np.asarray(unique)


def sample_offset(rng: np.random.Generator, spec: TargetSpec = DEFAULT_TARGET) -> float:
    return float(rng.choice(offset_zero_set(spec)))


# --- Haptic channel ---
def perturbation_torque(t, sigma_p: float, duration: float = DEFAULT_TARGET.duration):
    """sigma_p sin(25 t) sin(30 t), arguments in rad/s."""
    require_non_negative("sigma_p", sigma_p)
    t = _check_time(t, duration)
    w1, w2 = PERTURBATION_RAD_S
    return (sigma_p * np.sin(w1 * t) * np.sin(w2 * t))[()]


def coupling_torque(q_c, q, gain: float = DEFAULT_PLANT.coupling_gain):
    """Virtual spring between controller and wrist: gain [Nm/deg] * (q_c - q)."""
    return gain * (np.asarray(q_c, dtype=float) - np.asarray(q, dtype=float))[()]


# --- Visual cloud ---
def cloud_init(rng: np.random.Generator, target_deg: float, target_vel_deg: float, sigma_c: float,
               t: float = 0.0) -> CloudFrame:
    """Eight dots drawn at t, with ages staggered by 12.5 ms."""
    require_non_negative("sigma_c", sigma_c)
    z = rng.standard_normal((CLOUD_DOTS, 3))
    return CloudFrame(
        vertical_mm=VERTICAL_SD_MM * z[:, 0],
        angular_mm=sigma_c * z[:, 1],
        velocity_mm_s=VELOCITY_SD_MM_S * z[:, 2],
        age_us=np.arange(CLOUD_DOTS, dtype=np.int64) * DOT_STAGGER_US,
        draw_time=np.full(CLOUD_DOTS, float(t)),
        anchor_deg=np.full(CLOUD_DOTS, float(target_deg)),
        anchor_vel_deg=np.full(CLOUD_DOTS, float(target_vel_deg)),
    )


def cloud_step(state: CloudFrame, target_deg: float, target_vel_deg: float, dt: float, sigma_c: float,
               rng: np.random.Generator, t: float = 0.0) -> CloudFrame:
    """Age every dot by dt; dots reaching 100 ms are redrawn around the current target state."""
    ages = state.age_us + int(round(dt * 1e6))
    vertical = state.vertical_mm.copy()
    angular = state.angular_mm.copy()
    velocity = state.velocity_mm_s.copy()
    draw_time = state.draw_time.copy()
    anchor = state.anchor_deg.copy()
    anchor_vel = state.anchor_vel_deg.copy()

    refreshed = 0
    for k in range(state.size):
        if ages[k] >= DOT_LIFETIME_US:
            ages[k] -= DOT_LIFETIME_US
            z = rng.standard_normal(3)
            vertical[k] = VERTICAL_SD_MM * z[0]
            angular[k] = sigma_c * z[1]
            velocity[k] = VELOCITY_SD_MM_S * z[2]
            draw_time[k] = t
            anchor[k] = target_deg
            anchor_vel[k] = target_vel_deg
            refreshed += 1

    return CloudFrame(vertical_mm=vertical, angular_mm=angular, velocity_mm_s=velocity, age_us=ages,
                      draw_time=draw_time, anchor_deg=anchor, anchor_vel_deg=anchor_vel,
                      refreshes=state.refreshes + refreshed)


def cloud_centroid(frame: CloudFrame, t: float, screen_gain: float = DEFAULT_PLANT.screen_gain) -> float:
    """Mean angular dot position in degrees at time t."""
    elapsed = t - frame.draw_time
    positions = (frame.anchor_deg + screen_gain * frame.angular_mm
                 + (frame.anchor_vel_deg + screen_gain * frame.velocity_mm_s) * elapsed)
    return float(np.mean(positions))


# --- Controller stand-in ---
def controller_acceleration(q_c: float, qd_c: float, perceived: float, plant: PlantConfig = DEFAULT_PLANT) -> float:
    return plant.kp * (perceived - q_c) - plant.kd * qd_c


def controller_standin(t, target: Callable[[float], float], plant: PlantConfig = DEFAULT_PLANT,
                       q_c0: float | None = None, qd_c0: float = 0.0) -> np.ndarray:
    """
    Track `target` with the critically damped tracker alone, RK4 at plant.dt,
    and return q_c at the (uniformly spaced) times t.
    """
    t = np.asarray(t, dtype=float)
    q_c = float(target(float(t[0]))) if q_c0 is None else float(q_c0)
    qd_c = float(qd_c0)
    out = np.empty(t.size)
    out[0] = q_c
    for i in range(t.size - 1):
        span = float(t[i + 1] - t[i])
        sub = max(1, int(round(span / plant.dt)))
        h = span / sub
        for s in range(sub):
            ts = float(t[i]) + s * h
            y0, y1, y2 = target(ts), target(ts + 0.5 * h), target(ts + h)
            k1q, k1v = qd_c, controller_acceleration(q_c, qd_c, y0, plant)
            k2q = qd_c + 0.5 * h * k1v
            k2v = controller_acceleration(q_c + 0.5 * h * k1q, k2q, y1, plant)
            k3q = qd_c + 0.5 * h * k2v
            k3v = controller_acceleration(q_c + 0.5 * h * k2q, k3q, y1, plant)
            k4q = qd_c + h * k3v
            k4v = controller_acceleration(q_c + h * k3q, k4q, y2, plant)
            q_c += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
            qd_c += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        out[i + 1] = q_c
    return out


# --- Synthetic EMG ---
def _lognormal_gain(rng: np.random.Generator, sd: float, size) -> np.ndarray:
    """Multiplicative noise with mean 1 and standard deviation sd."""
    sigma = math.sqrt(math.log1p(sd * sd))
    return rng.lognormal(mean=-0.5 * sigma * sigma, sigma=sigma, size=size)


def synthetic_activations(reciprocal: np.ndarray, u: float, rng: np.random.Generator,
                          noise_sd: float = DEFAULT_PLANT.emg_noise_sd) -> tuple[np.ndarray, np.ndarray]:
    """Flexor/extensor activation: shared cocontraction u plus the rectified reciprocal demand."""
    gains = _lognormal_gain(rng, noise_sd, (3, reciprocal.size))
    base = u * gains[0]
    return base + np.maximum(0.0, reciprocal) * gains[1], base + np.maximum(0.0, -reciprocal) * gains[2]


# --- Trial ---
def simulate_trial(condition: NoiseCondition, u: float, plant: PlantConfig = DEFAULT_PLANT, seed: int = 0, *,
                   target: TargetSpec = DEFAULT_TARGET, coupled: bool = True, vision: bool = True,
                   q0: float | None = None, t0: float | None = None) -> TrialRecord:
    require_non_negative("u", u)
    rng_offset = make_rng(seed, "offset")
    rng_cloud = make_rng(seed, "cloud")
    rng_emg = make_rng(seed, "emg")
    rng_ctrl = make_rng(seed, "controller")

    if t0 is None:
        t0 = sample_offset(rng_offset, target)
    sigma_c = condition.sigma_c
    sigma_p = condition.sigma_p if coupled else 0.0

    frame_dt = plant.frame_dt
    n_frames = int(round(target.duration / frame_dt))
    sub = int(round(frame_dt / plant.dt))
    h = frame_dt / sub
    n_steps = max(n_frames - 1, 0) * sub

    # target and perturbation at every RK4 stage time (step start, midpoint, end)
    stage_t = np.minimum(np.arange(2 * n_steps + 1) * (0.5 * h), target.duration)
    tgt_stage = np.atleast_1d(target_position(stage_t, t0, target)).tolist()
    pert_stage = np.atleast_1d(perturbation_torque(stage_t, sigma_p, target.duration)).tolist()

    frame_t = np.arange(n_frames) * frame_dt
    tgt_frame = np.atleast_1d(target_position(frame_t, t0, target))
    vel_frame = np.atleast_1d(target_velocity(frame_t, t0, target))
    ctrl_noise = rng_ctrl.standard_normal(n_frames) * plant.controller_noise_deg

    stiffness = plant.stiffness(u)
    inv_inertia = 1.0 / plant.inertia
    damping = plant.damping
    gain_c = plant.coupling_gain if coupled else 0.0
    w_plan = 2.0 * math.pi * plant.plan_cutoff_hz

    q = float(tgt_frame[0]) if q0 is None else float(q0)
    qd = 0.0
    qc = float(tgt_frame[0])
    qcd = 0.0
    # sharp vision shows a single disk on the target; only blurred conditions draw a cloud
    sharp = sigma_c == 0.0
    cloud = cloud_init(rng_cloud, tgt_frame[0], vel_frame[0], sigma_c, t=0.0)

    def perceived(k: int, t_k: float) -> float:
        if not vision:
            return 0.0
        if sharp:
            return float(tgt_frame[k])
        return cloud_centroid(cloud, t_k, plant.screen_gain)

    p = perceived(0, 0.0)

    rec_q = np.empty(n_frames)
    rec_qd = np.empty(n_frames)
    rec_qc = np.empty(n_frames)
    rec_p = np.empty(n_frames)

    def deriv(q, qd, qc, qcd, p, tgt, pert, plan_in):
        qcdd = controller_acceleration(qc, qcd, tgt, plant)
        tau = (stiffness * (p - q) - damping * qd) * D2R
        if gain_c:
            tau += gain_c * (qc - q) + pert
        return qd, tau * inv_inertia * R2D, qcd, qcdd, w_plan * (plan_in - p)

    for k in range(n_frames):
        t_k = float(frame_t[k])
        if k > 0 and not sharp:
            cloud = cloud_step(cloud, tgt_frame[k], vel_frame[k], frame_dt, sigma_c, rng_cloud, t_k)
        plan_in = perceived(k, t_k)

        if not all(math.isfinite(x) for x in (q, qd, qc, qcd, p)):
            raise NumericalError("Non-finite simulator state", detail=f"t={t_k:.3f}s q={q} qd={qd} q_c={qc} plan={p}")
        rec_q[k], rec_qd[k], rec_qc[k], rec_p[k] = q, qd, qc, p
        if k == n_frames - 1:
            break

        noise = float(ctrl_noise[k])
        for s in range(sub):
            i = 2 * (k * sub + s)
            t0s, t1s, t2s = tgt_stage[i] + noise, tgt_stage[i + 1] + noise, tgt_stage[i + 2] + noise
            p0s, p1s, p2s = pert_stage[i], pert_stage[i + 1], pert_stage[i + 2]

            a1 = deriv(q, qd, qc, qcd, p, t0s, p0s, plan_in)
            a2 = deriv(q + 0.5 * h * a1[0], qd + 0.5 * h * a1[1], qc + 0.5 * h * a1[2], qcd + 0.5 * h * a1[3],
                       p + 0.5 * h * a1[4], t1s, p1s, plan_in)
            a3 = deriv(q + 0.5 * h * a2[0], qd + 0.5 * h * a2[1], qc + 0.5 * h * a2[2], qcd + 0.5 * h * a2[3],
                       p + 0.5 * h * a2[4], t1s, p1s, plan_in)
            a4 = deriv(q + h * a3[0], qd + h * a3[1], qc + h * a3[2], qcd + h * a3[3],
                       p + h * a3[4], t2s, p2s, plan_in)
            q += h / 6.0 * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
            qd += h / 6.0 * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
            qc += h / 6.0 * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
            qcd += h / 6.0 * (a1[3] + 2 * a2[3] + 2 * a3[3] + a4[3])
            p += h / 6.0 * (a1[4] + 2 * a2[4] + 2 * a3[4] + a4[4])

    if coupled:
        tau_c = coupling_torque(rec_qc, rec_q, plant.coupling_gain)
        tau_p = np.atleast_1d(perturbation_torque(frame_t, sigma_p, target.duration))
    else:
        tau_c = np.zeros(n_frames)
        tau_p = np.zeros(n_frames)

    reciprocal = stiffness * (rec_p - rec_q) * D2R
    emg_f, emg_e = synthetic_activations(reciprocal, u, rng_emg, plant.emg_noise_sd)

    logger.debug(f"Trial {condition.label} u={u:.4f} seed={seed} t0={t0:.4f}: "
                 f"coupled={coupled} vision={vision}")
    return TrialRecord(
        t=frame_t, q_star=tgt_frame, q=rec_q, q_c=rec_qc, tau_couple=np.atleast_1d(tau_c), tau_pert=tau_p,
        emg_f=emg_f, emg_e=emg_e, plan=rec_p, q_dot=rec_qd, condition=condition, seed=int(seed), u=float(u),
        t0=float(t0), coupled=coupled, vision=vision,
    )


def tracking_error(rec: TrialRecord) -> float:
    """Root mean squared difference between target and wrist angle, in degrees."""
    if len(rec) == 0:
        raise DomainError("Cannot compute the tracking error of an empty record")
    return float(np.sqrt(np.mean((rec.q_star - rec.q) ** 2)))
