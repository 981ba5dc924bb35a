"""Trajectory generators for the two benchmark systems.

Vector fields act on the last axis of the state array, so a whole batch of
initial conditions integrates in one pass. Systems may carry extra internal
states (the quadrotor's PID integrators); those start at zero and are dropped
from the emitted trajectories.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from okpca.errors import DimensionError, SimulationDiverged
from okpca.trajectory import Trajectory

VectorField = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OdeSystem:
    """An autonomous-or-not ODE ``dx/dt = f(t, x)``.

    Attributes:
        dimension: Number of emitted state coordinates.
        vector_field: ``f(t, x)`` with ``x`` of shape ``(..., dimension + internal)``.
        name: Label recorded in manifests.
        internal: Extra hidden states appended after the emitted ones.
    """

    dimension: int
    vector_field: VectorField
    name: str
    internal: int = 0

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.vector_field(t, x)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self) -> None:
        gains = (self.kp, self.ki, self.kd)
        if any(g < 0 for g in gains) or not any(g > 0 for g in gains):
            raise ValueError(f"PID gains must be nonnegative and not all zero, got {gains}")


@dataclass(frozen=True)
class SimConfig:
    """Sampling and integration settings for :func:`simulate`."""

    dt_sample: float
    duration: float
    integrator_substeps: int = 1
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.dt_sample > 0:
            raise ValueError(f"dt_sample must be positive, got {self.dt_sample}")
        if not self.duration >= self.dt_sample:
            raise ValueError("duration must be at least one sample interval")
        if self.integrator_substeps < 1:
            raise ValueError("integrator_substeps must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @property
    def num_intervals(self) -> int:
        n = round(self.duration / self.dt_sample)
        if not math.isclose(n * self.dt_sample, self.duration, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"duration {self.duration} is not a whole number of {self.dt_sample} s samples"
            )
        return n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_intervals + 1) * self.dt_sample


# -- academic system ---------------------------------------------------------


def _academic_nominal(t, x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack(
        [-x1 + x2 * np.sin(np.pi * x1 / 2), -x2 + x1 * np.cos(np.pi * x1 / 2)], axis=-1
    )


def _academic_faulty(t, x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack(
        [-x1 + 0.9 * x2 * np.sin(np.pi * x1 / 5), -x2 + 0.8 * x1 * np.cos(np.pi * x2 / 3)],
        axis=-1,
    )


def academic_system(faulty: bool = False) -> OdeSystem:
    """The two-state nonlinear benchmark, nominal or with its fault model."""
    if faulty:
        return OdeSystem(2, _academic_faulty, "academic-faulty")
    return OdeSystem(2, _academic_nominal, "academic")


# -- quadrotor ---------------------------------------------------------------

# emitted state layout
X, Y, Z, U, V, W, PHI, THETA, PSI, P, Q, R = range(12)
IX, IY, IZ = 12, 13, 14


@dataclass(frozen=True)
class QuadrotorParams:
    """Physical and inner-loop constants of the stand-in quadrotor.

    The attitude and yaw loops are fixed autopilot settings, not part of the
    PID gains under test. Bandwidths are in rad/s. Commanded roll and pitch are
    limited to ``max_tilt`` radians and thrust to ``[0, max_thrust_to_weight *
    m g]``, as on a real autopilot.
    """

    mass: float = 1.0
    gravity: float = 9.81
    jx: float = 0.0224
    jy: float = 0.0224
    jz: float = 0.0436
    attitude_bandwidth: float = 30.0
    attitude_damping: float = 0.9
    yaw_bandwidth: float = 4.0
    yaw_damping: float = 0.9
    max_tilt: float = math.pi / 4
    max_thrust_to_weight: float = 2.0


NOMINAL_GAINS = PidGains(kp=5.0, ki=2.0, kd=8.0)
MAJOR_FAULT_GAINS = PidGains(kp=15.0, ki=12.0, kd=2.0)
MINOR_FAULT_GAINS = PidGains(kp=4.0, ki=3.0, kd=7.0)


def quadrotor_system(
    gains: PidGains,
    setpoint=None,
    params: QuadrotorParams = QuadrotorParams(),
    name: str = "quadrotor",
) -> OdeSystem:
    """Closed-loop quadrotor regulated to ``setpoint``.

    Coriolis terms are dropped and Euler-angle rates equal body rates. Three
    PID loops with shared gains turn position errors into desired
    accelerations: the altitude loop sets thrust, the other two set pitch and
    roll commands (rotated into the heading frame). A fixed PD attitude loop
    tracks those commands and holds yaw at the setpoint heading. The three PID
    integrator states are internal.
    """
    ref = np.zeros(12) if setpoint is None else np.asarray(setpoint, dtype=float)
    if ref.shape != (12,):
        raise DimensionError(f"quadrotor setpoint must have 12 entries, got {ref.shape}")
    kp, ki, kd = gains.kp, gains.ki, gains.kd
    g, m = params.gravity, params.mass
    w_att, z_att = params.attitude_bandwidth, params.attitude_damping
    w_yaw, z_yaw = params.yaw_bandwidth, params.yaw_damping
    inertia = np.array([params.jx, params.jy, params.jz])
    max_tilt = params.max_tilt
    max_thrust = params.max_thrust_to_weight * m * g

    def field(t, s):
        err_pos = ref[X:Z + 1] - s[..., X:Z + 1]
        err_vel = ref[U:W + 1] - s[..., U:W + 1]
        integ = s[..., IX:IZ + 1]
        accel = kp * err_pos + ki * integ + kd * err_vel
        ax, ay, az = accel[..., 0], accel[..., 1], accel[..., 2]

        phi, theta, psi = s[..., PHI], s[..., THETA], s[..., PSI]
        cpsi, spsi = np.cos(psi), np.sin(psi)
        theta_cmd = np.clip((ax * cpsi + ay * spsi) / g, -max_tilt, max_tilt)
        phi_cmd = np.clip((ax * spsi - ay * cpsi) / g, -max_tilt, max_tilt)
        thrust = np.clip(m * (g + az), 0.0, max_thrust)

        p, q, r = s[..., P], s[..., Q], s[..., R]
        tau = np.stack(
            [
                inertia[0] * (w_att**2 * (phi_cmd - phi) - 2 * z_att * w_att * p),
                inertia[1] * (w_att**2 * (theta_cmd - theta) - 2 * z_att * w_att * q),
                inertia[2] * (w_yaw**2 * (ref[PSI] - psi) - 2 * z_yaw * w_yaw * r),
            ],
            axis=-1,
        )
        f_over_m = thrust / m
        cphi, sphi = np.cos(phi), np.sin(phi)
        ctheta, stheta = np.cos(theta), np.sin(theta)
        ds = np.empty_like(s)
        ds[..., X:Z + 1] = s[..., U:W + 1]
        # thrust direction keeps full trigonometry; only the attitude
        # kinematics use the small-angle rates phi' = p, theta' = q, psi' = r
        ds[..., U] = f_over_m * (cphi * stheta * cpsi + sphi * spsi)
        ds[..., V] = f_over_m * (cphi * stheta * spsi - sphi * cpsi)
        ds[..., W] = f_over_m * cphi * ctheta - g
        ds[..., PHI] = p
        ds[..., THETA] = q
        ds[..., PSI] = r
        ds[..., P:R + 1] = tau / inertia
        ds[..., IX:IZ + 1] = err_pos
        return ds

    return OdeSystem(12, field, name, internal=3)


# -- integration -------------------------------------------------------------


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + (h / 2) * k1)
    k3 = f(t + h / 2, x + (h / 2) * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate_many(
    system: OdeSystem, ics, cfg: SimConfig, ids: Sequence[str] | None = None
) -> list[Trajectory]:
    """Integrate a batch of initial conditions with fixed-step RK4.

    Each sample interval is split into ``cfg.integrator_substeps`` RK4 steps.
    No noise is applied here.

    Raises:
        SimulationDiverged: If any state becomes non-finite.
    """
    ics = np.atleast_2d(np.asarray(ics, dtype=float))
    if ics.shape[1] != system.dimension:
        raise DimensionError(
            f"initial conditions have dimension {ics.shape[1]}, "
            f"{system.name} expects {system.dimension}"
        )
    if ids is None:
        ids = [f"{system.name}-{i:04d}" for i in range(len(ics))]
    times = cfg.times
    h = cfg.dt_sample / cfg.integrator_substeps
    x = np.concatenate([ics, np.zeros((len(ics), system.internal))], axis=1)
    out = np.empty((len(ics), times.size, system.dimension))
    out[:, 0] = ics
    for i in range(1, times.size):
        t0 = times[i - 1]
        for j in range(cfg.integrator_substeps):
            x = _rk4_step(system.vector_field, t0 + j * h, x, h)
        if not np.all(np.isfinite(x)):
            raise SimulationDiverged(float(times[i]), system.name)
        out[:, i] = x[:, : system.dimension]
    return [Trajectory(times, out[k], id=ids[k]) for k in range(len(ics))]


def simulate(system: OdeSystem, ic, cfg: SimConfig, id: str = "") -> Trajectory:
    """Integrate one initial condition; see :func:`simulate_many`."""
    return simulate_many(system, [ic], cfg, ids=[id or system.name])[0]


def add_noise(traj: Trajectory, sigma: float, seed) -> Trajectory:
    """Add i.i.d. Gaussian measurement noise to every state coordinate."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return Trajectory(traj.times, traj.states, id=traj.id)
    rng = np.random.default_rng(seed)
    noisy = traj.states + rng.normal(0.0, sigma, size=traj.states.shape)
    return Trajectory(traj.times, noisy, id=traj.id)


class InitialKind(str, enum.Enum):
    UNIT_CIRCLE = "unit_circle"
    BOX = "box"


def sample_initial(kind: InitialKind, seed, side: float = 2.0, dim: int = 12) -> np.ndarray:
    """Draw one initial condition.

    ``UNIT_CIRCLE`` draws a uniform angle on ``[0, 2 pi)`` at radius one;
    ``BOX`` draws each of ``dim`` coordinates uniformly on ``[-side/2, side/2]``.
    """
    rng = np.random.default_rng(seed)
    kind = InitialKind(kind)
    if kind is InitialKind.UNIT_CIRCLE:
        angle = rng.uniform(0.0, 2 * np.pi)
        return np.array([np.cos(angle), np.sin(angle)])
    return rng.uniform(-side / 2, side / 2, size=dim)
