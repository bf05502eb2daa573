"""A kinematic stand-in for a mobile manipulator exploring a tagged cube.

The robot sits on a circle around the cube, always facing it.  The relative
angle between robot and cube picks one of eight view sectors: four face-on
sectors showing one side tag and four corner sectors showing two.  A
successful grasp adds a tactile feature to the view; a release returns the
base to where it stood when the hands closed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import GRASP, ORBIT, RELEASE, ActionKind
from .observe import FeatureDetection, aspect_key, order_features

TWO_PI = 2.0 * math.pi
SECTOR = math.pi / 4
N_SECTORS = 8
SIDE_TAGS = ("0", "1", "2", "3")
TOP_TAG, BOTTOM_TAG = "4", "5"
TACTILE = ("tactile", "grasp")


@dataclass(frozen=True)
class SimConfig:
    orbit_radius: float = 1.0
    cube_side: float = 0.29
    sector_half_width: float = math.pi / 8
    act_noise_sigma: float = 0.02
    obs_noise_sigma: float = 0.005
    grasp_tol_xy: float = 0.10
    grasp_tol_z: float = 0.08
    residual_tol: float = 1e-6
    kappa: float = 0.5
    grasp_force: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("orbit_radius", "cube_side", "sector_half_width", "grasp_tol_xy",
                     "grasp_tol_z", "residual_tol", "kappa", "grasp_force"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SimConfig.{name} must be positive")
        for name in ("act_noise_sigma", "obs_noise_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"SimConfig.{name} must be non-negative")
        if not math.isclose(self.sector_half_width * 2 * N_SECTORS, TWO_PI):
            raise ValueError("SimConfig.sector_half_width must tile the circle into 8 sectors")

    def noiseless(self) -> "SimConfig":
        return replace(self, act_noise_sigma=0.0, obs_noise_sigma=0.0)


@dataclass(frozen=True)
class ContactPair:
    f_L: np.ndarray
    f_R: np.ndarray
    r_L: np.ndarray
    r_R: np.ndarray


@dataclass(frozen=True)
class WorldState:
    azimuth: float
    object_yaw: float
    held: bool = False
    pre_grasp_azimuth: float | None = None
    contacts: ContactPair | None = None


@dataclass(frozen=True)
class StepResult:
    """``noop``: precondition unmet (grasp while holding, release while empty).
    ``failed``: a grasp attempt outside the success region."""

    state: WorldState
    noop: bool = False
    failed: bool = False

    @property
    def changed(self) -> bool:
        return not (self.noop or self.failed)


def wrap_2pi(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    return 0.0 if t >= TWO_PI else t


def relative_angle(state: WorldState) -> float:
    return wrap_2pi(state.azimuth - state.object_yaw)


def sector_index(beta: float) -> int:
    return int(math.floor((wrap_2pi(beta) + SECTOR / 2) / SECTOR)) % N_SECTORS


def visible_faces(sector: int) -> tuple[int, ...]:
    m = sector // 2
    if sector % 2 == 0:
        return (m,)
    return (m, (m + 1) % 4)


def grasp_face(sector: int) -> int:
    """Face a grasp aligns to: the one seen face-on, or the counterclockwise one at a corner."""
    return (sector // 2 + sector % 2) % 4


def face_center(face: int, side: float) -> np.ndarray:
    a = face * math.pi / 2
    return 0.5 * side * np.array([math.cos(a), math.sin(a), 0.0])


def reset(config: SimConfig, seed: int | None = None) -> WorldState:
    """Robot at azimuth 0 facing a cube with a random yaw."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    return WorldState(azimuth=0.0, object_yaw=float(rng.uniform(0.0, TWO_PI)))


def controller_step(delta_phi, jacobian, kappa: float) -> np.ndarray:
    """One gradient step on a potential: ``kappa * pinv(J) @ delta_phi``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    J = np.atleast_2d(np.asarray(jacobian, dtype=float))
    dphi = np.atleast_1d(np.asarray(delta_phi, dtype=float))
    return kappa * (np.linalg.pinv(J) @ dphi)


def grasp_residuals(contacts: ContactPair) -> tuple[float, float]:
    """Squared force and moment residuals of a two-hand contact, about the contact centroid.

    The residuals are taken on the net wrench, so a balanced antipodal
    squeeze scores (0, 0) and a lone contact scores its own squared force
    and squared moment.
    """
    f_L, f_R = np.asarray(contacts.f_L, float), np.asarray(contacts.f_R, float)
    r_L, r_R = np.asarray(contacts.r_L, float), np.asarray(contacts.r_R, float)
    net_f = f_L + f_R
    net_m = np.cross(r_L, f_L) + np.cross(r_R, f_R)
    return float(net_f @ net_f), float(net_m @ net_m)


def _place_hands(goal: np.ndarray, start: np.ndarray, kappa: float, tol: float = 1e-4) -> np.ndarray:
    hand = start.copy()
    J = np.eye(3)
    for _ in range(200):
        err = goal - hand
        if np.max(np.abs(err)) < tol:
            break
        hand = hand + controller_step(err, J, kappa)
    return hand


def _squeeze(face: int, offset: np.ndarray, config: SimConfig) -> ContactPair:
    # hands close on the two faces adjacent to the grasped one, shifted by the same offset
    lateral = face_center((face + 1) % 4, config.cube_side)
    p_L, p_R = lateral + offset, -lateral + offset
    centroid = 0.5 * (p_L + p_R)
    push = config.grasp_force * lateral / np.linalg.norm(lateral)
    return ContactPair(f_L=-push, f_R=push.copy(), r_L=p_L - centroid, r_R=p_R - centroid)


def step(state: WorldState, kind: ActionKind, rho, config: SimConfig,
         rng: np.random.Generator | None = None) -> StepResult:
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.shape != (kind.param_dim,):
        raise ValueError(f"{kind.name} expects {kind.param_dim} parameters, got {rho.shape[0]}")
    noise = 0.0
    if kind.name == ORBIT.name:
        if config.act_noise_sigma > 0 and rng is not None:
            noise = float(rng.normal(0.0, config.act_noise_sigma))
        delta = float(rho[0]) + noise
        if state.held:
            return StepResult(replace(
                state,
                azimuth=wrap_2pi(state.azimuth + delta),
                object_yaw=wrap_2pi(state.object_yaw + delta),
                pre_grasp_azimuth=wrap_2pi(state.pre_grasp_azimuth + delta),
            ))
        return StepResult(replace(state, azimuth=wrap_2pi(state.azimuth + delta)))

    if kind.name == GRASP.name:
        if state.held:
            return StepResult(state, noop=True)
        face = grasp_face(sector_index(relative_angle(state)))
        center = face_center(face, config.cube_side)
        inside = (abs(rho[0]) <= config.grasp_tol_xy and abs(rho[1]) <= config.grasp_tol_xy
                  and abs(rho[2]) <= config.grasp_tol_z)
        if not inside:
            return StepResult(replace(state, contacts=None), failed=True)
        # hands servo in from the approach pose to the commanded offset
        hands = _place_hands(center + rho, 2.0 * center, config.kappa)
        contacts = _squeeze(face, hands - center, config)
        F2, M2 = grasp_residuals(contacts)
        if F2 > config.residual_tol or M2 > config.residual_tol:
            return StepResult(replace(state, contacts=None), failed=True)
        aligned = wrap_2pi(state.object_yaw + face * math.pi / 2)
        return StepResult(replace(state, azimuth=aligned, held=True, pre_grasp_azimuth=aligned, contacts=contacts))

    if kind.name == RELEASE.name:
        if not state.held:
            return StepResult(state, noop=True)
        return StepResult(replace(state, azimuth=state.pre_grasp_azimuth, held=False,
                                  pre_grasp_azimuth=None, contacts=None))

    raise ValueError(f"unknown action kind {kind.name!r}")


def visible_detections(state: WorldState, config: SimConfig,
                       rng: np.random.Generator | None = None) -> list[FeatureDetection]:
    """Tags in view (face centers, object frame) plus the tactile feature when holding."""
    beta = relative_angle(state)
    right = np.array([-math.sin(beta), math.cos(beta), 0.0])
    up = np.array([0.0, 0.0, 1.0])
    out = []
    for face in visible_faces(sector_index(beta)):
        pos = face_center(face, config.cube_side)
        if config.obs_noise_sigma > 0 and rng is not None:
            pos = pos + rng.normal(0.0, config.obs_noise_sigma, 3)
        out.append(FeatureDetection("ARtag", SIDE_TAGS[face], pos, (float(pos @ right), float(pos @ up))))
    if state.held:
        face = int(round(beta / (math.pi / 2))) % 4
        out.append(FeatureDetection(*TACTILE, face_center(face, config.cube_side)))
    return out


def true_aspect(state: WorldState, config: SimConfig) -> str:
    return aspect_key(order_features(visible_detections(state, config.noiseless())))


def canonical_state(state: WorldState) -> WorldState:
    """Same aspect, with the robot moved to the middle of its view sector."""
    if state.held:
        return state
    sector = sector_index(relative_angle(state))
    return replace(state, azimuth=wrap_2pi(state.object_yaw + sector * SECTOR), contacts=None)


class ARCubeWorld:
    """Stateful wrapper used by the learners: one seeded noise stream per episode."""

    def __init__(self, config: SimConfig | None = None):
        self.config = config or SimConfig()
        self.state: WorldState | None = None
        self.rng: np.random.Generator | None = None

    def reset(self, seed: int | None = None) -> WorldState:
        seed = self.config.seed if seed is None else seed
        self.state = reset(self.config, seed)
        self.rng = np.random.default_rng([seed, 1])
        return self.state

    def step(self, kind: ActionKind, rho) -> StepResult:
        result = step(self.state, kind, rho, self.config, self.rng)
        self.state = result.state
        return result

    def detections(self) -> list[FeatureDetection]:
        return visible_detections(self.state, self.config, self.rng)
