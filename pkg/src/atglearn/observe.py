"""From sensor detections to filtered features and an aspect key."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import EMPTY_KEY, ATGModel

MEAS_NOISE = 0.01**2 * np.eye(3)
INIT_VAR = 1.0


@dataclass(frozen=True)
class FeatureDetection:
    ftype: str
    value: str
    pos: np.ndarray
    image_xy: tuple[float, float] | None = None

    @property
    def visual(self) -> bool:
        return self.image_xy is not None


@dataclass
class KalmanTrack:
    ftype: str
    value: str
    mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cov: np.ndarray = field(default_factory=lambda: INIT_VAR * np.eye(3))
    n_obs: int = 0


def kf_update(track: KalmanTrack, z, meas_noise=MEAS_NOISE) -> KalmanTrack:
    """Measurement update for a static 3-D landmark (identity dynamics, no process noise)."""
    z = np.asarray(z, dtype=float)
    P = track.cov
    S = P + np.asarray(meas_noise, dtype=float)
    K = np.linalg.solve(S.T, P.T).T  # P S^-1
    mean = track.mean + K @ (z - track.mean)
    cov = (np.eye(3) - K) @ P
    cov = 0.5 * (cov + cov.T)
    return replace(track, mean=mean, cov=cov, n_obs=track.n_obs + 1)


def order_features(detections) -> list[FeatureDetection]:
    """Visual detections left to right then bottom to top; tactile ones after, by identity."""
    visual = [d for d in detections if d.visual]
    other = [d for d in detections if not d.visual]
    visual.sort(key=lambda d: (d.image_xy[0], d.image_xy[1], d.ftype, d.value))
    other.sort(key=lambda d: (d.ftype, d.value))
    return visual + other


def aspect_key(ordered) -> str:
    if not ordered:
        return EMPTY_KEY
    return ";".join(f"{d.ftype}:{d.value}" for d in ordered)


class Observer:
    """Keeps one Kalman track per feature identity and writes estimates into a model."""

    def __init__(self, meas_noise=MEAS_NOISE):
        self.meas_noise = np.asarray(meas_noise, dtype=float)
        self.tracks: dict[tuple[str, str], KalmanTrack] = {}

    def observe(self, model: ATGModel, detections) -> tuple[str, list[int]]:
        """Filter detections, register their features, return (aspect key, ordered feature ids)."""
        ordered = order_features(detections)
        ids = []
        for det in ordered:
            ident = (det.ftype, det.value)
            track = self.tracks.get(ident) or KalmanTrack(det.ftype, det.value)
            track = kf_update(track, det.pos, self.meas_noise)
            self.tracks[ident] = track
            feat = model.add_feature(det.ftype, det.value)
            feat.pos_mean = track.mean.copy()
            feat.pos_cov = track.cov.copy()
            ids.append(feat.id)
        return aspect_key(ordered), ids
