"""Aspect Transition Graph: aspect nodes joined by parametrized action edges.

Every edge keeps the full list of parameter vectors that produced its
transition and a Gaussian refit from that list after each new sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

THIN_VAR = 1e-6
EMPTY_KEY = "∅"


class StructureError(ValueError):
    """An operation would break referential integrity of the graph."""


class ParameterDomainError(ValueError):
    """An action parameter lies outside the bounds of its action kind."""


@dataclass(frozen=True)
class ActionKind:
    name: str
    bounds: tuple[tuple[float, float], ...] = ()
    circular: bool = False

    @property
    def param_dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds], dtype=float)

    def contains(self, rho: Sequence[float]) -> bool:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.param_dim,):
            return False
        return bool(np.all(rho >= self.lower) and np.all(rho <= self.upper))

    def clip(self, rho: np.ndarray) -> np.ndarray:
        """Map a raw parameter vector into bounds (wrap angles, clamp the rest)."""
        rho = np.asarray(rho, dtype=float)
        if self.circular:
            return np.array([wrap_angle(float(x)) for x in rho])
        return np.clip(rho, self.lower, self.upper)


ORBIT = ActionKind("ORBIT", ((-math.pi, math.pi),), circular=True)
GRASP = ActionKind("GRASP", ((-0.12, 0.12), (-0.12, 0.12), (-0.10, 0.10)))
RELEASE = ActionKind("RELEASE", ())

ACTION_KINDS = {k.name: k for k in (ORBIT, GRASP, RELEASE)}
ACTION_SETS = {
    "orbit": (ORBIT,),
    "orbit+grasp": (ORBIT, GRASP, RELEASE),
}


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass
class Feature:
    id: int
    ftype: str
    value: str
    pos_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pos_cov: np.ndarray = field(default_factory=lambda: np.eye(3))


@dataclass
class AspectNode:
    key: str
    feature_ids: list[int]


@dataclass
class GaussianDist:
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int


@dataclass
class ActionEdge:
    src: str
    dst: str
    kind: ActionKind
    samples: list[tuple[float, ...]]
    dist: GaussianDist
    q: float = 0.0
    visit_count: int = 0

    @property
    def ident(self) -> tuple[str, str, str]:
        return (self.src, self.kind.name, self.dst)


@dataclass(frozen=True)
class Experience:
    s: str
    kind: ActionKind
    rho: tuple[float, ...]
    s_prime: str


@dataclass(frozen=True)
class UpdateOutcome:
    edge: tuple[str, str, str]
    novel_node: bool
    novel_edge: bool
    norm_k: float
    norm_km1: float | None


def fit_gaussian(samples, thin_var: float = THIN_VAR, circular: bool = False) -> GaussianDist:
    """Fit a Gaussian to parameter samples.

    A single sample gives ``N(rho, thin_var * I)``; two or more use the
    unbiased (n - 1) covariance.  With ``circular=True`` the (1-D) samples are
    angles: the mean is the circular mean and the variance is taken over
    deviations wrapped around it.
    """
    if len(samples) == 0:
        raise ValueError("cannot fit a Gaussian to an empty sample set")
    dims = {len(s) for s in samples}
    if len(dims) != 1:
        raise ValueError(f"samples have mixed dimensions {sorted(dims)}")
    data = np.asarray(samples, dtype=float).reshape(len(samples), dims.pop())
    n, d = data.shape

    if circular:
        if d != 1:
            raise ValueError("circular fitting is defined for 1-D samples only")
        mean = np.array([math.atan2(np.mean(np.sin(data[:, 0])), np.mean(np.cos(data[:, 0])))])
        dev = np.array([[wrap_angle(float(x - mean[0]))] for x in data[:, 0]])
    else:
        mean = data.mean(axis=0)
        dev = data - mean

    if n == 1:
        cov = thin_var * np.eye(d)
    else:
        cov = dev.T @ dev / (n - 1)
        cov = 0.5 * (cov + cov.T)
        if d and np.linalg.eigvalsh(cov)[0] < 0.0:
            cov = cov + thin_var * np.eye(d)
    return GaussianDist(mean=mean, cov=cov, n_samples=n)


def spectral_norm(cov, tol: float = 1e-9) -> float:
    """Largest eigenvalue of a symmetric PSD matrix (its 2-norm)."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.size == 0:
        return 0.0
    if cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > tol * scale:
        raise ValueError("covariance is not symmetric")
    return max(0.0, float(np.linalg.eigvalsh(cov)[-1]))


class ATGModel:
    """Directed multigraph of aspect nodes and action edges.

    Edges are keyed by ``(src, kind_name, dst)``; there is at most one edge
    per triple and its sample list is the nonparametric store for that
    transition.
    """

    def __init__(self, thin_var: float = THIN_VAR):
        self.thin_var = thin_var
        self.features: dict[int, Feature] = {}
        self.nodes: dict[str, AspectNode] = {}
        self.edges: dict[tuple[str, str, str], ActionEdge] = {}
        self._feature_index: dict[tuple[str, str], int] = {}
        self._out: dict[str, list[tuple[str, str, str]]] = {}

    # features -----------------------------------------------------------
    def feature_id(self, ftype: str, value: str) -> int | None:
        return self._feature_index.get((ftype, value))

    def add_feature(self, ftype: str, value: str, pos_mean=None, pos_cov=None) -> Feature:
        """Return the feature with this identity, creating it with the next id."""
        fid = self._feature_index.get((ftype, value))
        if fid is not None:
            return self.features[fid]
        feat = Feature(id=len(self.features), ftype=ftype, value=value)
        if pos_mean is not None:
            feat.pos_mean = np.asarray(pos_mean, dtype=float).copy()
        if pos_cov is not None:
            feat.pos_cov = np.asarray(pos_cov, dtype=float).copy()
        self._insert_feature(feat)
        return feat

    def _insert_feature(self, feat: Feature) -> None:
        if feat.id in self.features:
            raise StructureError(f"duplicate feature id {feat.id}")
        if (feat.ftype, feat.value) in self._feature_index:
            raise StructureError(f"duplicate feature {feat.ftype}:{feat.value}")
        self.features[feat.id] = feat
        self._feature_index[(feat.ftype, feat.value)] = feat.id

    # nodes --------------------------------------------------------------
    def get_or_create_node(self, key: str, feature_ids: Sequence[int] = ()) -> tuple[AspectNode, bool]:
        if not key:
            raise StructureError("aspect key must be nonempty")
        node = self.nodes.get(key)
        if node is not None:
            return node, False
        missing = [f for f in feature_ids if f not in self.features]
        if missing:
            raise StructureError(f"unknown feature ids {missing} for node {key!r}")
        node = AspectNode(key=key, feature_ids=list(feature_ids))
        self.nodes[key] = node
        self._out[key] = []
        return node, True

    # edges --------------------------------------------------------------
    def outgoing(self, s: str, kind: str | None = None) -> list[ActionEdge]:
        """Outgoing edges of ``s`` in insertion order, optionally of one kind."""
        if s not in self.nodes:
            raise StructureError(f"unknown node {s!r}")
        edges = [self.edges[e] for e in self._out[s]]
        if kind is not None:
            edges = [e for e in edges if e.kind.name == kind]
        return edges

    def add_edge(self, edge: ActionEdge) -> None:
        for end in (edge.src, edge.dst):
            if end not in self.nodes:
                raise StructureError(f"edge endpoint {end!r} is not a node")
        if edge.ident in self.edges:
            raise StructureError(f"duplicate edge {edge.ident}")
        self.edges[edge.ident] = edge
        self._out[edge.src].append(edge.ident)

    def record_experience(self, exp: Experience, dst_feature_ids: Sequence[int] = ()) -> UpdateOutcome:
        """Append one <s, a, rho, s'> experience and refit the edge Gaussian.

        ``s'`` is created from ``dst_feature_ids`` if it is not yet a node.
        """
        kind = exp.kind
        rho = tuple(float(x) for x in exp.rho)
        if not kind.contains(rho):
            raise ParameterDomainError(f"{kind.name} parameters {rho} outside bounds {kind.bounds}")
        if exp.s not in self.nodes:
            raise StructureError(f"unknown source node {exp.s!r}")
        _, novel_node = self.get_or_create_node(exp.s_prime, dst_feature_ids)

        ident = (exp.s, kind.name, exp.s_prime)
        edge = self.edges.get(ident)
        if edge is None:
            edge = ActionEdge(
                src=exp.s, dst=exp.s_prime, kind=kind, samples=[rho],
                dist=fit_gaussian([rho], self.thin_var, kind.circular),
            )
            self.add_edge(edge)
            edge.visit_count = 1
            return UpdateOutcome(ident, novel_node, True, spectral_norm(edge.dist.cov), None)

        norm_km1 = spectral_norm(edge.dist.cov)
        edge.samples.append(rho)
        edge.dist = fit_gaussian(edge.samples, self.thin_var, kind.circular)
        edge.visit_count += 1
        return UpdateOutcome(ident, novel_node, False, spectral_norm(edge.dist.cov), norm_km1)

    def transition_dist(self, s: str, kind: str) -> dict[str, float]:
        """Empirical p(s' | s, kind) from edge visit counts."""
        edges = self.outgoing(s, kind)
        total = sum(e.visit_count for e in edges)
        if total == 0:
            return {}
        return {e.dst: e.visit_count / total for e in edges}

    # checks -------------------------------------------------------------
    def validate(self) -> None:
        for node in self.nodes.values():
            for fid in node.feature_ids:
                if fid not in self.features:
                    raise StructureError(f"node {node.key!r} references missing feature {fid}")
        for ident, edge in self.edges.items():
            if edge.src not in self.nodes or edge.dst not in self.nodes:
                raise StructureError(f"edge {ident} has a dangling endpoint")
            if any(len(s) != edge.kind.param_dim for s in edge.samples):
                raise StructureError(f"edge {ident} holds samples of the wrong dimension")

    def copy(self) -> "ATGModel":
        import copy

        return copy.deepcopy(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ATGModel):
            return NotImplemented
        if self.thin_var != other.thin_var:
            return False
        if self.features.keys() != other.features.keys() or list(self.nodes) != list(other.nodes):
            return False
        for fid, f in self.features.items():
            g = other.features[fid]
            if (f.ftype, f.value) != (g.ftype, g.value):
                return False
            if not (np.array_equal(f.pos_mean, g.pos_mean) and np.array_equal(f.pos_cov, g.pos_cov)):
                return False
        for key, n in self.nodes.items():
            if n.feature_ids != other.nodes[key].feature_ids:
                return False
        if list(self.edges) != list(other.edges):
            return False
        for ident, e in self.edges.items():
            o = other.edges[ident]
            if e.kind != o.kind or e.samples != o.samples:
                return False
            if (e.q, e.visit_count, e.dist.n_samples) != (o.q, o.visit_count, o.dist.n_samples):
                return False
            if not (np.array_equal(e.dist.mean, o.dist.mean) and np.array_equal(e.dist.cov, o.dist.cov)):
                return False
        return True

    __hash__ = None

    def __repr__(self) -> str:
        return f"ATGModel(features={len(self.features)}, nodes={len(self.nodes)}, edges={len(self.edges)})"


def get_or_create_node(model: ATGModel, key: str, feature_ids: Sequence[int] = ()):
    return model.get_or_create_node(key, feature_ids)


def record_experience(model: ATGModel, exp: Experience, dst_feature_ids: Sequence[int] = ()) -> UpdateOutcome:
    return model.record_experience(exp, dst_feature_ids)


def transition_dist(model: ATGModel, s: str, kind: str) -> dict[str, float]:
    return model.transition_dist(s, kind)
