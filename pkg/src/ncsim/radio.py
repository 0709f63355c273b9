"""Topologies and the Rayleigh-fading reception-probability model."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

# Probabilities at or below this count as "out of range" for classification only.
ZERO_FLOOR = 1e-12
SPARSE_RATIO = 0.2


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NodePosition:
    x: float
    y: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise TopologyError(f"non-finite position ({self.x}, {self.y})")


def dbm_to_watts(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def watts_to_dbm(watts: float) -> float:
    return 10 * math.log10(watts) + 30


@dataclass(frozen=True)
class ChannelParams:
    """Link budget for the capture model; the capture threshold is an SNR in dB."""

    tx_power: float = 20e-6
    noise: float = 4e-14
    capture_threshold_db: float = 45.0
    path_loss_exponent: float = 2.0

    def __post_init__(self) -> None:
        if not self.tx_power > 0:
            raise ValueError(f"tx_power must be positive, got {self.tx_power}")
        if not self.noise > 0:
            raise ValueError(f"noise must be positive, got {self.noise}")
        if not self.path_loss_exponent >= 1:
            raise ValueError(f"path loss exponent must be >= 1, got {self.path_loss_exponent}")

    @property
    def z_linear(self) -> float:
        return 10 ** (self.capture_threshold_db / 10)


def reception_probability(params: ChannelParams, distance: float) -> float:
    """P(SNR >= z) when received power is exponential with mean P * d^-eta."""
    if distance < 0:
        raise ValueError(f"negative distance {distance}")
    if distance == 0:
        return 1.0
    return math.exp(
        -params.z_linear * params.noise * distance**params.path_loss_exponent / params.tx_power
    )


class Connectivity(str, Enum):
    FULLY_CONNECTED = "fully_connected"
    SPARSELY_CONNECTED = "sparsely_connected"
    INTERMEDIATE = "intermediate"
    DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class ReceptionMatrix:
    """``probs[u, v]`` is the probability that v decodes a broadcast from u."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1] or probs.shape[0] < 1:
            raise ValueError(f"reception matrix must be square and non-empty, got {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise ValueError("reception probabilities must lie in [0, 1]")
        np.fill_diagonal(probs, 0.0)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def off_diagonal_sum(self) -> float:
        return float(self.probs.sum())

    @classmethod
    def complete(cls, n: int, p: float) -> "ReceptionMatrix":
        return cls(np.full((n, n), p))

    @classmethod
    def chain(cls, n: int, p: float) -> "ReceptionMatrix":
        """Nearest-neighbour links only."""
        probs = np.zeros((n, n))
        idx = np.arange(n - 1)
        probs[idx, idx + 1] = p
        probs[idx + 1, idx] = p
        return cls(probs)

    def scaled(self, factor: float) -> "ReceptionMatrix":
        return ReceptionMatrix(self.probs * factor)

    def neighbors(self, u: int, zero_tolerance: float = ZERO_FLOOR) -> np.ndarray:
        return np.flatnonzero(self.probs[u] > zero_tolerance)


def make_topology(kind: str, params, spacing: float = 30.0) -> list[NodePosition]:
    """Node positions for ``line`` (params = N), ``grid`` (params = (m, n)) or ``file`` (params = path).

    Grid nodes are indexed row-major: node ``i * n + j`` sits at (j*d, i*d).
    """
    if kind == "file":
        return load_positions(params)
    if not spacing > 0:
        raise TopologyError(f"spacing must be positive, got {spacing}")
    if kind == "line":
        n = int(params)
        if n < 1:
            raise TopologyError(f"line topology needs N >= 1, got {n}")
        return [NodePosition(i * spacing, 0.0) for i in range(n)]
    if kind == "grid":
        m, n = (int(v) for v in params)
        if m < 1 or n < 1:
            raise TopologyError(f"grid needs m, n >= 1, got {m}x{n}")
        return [NodePosition(j * spacing, i * spacing) for i in range(m) for j in range(n)]
    raise TopologyError(f"unknown topology kind {kind!r}")


def load_positions(path) -> list[NodePosition]:
    """Read a ``node_id,x,y`` CSV; ids must be dense from 0."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["node_id", "x", "y"]:
                raise TopologyError(f"{path}: expected header node_id,x,y")
            entries = {}
            for lineno, row in enumerate(reader, start=2):
                try:
                    nid = int(row["node_id"])
                    pos = NodePosition(float(row["x"]), float(row["y"]))
                except (TypeError, ValueError) as exc:
                    raise TopologyError(f"{path}:{lineno}: malformed row {row}") from exc
                if nid in entries:
                    raise TopologyError(f"{path}:{lineno}: duplicate node_id {nid}")
                entries[nid] = pos
    except OSError as exc:
        raise TopologyError(f"cannot read positions file {path}: {exc}") from exc
    if sorted(entries) != list(range(len(entries))) or not entries:
        raise TopologyError(f"{path}: node ids must be dense from 0")
    return [entries[i] for i in range(len(entries))]


def save_positions(positions, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "y"])
        for i, p in enumerate(positions):
            w.writerow([i, repr(p.x), repr(p.y)])


def build_reception_matrix(positions, params: ChannelParams) -> ReceptionMatrix:
    if len(positions) < 1:
        raise TopologyError("need at least one position")
    xy = np.array([(p.x, p.y) for p in positions], dtype=float)
    dist = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    probs = np.exp(-params.z_linear * params.noise * dist**params.path_loss_exponent / params.tx_power)
    return ReceptionMatrix(probs)


def classify_connectivity(
    matrix: ReceptionMatrix,
    zero_tolerance: float = ZERO_FLOOR,
    sparse_ratio: float = SPARSE_RATIO,
) -> Connectivity:
    """Neighbour sets count the node itself, so a chain interior node has |V_u| = 3."""
    probs = matrix.probs
    n = probs.shape[0]
    links = probs > zero_tolerance
    np.fill_diagonal(links, False)
    if n == 1 or links.sum() == n * (n - 1):
        return Connectivity.FULLY_CONNECTED
    adjacency = links | links.T
    ncomp, _ = connected_components(adjacency, directed=False)
    if ncomp > 1:
        return Connectivity.DISCONNECTED
    max_neighbors = int(links.sum(axis=1).max()) + 1
    if max_neighbors / n <= sparse_ratio:
        return Connectivity.SPARSELY_CONNECTED
    return Connectivity.INTERMEDIATE
