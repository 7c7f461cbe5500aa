"""Network geometry, channel gains, and the weighted bipartite-graph view.

All randomness in the package flows through one seeding scheme: a 64-bit
user seed plus a purpose tag feed numpy's SeedSequence, so layouts, fading
draws, baseline initialization and solver tie-breaks each get an
independent, reproducible substream.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# substream purpose tags (spawn_key prefix)
STREAM_LAYOUT = 0
STREAM_FADING = 1
STREAM_BASELINE = 2
STREAM_SOLVER = 3


def substream(seed, purpose, *extra) -> np.random.Generator:
    """Independent generator for (seed, purpose[, extra...])."""
    key = (int(purpose),) + tuple(int(e) for e in extra)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


@dataclass(frozen=True)
class NetworkLayout:
    """Planar positions of K single-antenna UEs and L single-antenna BSs."""

    ue: np.ndarray          # (K, 2)
    bs: np.ndarray          # (L, 2)
    area_side: float
    seed: int

    @property
    def k(self) -> int:
        return self.ue.shape[0]

    @property
    def l(self) -> int:
        return self.bs.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "k": self.k,
            "l": self.l,
            "area_side": self.area_side,
            "ue": self.ue.tolist(),
            "bs": self.bs.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "NetworkLayout":
        obj = json.loads(text)
        ue = np.asarray(obj["ue"], dtype=float).reshape(obj["k"], 2)
        bs = np.asarray(obj["bs"], dtype=float).reshape(obj["l"], 2)
        return cls(ue=ue, bs=bs, area_side=float(obj["area_side"]),
                   seed=int(obj["seed"]))


def gen_layout(seed: int, k: int, l: int, area_side: float = 1.0) -> NetworkLayout:
    """Drop k UEs and l BSs i.i.d. uniformly on the [0, area_side]^2 square."""
    if k < 1 or l < 1:
        raise ValueError(f"need at least one UE and one BS, got k={k}, l={l}")
    if area_side <= 0:
        raise ValueError(f"area_side must be positive, got {area_side}")
    rng = substream(seed, STREAM_LAYOUT)
    pts = rng.uniform(0.0, area_side, size=(k + l, 2))
    return NetworkLayout(ue=pts[:k].copy(), bs=pts[k:].copy(),
                         area_side=float(area_side), seed=int(seed))


@dataclass(frozen=True)
class ChannelModel:
    """Distance-based path-loss channel: gain d^(-alpha/2), clamped below d_min.

    power_p and noise_n0 are linear-scale; only their ratio matters to every
    capacity expression, so the usual setup is noise_n0=1 and
    power_p=10^(dB/10).
    """

    alpha: float = 4.0
    power_p: float = 10.0
    noise_n0: float = 1.0
    d_min: float = 1e-3

    def __post_init__(self):
        for name in ("alpha", "power_p", "noise_n0", "d_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_db(cls, p_over_n0_db: float, alpha: float = 4.0,
                d_min: float = 1e-3) -> "ChannelModel":
        return cls(alpha=alpha, power_p=10.0 ** (p_over_n0_db / 10.0),
                   noise_n0=1.0, d_min=d_min)


def path_gains(layout: NetworkLayout, channel: ChannelModel) -> np.ndarray:
    """K x L path-gain matrix q with q[k, l] = max(d_kl, d_min)^(-alpha/2)."""
    diff = layout.ue[:, None, :] - layout.bs[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    return np.maximum(d, channel.d_min) ** (-channel.alpha / 2.0)


@dataclass(frozen=True)
class BipartiteGraph:
    """Weighted bipartite UE-BS graph and its adjacency/degree/Laplacian.

    Vertex i is UE i for i < K and BS (i - K) otherwise. Edge weights are
    squared path gains; the UE-UE and BS-BS blocks of the adjacency are zero.
    """

    w: np.ndarray           # (K, L) edge weights
    adjacency: np.ndarray = field(repr=False, default=None)
    degree: np.ndarray = field(repr=False, default=None)
    laplacian: np.ndarray = field(repr=False, default=None)

    @property
    def n_ue(self) -> int:
        return self.w.shape[0]

    @property
    def n_bs(self) -> int:
        return self.w.shape[1]

    @property
    def n(self) -> int:
        return self.w.shape[0] + self.w.shape[1]

    def subgraph(self, ue_idx, bs_idx) -> "BipartiteGraph":
        """Induced subgraph on the given UE and BS index sets."""
        return graph_from_weights(self.w[np.ix_(np.asarray(ue_idx, dtype=int),
                                                np.asarray(bs_idx, dtype=int))])


def graph_from_weights(w: np.ndarray) -> BipartiteGraph:
    w = np.asarray(w, dtype=float)
    k, l = w.shape
    n = k + l
    adj = np.zeros((n, n))
    adj[:k, k:] = w
    adj[k:, :k] = w.T
    deg = adj.sum(axis=1)
    lap = np.diag(deg) - adj
    return BipartiteGraph(w=w, adjacency=adj, degree=deg, laplacian=lap)


def build_graph(gains: np.ndarray) -> BipartiteGraph:
    """Bipartite graph whose edge weight between UE k and BS l is q[k, l]^2."""
    q = np.asarray(gains, dtype=float)
    return graph_from_weights(q * q)
