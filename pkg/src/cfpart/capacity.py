"""Capacity evaluation (Monte-Carlo, per-BS approximation, Jensen lower
bound) and the graph-cut objectives the solvers minimize."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDecomposition
from .netmodel import STREAM_FADING, BipartiteGraph, ChannelModel, substream
from .partition import Decomposition

_MC_CHUNK = 1024  # fixed chunk size keeps draws independent of worker count


def _check_bs_nonempty(decomp: Decomposition, m: int):
    if not np.any(decomp.assignment[decomp.n_ue:] == m):
        raise InvalidDecomposition(f"subnetwork {m} has no BS")


def subnetwork_capacity_approx(gains: np.ndarray, channel: ChannelModel,
                               decomp: Decomposition, m: int) -> float:
    """Per-BS decoupled capacity of one subnetwork, in bits/s/Hz.

    Each BS l in the subnetwork contributes log2(1 + P*lam_l) where lam_l is
    the in-subnetwork squared-gain sum over the noise-plus-out-of-subnetwork
    interference power.
    """
    _check_bs_nonempty(decomp, m)
    w = np.asarray(gains, dtype=float) ** 2
    in_ue = decomp.assignment[:decomp.n_ue] == m
    bs = np.flatnonzero(decomp.assignment[decomp.n_ue:] == m)
    p, n0 = channel.power_p, channel.noise_n0
    sig = w[in_ue][:, bs].sum(axis=0)
    interf = w[~in_ue][:, bs].sum(axis=0)
    return float(np.log2(1.0 + p * sig / (n0 + p * interf)).sum())


def per_subnetwork_capacity_approx(gains, channel, decomp) -> np.ndarray:
    return np.array([subnetwork_capacity_approx(gains, channel, decomp, j)
                     for j in range(decomp.m)])


def sum_capacity_approx(gains, channel, decomp) -> float:
    return float(per_subnetwork_capacity_approx(gains, channel, decomp).sum())


def sum_capacity_approx_rearranged(gains, channel, decomp) -> float:
    """Algebraically equivalent form of sum_capacity_approx.

    Splits each per-BS log ratio into a constant total-power term minus an
    interference term; used as a cross-check on the algebra the solver
    objective rests on.
    """
    w = np.asarray(gains, dtype=float) ** 2
    p, n0 = channel.power_p, channel.noise_n0
    a = n0 + p * w.sum(axis=0)          # per-BS constant
    total = float(np.log2(a).sum())
    ue_lab = decomp.assignment[:decomp.n_ue]
    bs_lab = decomp.assignment[decomp.n_ue:]
    for j in range(decomp.m):
        if not np.any(bs_lab == j):
            raise InvalidDecomposition(f"subnetwork {j} has no BS")
        out = w[ue_lab != j][:, bs_lab == j].sum(axis=0)
        total -= float(np.log2(n0 + p * out).sum())
    return total


def interference_sum(gains, decomp) -> float:
    """Total out-of-subnetwork squared gain seen by all BSs."""
    w = np.asarray(gains, dtype=float) ** 2
    ue_lab = decomp.assignment[:decomp.n_ue]
    bs_lab = decomp.assignment[decomp.n_ue:]
    s = 0.0
    for j in range(decomp.m):
        s += float(w[ue_lab != j][:, bs_lab == j].sum())
    return s


def sum_capacity_lower_bound(gains, channel, decomp) -> float:
    """Concavity (Jensen) lower bound on sum_capacity_approx.

    The per-BS interference logs are replaced by a single log of their
    average, which never exceeds the average of the logs.
    """
    w = np.asarray(gains, dtype=float) ** 2
    p, n0 = channel.power_p, channel.noise_n0
    n_bs = decomp.n_bs
    a = n0 + p * w.sum(axis=0)
    for j in range(decomp.m):
        _check_bs_nonempty(decomp, j)
    s = interference_sum(gains, decomp)
    return float(np.log2(a).sum() - n_bs * np.log2(n0 + p * s / n_bs))


def _logdet_psd(mats: np.ndarray) -> np.ndarray:
    """Natural-log determinant of a batch of Hermitian PD matrices.

    Cholesky first; on failure fall back to the pivoted LU route of slogdet.
    """
    try:
        ch = np.linalg.cholesky(mats)
        d = np.real(np.diagonal(ch, axis1=-2, axis2=-1))
        return 2.0 * np.log(d).sum(axis=-1)
    except np.linalg.LinAlgError:
        _, ld = np.linalg.slogdet(mats)
        return ld


def subnetwork_capacity_mc(gains, channel, decomp, m, n_samples, seed):
    """Monte-Carlo estimate of the exact ergodic capacity of one subnetwork.

    Averages log2 det(I + P * S^-1 H H^H) over i.i.d. complex-normal fading,
    where S is the noise plus out-of-subnetwork interference covariance.
    Evaluated as a difference of log-determinants of two PD matrices, so no
    matrix is ever inverted explicitly. Deterministic in (inputs, seed):
    draws come in fixed-size chunks with per-chunk substreams.

    Returns (estimate, standard_error).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    _check_bs_nonempty(decomp, m)
    q = np.asarray(gains, dtype=float)
    in_ue = np.flatnonzero(decomp.assignment[:decomp.n_ue] == m)
    out_ue = np.flatnonzero(decomp.assignment[:decomp.n_ue] != m)
    bs = np.flatnonzero(decomp.assignment[decomp.n_ue:] == m)
    if in_ue.size == 0:
        return 0.0, 0.0
    p, n0 = channel.power_p, channel.noise_n0
    b = bs.size
    qt = q.T[bs]                      # (b, K) gains seen by this subnetwork's BSs
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_idx = 0
    eye = n0 * np.eye(b)
    while done < n_samples:
        c = min(_MC_CHUNK, n_samples - done)
        rng = substream(seed, STREAM_FADING, m, chunk_idx)
        g = (rng.standard_normal((c, b, q.shape[0]))
             + 1j * rng.standard_normal((c, b, q.shape[0]))) / np.sqrt(2.0)
        h = qt[None, :, :] * g
        h_out = h[:, :, out_ue]
        h_in = h[:, :, in_ue]
        s = eye[None] + p * np.einsum("cbk,cdk->cbd", h_out, h_out.conj())
        full = s + p * np.einsum("cbk,cdk->cbd", h_in, h_in.conj())
        vals = (_logdet_psd(full) - _logdet_psd(s)) / np.log(2.0)
        total += vals.sum()
        total_sq += (vals * vals).sum()
        done += c
        chunk_idx += 1
    mean = total / n_samples
    if n_samples > 1:
        var = max(0.0, (total_sq - n_samples * mean * mean) / (n_samples - 1))
        se = np.sqrt(var / n_samples)
    else:
        se = 0.0
    return float(mean), float(se)


def sum_capacity_mc(gains, channel, decomp, n_samples, seed):
    """Sum of per-subnetwork MC estimates; SEs combine in quadrature."""
    means, ses = [], []
    for j in range(decomp.m):
        mu, se = subnetwork_capacity_mc(gains, channel, decomp, j, n_samples, seed)
        means.append(mu)
        ses.append(se)
    return float(np.sum(means)), float(np.sqrt(np.sum(np.square(ses))))


def cut_value(graph: BipartiteGraph, decomp: Decomposition, m: int) -> float:
    """Edge weight leaving subnetwork m: outgoing UE weight seen by its BSs
    plus outgoing BS weight seen by its UEs."""
    w = graph.w
    ue_lab = decomp.assignment[:decomp.n_ue]
    bs_lab = decomp.assignment[decomp.n_ue:]
    bs_side = w[ue_lab != m][:, bs_lab == m].sum()
    ue_side = w[ue_lab == m][:, bs_lab != m].sum()
    return float(bs_side + ue_side)


def sumcut(graph: BipartiteGraph, decomp: Decomposition) -> float:
    return float(sum(cut_value(graph, decomp, j) for j in range(decomp.m)))


def quadratic_objective(graph: BipartiteGraph, x: np.ndarray) -> float:
    """sum_m x_m^T Laplacian x_m for a one-hot-per-row decision matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != graph.n:
        raise ValueError("decision matrix shape must be (K+L, M)")
    if not np.allclose(x.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("decision matrix rows must sum to 1")
    return float(np.einsum("im,ij,jm->", x, graph.laplacian, x))


@dataclass
class CapacityReport:
    """Capacity of one decomposition by every implemented route."""

    sum_approx: float
    sum_lb: float
    per_subnetwork_approx: list[float] = field(default_factory=list)
    sum_mc: float | None = None
    mc_std_err: float | None = None
    mc_samples: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "sum_approx": self.sum_approx,
            "sum_lb": self.sum_lb,
            "per_subnetwork_approx": self.per_subnetwork_approx,
            "sum_mc": self.sum_mc,
            "mc_std_err": self.mc_std_err,
            "mc_samples": self.mc_samples,
        })


def evaluate_decomposition(gains, channel, decomp, mc_samples=0,
                           seed=0) -> CapacityReport:
    per = per_subnetwork_capacity_approx(gains, channel, decomp)
    report = CapacityReport(
        sum_approx=float(per.sum()),
        sum_lb=sum_capacity_lower_bound(gains, channel, decomp),
        per_subnetwork_approx=[float(v) for v in per],
    )
    if mc_samples:
        mu, se = sum_capacity_mc(gains, channel, decomp, mc_samples, seed)
        report.sum_mc = mu
        report.mc_std_err = se
        report.mc_samples = int(mc_samples)
    return report
