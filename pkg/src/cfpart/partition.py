"""Subnetwork decompositions: assignment vectors, decision matrices, validation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidDecomposition


@dataclass(frozen=True)
class Decomposition:
    """Assignment of K UEs followed by L BSs to subnetworks 0..m-1.

    Every label in 0..m-1 must occur at least once; non-overlap and full
    cover hold by construction of the assignment vector.
    """

    assignment: np.ndarray   # (K+L,) int labels
    n_ue: int
    m: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if a.ndim != 1 or a.size <= self.n_ue:
            raise InvalidDecomposition("assignment must cover all UEs and >= 1 BS")
        if self.m < 1 or a.min() < 0 or a.max() >= self.m:
            raise InvalidDecomposition(f"labels must lie in 0..{self.m - 1}")
        if np.unique(a).size != self.m:
            raise InvalidDecomposition("every subnetwork index must be non-empty")

    @property
    def n_bs(self) -> int:
        return self.assignment.size - self.n_ue

    def ue_sets(self):
        """List of UE index arrays, one per subnetwork."""
        ue = self.assignment[:self.n_ue]
        return [np.flatnonzero(ue == j) for j in range(self.m)]

    def bs_sets(self):
        bs = self.assignment[self.n_ue:]
        return [np.flatnonzero(bs == j) for j in range(self.m)]

    def ue_counts(self) -> np.ndarray:
        return np.bincount(self.assignment[:self.n_ue], minlength=self.m)

    def bs_counts(self) -> np.ndarray:
        return np.bincount(self.assignment[self.n_ue:], minlength=self.m)

    def relabeled(self, perm) -> "Decomposition":
        """Apply a permutation to the subnetwork labels (perm[old] = new)."""
        perm = np.asarray(perm, dtype=np.int64)
        return Decomposition(perm[self.assignment], self.n_ue, self.m)

    def canonical(self) -> "Decomposition":
        """Relabel subnetworks in order of first vertex occurrence."""
        perm = np.full(self.m, -1, dtype=np.int64)
        nxt = 0
        for lab in self.assignment:
            if perm[lab] < 0:
                perm[lab] = nxt
                nxt += 1
        return self.relabeled(perm)

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "assignment": self.assignment.tolist()})

    @classmethod
    def from_json(cls, text: str, n_ue: int) -> "Decomposition":
        obj = json.loads(text)
        return cls(np.asarray(obj["assignment"], dtype=np.int64), n_ue,
                   int(obj["m"]))


class Violation(NamedTuple):
    code: str        # "ue-cap" or "no-bs"
    subnetwork: int


def optimal_m(k: int, k_max: int) -> int:
    """Smallest subnetwork count that can hold k UEs under a per-subnetwork cap."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return -(-k // k_max)


def validate(decomp: Decomposition, k_max: int):
    """Check the cap and BS-nonempty constraints; violations are data, not errors."""
    out = []
    ue_counts = decomp.ue_counts()
    bs_counts = decomp.bs_counts()
    for j in range(decomp.m):
        if ue_counts[j] > k_max:
            out.append(Violation("ue-cap", j))
        if bs_counts[j] == 0:
            out.append(Violation("no-bs", j))
    return out


def to_matrix(decomp: Decomposition) -> np.ndarray:
    """(K+L) x M one-hot decision matrix of the assignment."""
    n = decomp.assignment.size
    x = np.zeros((n, decomp.m))
    x[np.arange(n), decomp.assignment] = 1.0
    return x


def from_matrix(x: np.ndarray, n_ue: int) -> Decomposition:
    """Inverse of to_matrix; rejects rows that are not exactly one-hot."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("decision matrix must be 2-D")
    if not np.all(np.isin(x, (0.0, 1.0))):
        raise ValueError("decision matrix entries must be binary")
    if not np.all(x.sum(axis=1) == 1.0):
        raise ValueError("every row must sum to exactly 1")
    if x.sum() != x.shape[0]:  # redundant with the row check, kept as a tripwire
        raise ValueError("total assignment count must equal the vertex count")
    return Decomposition(np.argmax(x, axis=1), n_ue, x.shape[1])


def membership_listing(decomp: Decomposition) -> dict:
    """Human-readable per-subnetwork membership (for snapshots)."""
    return {
        "m": decomp.m,
        "subnetworks": [
            {"index": j, "ues": ues.tolist(), "bss": bss.tolist()}
            for j, (ues, bss) in enumerate(zip(decomp.ue_sets(), decomp.bs_sets()))
        ],
    }
