"""Traffic matrices, topology generators, and critical-traffic analysis.

A network of N autonomous systems (ASs) exchanges traffic at fixed rates.
Entry (i, j) of a traffic matrix is the rate from sender i to receiver j;
diagonals are zero.  For a deployment set P, the quantity that governs
incentives is each member's inbound rate from within P, and in particular
the minimum of those rates over P (the "critical traffic" of P).  A matrix
has the maximal-critical-traffic (MCT) property when no proper subset has
strictly larger critical traffic than the full set.

Indices are 0-based throughout the library; the CLI converts to 1-based on
input and output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Subset",
    "TrafficAggregates",
    "TrafficMatrix",
    "aggregates",
    "critical_members",
    "critical_traffic",
    "generate",
    "has_mct",
    "inbound_within",
    "load_edge_csv",
    "load_matrix_csv",
]


@dataclass(frozen=True)
class Subset:
    """An ordered set of AS indices (sorted, unique, non-negative)."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        m = tuple(int(i) for i in self.members)
        if any(i < 0 for i in m):
            raise ValueError("subset members must be non-negative indices")
        if len(set(m)) != len(m):
            raise ValueError("subset members must be unique")
        object.__setattr__(self, "members", tuple(sorted(m)))

    @classmethod
    def of(cls, items: Iterable[int], n: int | None = None) -> "Subset":
        s = cls(tuple(items))
        if n is not None and any(i >= n for i in s.members):
            raise ValueError(f"subset member out of range for n={n}")
        return s

    @classmethod
    def full(cls, n: int) -> "Subset":
        return cls(tuple(range(n)))

    def without(self, remove: Iterable[int]) -> "Subset":
        drop = set(remove)
        return Subset(tuple(i for i in self.members if i not in drop))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, i: object) -> bool:
        return i in self.members


@dataclass(frozen=True)
class TrafficAggregates:
    """Per-AS outbound (row sum) and inbound (column sum) traffic rates."""

    outbound: tuple[float, ...]
    inbound: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.outbound))


class TrafficMatrix:
    """Immutable N x N matrix of non-negative traffic rates, zero diagonal."""

    def __init__(self, rates) -> None:
        arr = np.array(rates, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("traffic matrix must be square")
        if arr.shape[0] < 2:
            raise ValueError("traffic matrix needs at least 2 ASs")
        if not np.all(np.isfinite(arr)):
            raise ValueError("traffic rates must be finite")
        if np.any(arr < 0):
            raise ValueError("traffic rates must be non-negative")
        if np.any(np.diagonal(arr) != 0):
            raise ValueError("traffic matrix diagonal must be zero")
        arr.setflags(write=False)
        self._rates = arr

    @property
    def rates(self) -> np.ndarray:
        return self._rates

    @property
    def n(self) -> int:
        return self._rates.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TrafficMatrix) and np.array_equal(
            self._rates, other._rates
        )

    def __repr__(self) -> str:
        return f"TrafficMatrix(n={self.n})"

    # ---- generators -----------------------------------------------------

    @classmethod
    def from_matrix(cls, rates) -> "TrafficMatrix":
        return cls(rates)

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int, float]], directed: bool = False
    ) -> "TrafficMatrix":
        arr = np.zeros((n, n))
        for i, j, rate in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range for n={n}")
            arr[i, j] = rate
            if not directed:
                arr[j, i] = rate
        return cls(arr)

    @classmethod
    def complete(cls, n: int, rate: float) -> "TrafficMatrix":
        arr = np.full((n, n), float(rate))
        np.fill_diagonal(arr, 0.0)
        return cls(arr)

    @classmethod
    def ring_lattice(cls, n: int, degree: int, rate: float) -> "TrafficMatrix":
        if degree % 2 != 0:
            raise ValueError("ring lattice degree must be even")
        if not 0 < degree < n:
            raise ValueError("ring lattice needs 0 < degree < n")
        arr = np.zeros((n, n))
        for i in range(n):
            for step in range(1, degree // 2 + 1):
                j = (i + step) % n
                arr[i, j] = rate
                arr[j, i] = rate
        return cls(arr)

    @classmethod
    def line(cls, n: int, rate: float) -> "TrafficMatrix":
        arr = np.zeros((n, n))
        for i in range(n - 1):
            arr[i, i + 1] = rate
            arr[i + 1, i] = rate
        return cls(arr)

    @classmethod
    def star(cls, n: int, rate: float) -> "TrafficMatrix":
        arr = np.zeros((n, n))
        arr[0, 1:] = rate
        arr[1:, 0] = rate
        return cls(arr)

    @classmethod
    def restricted_core_periphery(
        cls, cores: int, periphery_per_core: int, rate: float
    ) -> "TrafficMatrix":
        """Fully connected core of `cores` nodes; each core node carries
        `periphery_per_core` leaves attached only to it.  N = (1+l)K."""
        k, l = cores, periphery_per_core
        if k <= 2:
            raise ValueError("core size must exceed 2")
        if l < 0 or l >= k:
            raise ValueError("periphery count per core must satisfy 0 <= l < cores")
        n = (1 + l) * k
        arr = np.zeros((n, n))
        arr[:k, :k] = rate
        np.fill_diagonal(arr, 0.0)
        for core in range(k):
            for leaf in range(l):
                p = k + core * l + leaf
                arr[core, p] = rate
                arr[p, core] = rate
        return cls(arr)

    # ---- file formats ----------------------------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self._rates:
                w.writerow([repr(float(x)) for x in row])


def load_matrix_csv(path) -> TrafficMatrix:
    """Header-free N x N CSV of rates."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            rows.append([float(x) for x in rec])
    return TrafficMatrix(rows)


def load_edge_csv(path, n: int | None = None) -> TrafficMatrix:
    """Edge list CSV with columns i,j,rate and an optional directed flag
    column.  Indices are 1-based (this format is CLI-facing).  Rows without
    the flag, or with a falsy flag, are applied in both directions.
    A header row is detected and skipped.  The collection size is inferred
    from the largest index unless ``n`` is given."""
    records = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or not any(field.strip() for field in rec):
                continue
            records.append([field.strip() for field in rec])
    if not records:
        raise ValueError("edge CSV is empty")
    try:
        float(records[0][0])
    except ValueError:
        records = records[1:]
    edges = []
    size = 0
    for rec in records:
        if len(rec) < 3:
            raise ValueError("edge rows need at least i,j,rate")
        i, j, rate = int(rec[0]) - 1, int(rec[1]) - 1, float(rec[2])
        if i < 0 or j < 0:
            raise ValueError("edge CSV indices are 1-based")
        directed = len(rec) > 3 and rec[3] not in ("", "0", "false", "False")
        edges.append((i, j, rate, directed))
        size = max(size, i + 1, j + 1)
    if n is not None:
        if n < size:
            raise ValueError(f"edge CSV references AS {size} but n={n}")
        size = int(n)
    arr = np.zeros((size, size))
    for i, j, rate, directed in edges:
        arr[i, j] = rate
        if not directed:
            arr[j, i] = rate
    return TrafficMatrix(arr)


def generate(spec: dict) -> TrafficMatrix:
    """Build a TrafficMatrix from a topology description dict (see cli docs).

    Recognized kinds: complete, ring_lattice, line, star, core_periphery,
    edges, matrix.  Edge lists given here are 0-based (library level)."""
    kind = spec.get("kind")
    if kind == "complete":
        return TrafficMatrix.complete(int(spec["n"]), float(spec["rate"]))
    if kind == "ring_lattice":
        return TrafficMatrix.ring_lattice(
            int(spec["n"]), int(spec["degree"]), float(spec["rate"])
        )
    if kind == "line":
        return TrafficMatrix.line(int(spec["n"]), float(spec["rate"]))
    if kind == "star":
        return TrafficMatrix.star(int(spec["n"]), float(spec["rate"]))
    if kind == "core_periphery":
        return TrafficMatrix.restricted_core_periphery(
            int(spec["cores"]), int(spec["periphery_per_core"]), float(spec["rate"])
        )
    if kind == "edges":
        return TrafficMatrix.from_edges(
            int(spec["n"]),
            [(int(i), int(j), float(r)) for i, j, r in spec["edges"]],
            directed=bool(spec.get("directed", False)),
        )
    if kind == "matrix":
        return TrafficMatrix.from_matrix(spec["rates"])
    raise ValueError(f"unknown topology kind: {kind!r}")


# ---- analysis -----------------------------------------------------------


def _as_subset(tm: TrafficMatrix, subset) -> Subset:
    if isinstance(subset, Subset):
        if subset.members and subset.members[-1] >= tm.n:
            raise ValueError("subset member out of range")
        return subset
    return Subset.of(subset, tm.n)


def aggregates(tm: TrafficMatrix) -> TrafficAggregates:
    return TrafficAggregates(
        outbound=tuple(float(x) for x in tm.rates.sum(axis=1)),
        inbound=tuple(float(x) for x in tm.rates.sum(axis=0)),
    )


def inbound_within(tm: TrafficMatrix, subset, i: int) -> float:
    """Inbound rate of AS i from members of `subset` (i must belong)."""
    p = _as_subset(tm, subset)
    if i not in p:
        raise ValueError(f"AS {i} is not in the subset")
    idx = np.fromiter(p.members, dtype=int)
    return float(tm.rates[idx, i].sum())


def _inbound_vector(tm: TrafficMatrix, p: Subset) -> np.ndarray:
    idx = np.fromiter(p.members, dtype=int)
    return tm.rates[np.ix_(idx, idx)].sum(axis=0)


def critical_traffic(tm: TrafficMatrix, subset) -> float:
    """Minimum over members of the inbound rate from within the subset."""
    p = _as_subset(tm, subset)
    if len(p) == 0:
        raise ValueError("critical traffic is undefined for the empty subset")
    return float(_inbound_vector(tm, p).min())


def critical_members(tm: TrafficMatrix, subset) -> tuple[int, ...]:
    """Members attaining the subset's critical traffic."""
    p = _as_subset(tm, subset)
    if len(p) == 0:
        raise ValueError("critical traffic is undefined for the empty subset")
    inb = _inbound_vector(tm, p)
    low = inb.min()
    return tuple(m for m, v in zip(p.members, inb) if v == low)


def has_mct(tm: TrafficMatrix, limit: int = 20) -> tuple[bool, Subset | None]:
    """Exhaustively test the maximal-critical-traffic property.

    Returns (True, None) when every nonempty proper subset has critical
    traffic at most the full set's, else (False, witness).  The witness is
    canonical: among violating subsets it maximizes critical traffic, then
    size, then compares lexicographically.  Enumeration walks subsets in
    Gray-code order so each step updates one row; candidate witnesses are
    recomputed from scratch before being accepted, so accumulated float
    drift cannot produce a false witness.
    """
    n = tm.n
    if n > limit:
        raise ValueError(
            f"exhaustive subset enumeration capped at n={limit} (got n={n})"
        )
    full_value = critical_traffic(tm, Subset.full(n))
    rates = tm.rates
    inbound = np.zeros(n)
    members = np.zeros(n, dtype=bool)
    prev_gray = 0
    best: tuple[float, int, tuple[int, ...]] | None = None
    full_mask = (1 << n) - 1
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        bit = gray ^ prev_gray
        j = bit.bit_length() - 1
        if gray & bit:
            inbound += rates[j]
            members[j] = True
        else:
            inbound -= rates[j]
            members[j] = False
        prev_gray = gray
        if gray == full_mask:
            continue
        value = inbound[members].min()
        if value > full_value:
            cand = tuple(int(i) for i in np.flatnonzero(members))
            exact = critical_traffic(tm, Subset(cand))
            if exact > full_value:
                key = (exact, len(cand), tuple(-i for i in cand))
                if best is None or key > best:
                    best = (exact, len(cand), tuple(-i for i in cand))
    if best is None:
        return True, None
    witness = Subset(tuple(-i for i in best[2]))
    return False, witness
