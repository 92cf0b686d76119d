"""IoT network topology: adjacency validation and seeded smart-home generation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GraphValidationError(ValueError):
    """An adjacency matrix violates a structural invariant."""


class NonSquareError(GraphValidationError):
    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__(f"adjacency matrix must be square, got shape {self.shape}")


class NonBinaryEntryError(GraphValidationError):
    def __init__(self, i, j, value):
        self.i, self.j, self.value = int(i), int(j), value
        super().__init__(f"adjacency[{i},{j}] = {value!r} is not 0 or 1")


class SelfLoopError(GraphValidationError):
    def __init__(self, i):
        self.i = int(i)
        super().__init__(f"adjacency[{i},{i}] = 1: self-loops are not allowed")


class AsymmetricError(GraphValidationError):
    def __init__(self, i, j):
        self.i, self.j = int(i), int(j)
        super().__init__(f"adjacency[{i},{j}] != adjacency[{j},{i}]: links must be undirected")


class TopologyError(ValueError):
    """The smart-home generator cannot produce a graph for this spec."""


class EmptyRoomError(TopologyError):
    def __init__(self, room):
        self.room = room
        super().__init__(f"room {room!r} has 0 devices")


class UnconnectableError(TopologyError):
    def __init__(self):
        super().__init__("intra-room density 0 with no hub cannot yield a connected graph")


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected device topology with a dense 0/1 adjacency matrix.

    Immutable after construction (the adjacency array is marked read-only);
    safe to share across concurrent workers.  Storage is dense, so memory
    and matrix-vector cost are O(N^2); intended for up to a few hundred nodes.
    """

    node_count: int
    adjacency: np.ndarray
    node_labels: tuple[str, ...]
    room_assignment: tuple[str, ...]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def rooms(self) -> list[str]:
        """Room names in order of first appearance."""
        seen: list[str] = []
        for r in self.room_assignment:
            if r not in seen:
                seen.append(r)
        return seen


def validate_graph(adjacency, node_labels=None, room_assignment=None) -> NetworkGraph:
    """Check adjacency invariants and build a NetworkGraph.

    Raises the error for the first violated invariant, scanning in a fixed
    order: squareness, then binary entries (row-major), then the diagonal,
    then symmetry (lower triangle, reported as the (i, j) entry with i > j).
    """
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(a.shape)
    n = a.shape[0]

    bad = ~((a == 0) | (a == 1))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonBinaryEntryError(i, j, a[i, j])
    a = a.astype(np.int64)

    diag = np.flatnonzero(np.diagonal(a))
    if diag.size:
        raise SelfLoopError(diag[0])

    asym = np.tril(a != a.T, k=-1)
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise AsymmetricError(i, j)

    if node_labels is None:
        node_labels = tuple(f"device-{k:02d}" for k in range(n))
    if room_assignment is None:
        room_assignment = tuple("default" for _ in range(n))
    node_labels = tuple(str(s) for s in node_labels)
    room_assignment = tuple(str(s) for s in room_assignment)
    if len(node_labels) != n:
        raise GraphValidationError(f"expected {n} node labels, got {len(node_labels)}")
    if len(room_assignment) != n:
        raise GraphValidationError(f"expected {n} room assignments, got {len(room_assignment)}")

    a.flags.writeable = False
    return NetworkGraph(node_count=n, adjacency=a, node_labels=node_labels,
                        room_assignment=room_assignment)


@dataclass(frozen=True)
class SmartHomeSpec:
    """Parameters for the seeded smart-home topology generator."""

    total_devices: int = 60
    rooms: tuple[tuple[str, int], ...] = ()
    intra_room_density: float = 0.5
    inter_room_hub: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.total_devices < 1:
            raise ValueError("total_devices must be positive")
        if not self.rooms:
            raise ValueError("at least one room is required")
        total = sum(count for _, count in self.rooms)
        if total != self.total_devices:
            raise ValueError(f"room device counts sum to {total}, expected {self.total_devices}")
        if not 0.0 <= self.intra_room_density <= 1.0:
            raise ValueError("intra_room_density must lie in [0, 1]")


def floorplan_spec(rng_seed: int = 42) -> SmartHomeSpec:
    """Default four-room layout plus a hub node that ties the rooms together."""
    return SmartHomeSpec(
        total_devices=60,
        rooms=(("hub", 1), ("living_room", 15), ("kitchen", 15),
               ("gaming_room", 15), ("bedroom", 14)),
        intra_room_density=0.5,
        inter_room_hub=True,
        rng_seed=rng_seed,
    )


def canonical_spec() -> SmartHomeSpec:
    """Spec of the canonical 60-device instance used by experiments and tests.

    All devices share one broadcast domain, so the logical attack surface is a
    single dense room: any compromised device can probe nearly every other.
    Density 0.9 at 60 nodes puts the adjacency's spectral radius around 53,
    which is the regime where the infection-rate sweeps of the experiment
    suite actually separate (sparser room-local graphs keep the spectral
    radius an order of magnitude too small for any rate sensitivity to show).
    """
    return SmartHomeSpec(
        total_devices=60,
        rooms=(("smart_home", 60),),
        intra_room_density=0.9,
        inter_room_hub=False,
        rng_seed=42,
    )


def generate_smart_home(spec: SmartHomeSpec) -> NetworkGraph:
    """Generate a connected smart-home topology, deterministic per rng_seed.

    Room-internal links are Bernoulli(intra_room_density), drawn room by room
    in declaration order (pairs row-major).  With inter_room_hub, node 0 gains
    a link into every room it does not already reach.  Any remaining
    disconnected components are chained together with one bridge edge each,
    lowest-index members first.
    """
    for name, count in spec.rooms:
        if count == 0:
            raise EmptyRoomError(name)
    if spec.intra_room_density == 0.0 and not spec.inter_room_hub and spec.total_devices > 1:
        raise UnconnectableError()

    n = spec.total_devices
    rng = np.random.default_rng(spec.rng_seed)
    a = np.zeros((n, n), dtype=np.int64)
    labels: list[str] = []
    assignment: list[str] = []
    room_members: list[tuple[str, np.ndarray]] = []

    next_id = 0
    for name, count in spec.rooms:
        ids = np.arange(next_id, next_id + count)
        next_id += count
        room_members.append((name, ids))
        labels.extend(f"{name}-{k:02d}" for k in range(count))
        assignment.extend(name for _ in range(count))
        if count > 1:
            iu = np.triu_indices(count, k=1)
            draws = rng.random(len(iu[0]))
            hit = draws < spec.intra_room_density
            a[ids[iu[0][hit]], ids[iu[1][hit]]] = 1
            a[ids[iu[1][hit]], ids[iu[0][hit]]] = 1

    if spec.inter_room_hub:
        for _, ids in room_members:
            others = ids[ids != 0]
            if others.size and a[0, others].sum() == 0:
                pick = others[rng.integers(others.size)]
                a[0, pick] = a[pick, 0] = 1

    comps = _components(a)
    comps.sort(key=min)
    for k in range(1, len(comps)):
        a[min(comps[k]), min(comps[k - 1])] = 1
        a[min(comps[k - 1]), min(comps[k])] = 1

    return validate_graph(a, labels, assignment)


def _components(a: np.ndarray) -> list[list[int]]:
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in np.flatnonzero(a[v]):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        comps.append(comp)
    return comps


def is_connected(graph: NetworkGraph) -> bool:
    return len(_components(graph.adjacency)) == 1


def canonical_graph() -> NetworkGraph:
    """The canonical seeded 60-device instance (regenerated, never stale)."""
    return generate_smart_home(canonical_spec())


# ---------------------------------------------------------------------------
# serialization: {"n": ..., "adjacency": [[...]], "labels": [...], "rooms": [...]}
# Canonical form = sorted keys, no insignificant whitespace, so parse->serialize
# round-trips are byte-stable.

def graph_to_dict(graph: NetworkGraph) -> dict:
    return {
        "n": graph.node_count,
        "adjacency": graph.adjacency.tolist(),
        "labels": list(graph.node_labels),
        "rooms": list(graph.room_assignment),
    }


def graph_to_json(graph: NetworkGraph) -> str:
    return json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_dict(data: dict) -> NetworkGraph:
    graph = validate_graph(data["adjacency"], data.get("labels"), data.get("rooms"))
    if "n" in data and int(data["n"]) != graph.node_count:
        raise GraphValidationError(
            f"declared n={data['n']} does not match adjacency size {graph.node_count}")
    return graph


def graph_from_json(text: str) -> NetworkGraph:
    return graph_from_dict(json.loads(text))


def save_graph(graph: NetworkGraph, path) -> None:
    Path(path).write_text(graph_to_json(graph))


def load_graph(path) -> NetworkGraph:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(
            f"graph file {path} not found; regenerate the canonical dataset with: "
            "malctrl dataset generate --spec configs/canonical_spec.json --out " + str(path))
    return graph_from_json(path.read_text())


def spec_to_dict(spec: SmartHomeSpec) -> dict:
    return {
        "total_devices": spec.total_devices,
        "rooms": [[name, count] for name, count in spec.rooms],
        "intra_room_density": spec.intra_room_density,
        "inter_room_hub": spec.inter_room_hub,
        "rng_seed": spec.rng_seed,
    }


def spec_from_dict(data: dict) -> SmartHomeSpec:
    return SmartHomeSpec(
        total_devices=int(data["total_devices"]),
        rooms=tuple((str(name), int(count)) for name, count in data["rooms"]),
        intra_room_density=float(data["intra_room_density"]),
        inter_room_hub=bool(data["inter_room_hub"]),
        rng_seed=int(data["rng_seed"]),
    )


def load_spec(path) -> SmartHomeSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))
