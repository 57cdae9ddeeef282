"""Dendrite network geometry, stochastic growth and cell assembly.

Positions are 2-D and in micrometres.  A :class:`NetworkTopology` is a graph whose
nodes are electrodes and junctions and whose edges are :class:`DendriteSegment`
objects; a :class:`SimulationCell` groups one or more topologies that share a
single electrolyte.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import device
from .device import DeviceParams
from .errors import AssemblyError, DomainError, StateFormatError

ROLES = ("input", "output-source", "output-drain", "ground", "floating")
TOPOLOGY_FORMAT = "dendritic-topology"
TOPOLOGY_VERSION = 1


@dataclass(frozen=True)
class ElectrodeSpec:
    id: str
    position: tuple
    role: str = "input"

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.role not in ROLES:
            raise DomainError(f"electrode {self.id!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class DendriteSegment:
    id: str
    endpoints: tuple
    length: float  # um
    radius: float  # um
    growth_frequency: float  # Hz

    def __post_init__(self):
        object.__setattr__(self, "endpoints", tuple(self.endpoints))

    @property
    def volume(self) -> float:
        """Volume in um^3."""
        return math.pi * self.radius ** 2 * self.length


@dataclass(frozen=True)
class Junction:
    id: str
    position: tuple

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))


@dataclass(frozen=True)
class GrowthParams:
    """Knobs of the biased branching random walk used to grow dendrites.

    ``frequency`` is the AC electropolymerization frequency the network is grown
    at; ``reference_radius`` is the dendrite radius obtained at
    ``reference_frequency``.  The 80 Hz default mirrors the standard growth
    waveform (square wave, 5 Vp).
    """

    reference_radius: float = 4.0  # um
    reference_frequency: float = 80.0  # Hz
    thinning_exponent: float = 0.5
    step_length: float = 40.0  # um
    branch_probability: float = 0.15
    field_bias: float = 0.55
    seed: int = 0
    frequency: float = 80.0  # Hz
    max_steps: int = 40
    max_segments: int = 400
    contact_distance: float = 24.0  # um
    electrode_radius: float = 20.0  # um
    wander: float = 1.0  # rad, std of the heading perturbation per step
    min_segment_fraction: float = 0.35
    amplitude: float = 5.0  # Vp, recorded for provenance only

    def __post_init__(self):
        positive = ("reference_radius", "reference_frequency", "thinning_exponent", "step_length",
                    "frequency", "contact_distance", "electrode_radius", "amplitude")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"GrowthParams.{name} must be finite and > 0, got {value!r}")
        for name in ("branch_probability", "field_bias"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"GrowthParams.{name} must lie in [0, 1], got {value!r}")
        if not 0.0 <= self.wander:
            raise DomainError("GrowthParams.wander must be >= 0")
        if not 0.0 < self.min_segment_fraction < 1.0:
            raise DomainError("GrowthParams.min_segment_fraction must lie in (0, 1)")
        if self.max_steps < 1 or self.max_segments < 1:
            raise DomainError("GrowthParams step/segment budgets must be >= 1")
        if int(self.seed) != self.seed:
            raise DomainError("GrowthParams.seed must be an integer")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def radius_from_frequency(frequency: float, params: GrowthParams) -> float:
    """Dendrite radius (um) for a growth frequency: a decreasing power law."""
    if not (isinstance(frequency, (int, float)) and math.isfinite(frequency) and frequency > 0):
        raise DomainError(f"growth frequency must be > 0, got {frequency!r}")
    return params.reference_radius * (frequency / params.reference_frequency) ** (-params.thinning_exponent)


@dataclass(frozen=True)
class NetworkTopology:
    electrodes: tuple
    junctions: tuple
    segments: tuple
    growth: GrowthParams | None = None
    unconnected: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "electrodes", tuple(self.electrodes))
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def electrode_ids(self) -> list:
        return [e.id for e in self.electrodes]

    @property
    def node_ids(self) -> list:
        return [e.id for e in self.electrodes] + [j.id for j in self.junctions]

    @property
    def positions(self) -> dict:
        pos = {e.id: e.position for e in self.electrodes}
        pos.update({j.id: j.position for j in self.junctions})
        return pos

    def electrode(self, electrode_id: str) -> ElectrodeSpec:
        for e in self.electrodes:
            if e.id == electrode_id:
                return e
        raise KeyError(electrode_id)

    def adjacency(self) -> dict:
        adj = {n: [] for n in self.node_ids}
        for s in self.segments:
            a, b = s.endpoints
            if a in adj and b in adj:
                adj[a].append((b, s.id))
                adj[b].append((a, s.id))
        return adj

    def components(self) -> list:
        """Connected components as lists of node ids (in node order)."""
        ids = self.node_ids
        index = {n: i for i, n in enumerate(ids)}
        rows, cols = [], []
        for s in self.segments:
            a, b = s.endpoints
            if a in index and b in index:
                rows.append(index[a])
                cols.append(index[b])
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ids), len(ids)))
        _, labels = connected_components(graph, directed=False)
        groups = {}
        for n, lab in zip(ids, labels):
            groups.setdefault(lab, []).append(n)
        return [groups[k] for k in sorted(groups, key=lambda k: ids.index(groups[k][0]))]

    def total_volume(self) -> float:
        return sum(s.volume for s in self.segments)

    # -- persistence -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": TOPOLOGY_FORMAT,
            "version": TOPOLOGY_VERSION,
            "name": self.name,
            "unconnected": self.unconnected,
            "growth": None if self.growth is None else self.growth.as_dict(),
            "electrodes": [{"id": e.id, "position": list(e.position), "role": e.role} for e in self.electrodes],
            "junctions": [{"id": j.id, "position": list(j.position)} for j in self.junctions],
            "segments": [{"id": s.id, "endpoints": list(s.endpoints), "length": s.length,
                          "radius": s.radius, "growth_frequency": s.growth_frequency} for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkTopology":
        if data.get("format") != TOPOLOGY_FORMAT:
            raise StateFormatError("not a topology document")
        if data.get("version") != TOPOLOGY_VERSION:
            raise StateFormatError(f"unsupported topology version {data.get('version')!r} "
                                   f"(this build reads version {TOPOLOGY_VERSION})")
        try:
            growth = None if data["growth"] is None else GrowthParams(**data["growth"])
            return cls(
                electrodes=tuple(ElectrodeSpec(e["id"], tuple(e["position"]), e["role"]) for e in data["electrodes"]),
                junctions=tuple(Junction(j["id"], tuple(j["position"])) for j in data["junctions"]),
                segments=tuple(DendriteSegment(s["id"], tuple(s["endpoints"]), s["length"], s["radius"],
                                               s["growth_frequency"]) for s in data["segments"]),
                growth=growth,
                unconnected=bool(data["unconnected"]),
                name=data.get("name", ""),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise StateFormatError(f"malformed topology document: {exc!r}") from exc

    def dumps(self) -> str:
        """Canonical serialization: equal topologies give byte-identical text."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def loads(cls, text: str) -> "NetworkTopology":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateFormatError(f"topology file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def save_topology(topo: NetworkTopology, path) -> None:
    with open(path, "w") as fh:
        fh.write(topo.dumps())


def load_topology(path) -> NetworkTopology:
    with open(path) as fh:
        return NetworkTopology.loads(fh.read())


# -- validation ----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


def validate_topology(topo: NetworkTopology) -> list:
    """List every invariant violation; an empty list means the topology is valid."""
    report = []
    ids = [e.id for e in topo.electrodes] + [j.id for j in topo.junctions]
    seen = set()
    for n in ids:
        if n in seen:
            report.append(Violation("duplicate id", n))
        seen.add(n)
    if len(topo.electrodes) < 2:
        report.append(Violation("too few electrodes", f"{len(topo.electrodes)} < 2"))
    for node in list(topo.electrodes) + list(topo.junctions):
        if not all(math.isfinite(c) for c in node.position):
            report.append(Violation("non-finite position", node.id))
    seg_ids = set()
    for s in topo.segments:
        if s.id in seg_ids:
            report.append(Violation("duplicate segment id", s.id))
        seg_ids.add(s.id)
        a, b = s.endpoints
        if a == b:
            report.append(Violation("self-loop", f"segment {s.id} at node {a}"))
        for end in (a, b):
            if end not in seen:
                report.append(Violation("dangling endpoint", f"segment {s.id} -> missing node {end}"))
        for name in ("length", "radius", "growth_frequency"):
            value = getattr(s, name)
            if not (math.isfinite(value) and value > 0):
                report.append(Violation("nonpositive geometry", f"segment {s.id}.{name}={value!r}"))
    electrode_ids = {e.id for e in topo.electrodes}
    for comp in topo.components():
        if not electrode_ids.intersection(comp):
            report.append(Violation("floating component", f"nodes {comp[:5]}{'...' if len(comp) > 5 else ''}"))
    return report


# -- hand-built geometry --------------------------------------------------------

class TopologyBuilder:
    """Incremental construction of hand-designed topologies.

    ``dendrite`` lays a straight dendrite between two existing nodes and
    subdivides it into ``pieces`` equal segments so the potential profile
    along the channel is resolved.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self._electrodes = []
        self._junctions = []
        self._segments = []
        self._positions = {}

    def electrode(self, eid, position, role="input"):
        e = ElectrodeSpec(eid, tuple(position), role)
        self._electrodes.append(e)
        self._positions[eid] = e.position
        return eid

    def junction(self, jid, position):
        j = Junction(jid, tuple(position))
        self._junctions.append(j)
        self._positions[jid] = j.position
        return jid

    def dendrite(self, a, b, radius, frequency, pieces=1, prefix=None, tortuosity=1.0):
        """Straight chain a -> b; ``tortuosity`` > 1 models a wiggly fibre whose
        length exceeds the end-to-end distance."""
        pa = np.array(self._positions[a])
        pb = np.array(self._positions[b])
        total = tortuosity * float(np.hypot(*(pb - pa)))
        prefix = prefix or f"{a}-{b}"
        nodes = [a]
        for k in range(1, pieces):
            nodes.append(self.junction(f"{prefix}.n{k}", tuple(pa + (pb - pa) * k / pieces)))
        nodes.append(b)
        ids = []
        for k in range(pieces):
            sid = f"{prefix}.s{k}"
            self._segments.append(DendriteSegment(sid, (nodes[k], nodes[k + 1]), total / pieces, radius, frequency))
            ids.append(sid)
        return ids

    def build(self) -> NetworkTopology:
        return NetworkTopology(tuple(self._electrodes), tuple(self._junctions), tuple(self._segments), name=self.name)


# -- stochastic growth ----------------------------------------------------------

def _unit(v):
    n = math.hypot(v[0], v[1])
    return v / n if n > 0 else v


def _rotate(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def default_growth_pairs(electrodes) -> list:
    """Pair every non-ground electrode with its nearest ground electrode.

    Without ground electrodes, consecutive electrodes are paired.
    """
    grounds = [e for e in electrodes if e.role == "ground"]
    if not grounds:
        return [(a.id, b.id) for a, b in zip(electrodes[:-1], electrodes[1:])]
    pairs = []
    for e in electrodes:
        if e.role == "ground":
            continue
        nearest = min(grounds, key=lambda g: (math.dist(e.position, g.position), g.id))
        pairs.append((e.id, nearest.id))
    return pairs


@dataclass
class _Walker:
    node: str
    heading: np.ndarray
    target: str
    budget: int
    source: str


class _Growth:
    def __init__(self, electrodes, params: GrowthParams, rng):
        self.p = params
        self.rng = rng
        self.radius = radius_from_frequency(params.frequency, params)
        self.electrodes = {e.id: e for e in electrodes}
        self.pos = {e.id: np.array(e.position) for e in electrodes}
        self.junction_ids = []
        self.segments = {}  # id -> (a, b); insertion ordered
        self.next_node = 0
        self.next_seg = 0
        self.min_len = params.min_segment_fraction * params.step_length

    # geometry helpers
    def _new_node(self, point):
        jid = f"j{self.next_node}"
        self.next_node += 1
        self.pos[jid] = np.array(point, dtype=float)
        self.junction_ids.append(jid)
        return jid

    def _add_segment(self, a, b):
        sid = f"s{self.next_seg}"
        self.next_seg += 1
        self.segments[sid] = (a, b)
        return sid

    def _degree(self, node):
        return sum(node in ends for ends in self.segments.values())

    def _connect(self, node, other):
        """Join ``node`` to ``other``; a too-short link moves a fresh tip instead."""
        gap = float(np.hypot(*(self.pos[other] - self.pos[node])))
        if gap < self.min_len and node not in self.electrodes and self._degree(node) == 1:
            # relocate the tip: its single incoming segment now ends at ``other``
            for sid, (a, b) in self.segments.items():
                if node in (a, b):
                    prev = b if a == node else a
                    if prev == other:
                        return
                    self.segments[sid] = (prev, other)
                    break
            self.pos.pop(node)
            self.junction_ids.remove(node)
            return
        if gap == 0 or node == other:
            return
        self._add_segment(node, other)

    def _split(self, sid, point):
        """Insert a junction on segment ``sid`` at ``point`` (or reuse a close endpoint)."""
        a, b = self.segments[sid]
        pa, pb = self.pos[a], self.pos[b]
        da = float(np.hypot(*(point - pa)))
        db = float(np.hypot(*(point - pb)))
        if da < self.min_len or db < self.min_len:
            return a if da <= db else b
        j = self._new_node(point)
        del self.segments[sid]
        self._add_segment(a, j)
        self._add_segment(j, b)
        return j

    def _nearest_contact(self, node, start, end):
        """Closest existing segment touched by the move start -> end."""
        best = None
        for sid, (a, b) in self.segments.items():
            if node in (a, b):
                continue
            pa, pb = self.pos[a], self.pos[b]
            ab = pb - pa
            denom = float(ab @ ab)
            t = 0.0 if denom == 0 else float(np.clip((end - pa) @ ab / denom, 0.0, 1.0))
            closest = pa + t * ab
            dist = float(np.hypot(*(end - closest)))
            hit = None
            if dist <= self.p.contact_distance:
                hit = closest
            else:
                crossing = _segment_intersection(start, end, pa, pb)
                if crossing is not None:
                    hit = crossing
            if hit is not None:
                along = float(np.hypot(*(hit - start)))
                if best is None or along < best[0]:
                    best = (along, sid, hit)
        return best

    def run(self, pairs):
        queue = deque()
        for src, dst in pairs:
            heading = _unit(self.pos[dst] - self.pos[src])
            queue.append(_Walker(src, heading, dst, self.p.max_steps, src))
        while queue:
            self._walk(queue.popleft(), queue)

    def _walk(self, w: _Walker, queue):
        p = self.p
        L = p.step_length
        while w.budget > 0 and len(self.segments) < p.max_segments:
            here = self.pos[w.node]
            target = self.pos[w.target]
            to_target = target - here
            dist_target = float(np.hypot(*to_target))
            noise = self.rng.normal(0.0, p.wander)
            branch_draw = self.rng.random()
            branch_angle = self.rng.uniform(math.pi / 6, math.pi / 3) * (1 if self.rng.random() < 0.5 else -1)
            w.budget -= 1
            if dist_target <= L + p.electrode_radius:
                self._connect(w.node, w.target)
                return
            desired = _unit(to_target)
            heading = _unit(p.field_bias * desired + (1.0 - p.field_bias) * _rotate(w.heading, noise))
            if not np.any(heading):
                heading = desired
            step_to = here + L * heading
            # electrode contact
            for eid in self.electrodes:
                if eid != w.source and eid != w.node:
                    if float(np.hypot(*(step_to - self.pos[eid]))) <= p.electrode_radius:
                        self._connect(w.node, eid)
                        return
            contact = self._nearest_contact(w.node, here, step_to)
            if contact is not None:
                _, sid, hit = contact
                joint = self._split(sid, hit)
                self._connect(w.node, joint)
                return
            new = self._new_node(step_to)
            self._add_segment(w.node, new)
            w.node, w.heading = new, heading
            if branch_draw < p.branch_probability and w.budget > 0:
                queue.append(_Walker(new, _rotate(heading, branch_angle), w.target, w.budget, w.source))

    def topology(self, electrodes, name) -> NetworkTopology:
        junctions = tuple(Junction(j, tuple(float(c) for c in self.pos[j])) for j in self.junction_ids)
        segs = []
        for sid, (a, b) in self.segments.items():
            length = float(np.hypot(*(self.pos[b] - self.pos[a])))
            segs.append(DendriteSegment(sid, (a, b), length, self.radius, self.p.frequency))
        topo = NetworkTopology(tuple(electrodes), junctions, tuple(segs), growth=self.p, name=name)
        linked = any(sum(n in self.electrodes for n in comp) >= 2 for comp in topo.components())
        return NetworkTopology(topo.electrodes, topo.junctions, topo.segments, self.p, not linked, name)


def _segment_intersection(p1, p2, p3, p4):
    d1 = p2 - p1
    d2 = p4 - p3
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-12:
        return None
    diff = p3 - p1
    t = (diff[0] * d2[1] - diff[1] * d2[0]) / denom
    u = (diff[0] * d1[1] - diff[1] * d1[0]) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return p1 + t * d1
    return None


def grow_network(electrodes, params: GrowthParams, pairs=None, name: str = "") -> NetworkTopology:
    """Grow a dendrite network between electrodes with a seeded random walk.

    Each (source, target) pair launches one walker at the source electrode that
    steps ``step_length`` at a time, its heading a ``field_bias`` blend of the
    direction to the target and a randomly perturbed previous heading.  Every
    step may spawn a side branch.  A walker stops when it reaches an electrode,
    touches an existing segment (the touched segment is split by a new
    junction), or runs out of steps.  Topologies with no electrode-to-electrode
    path come back flagged ``unconnected``.
    """
    electrodes = tuple(electrodes)
    if len(electrodes) < 2:
        raise DomainError("growth needs at least two electrodes")
    ids = [e.id for e in electrodes]
    if len(set(ids)) != len(ids):
        raise DomainError("electrode ids must be unique")
    pairs = default_growth_pairs(electrodes) if pairs is None else [tuple(p) for p in pairs]
    for src, dst in pairs:
        if src not in ids or dst not in ids or src == dst:
            raise DomainError(f"invalid growth pair ({src!r}, {dst!r})")
    rng = np.random.default_rng(int(params.seed) % 2 ** 64)
    g = _Growth(electrodes, params, rng)
    g.run(pairs)
    return g.topology(electrodes, name)


# -- simulation cell ------------------------------------------------------------

@dataclass
class CellIndex:
    """Flat array view of a cell, built once and reused by the solver."""

    node_ids: list
    positions: np.ndarray
    electrode_ids: list
    electrode_nodes: np.ndarray
    segment_ids: list
    seg_a: np.ndarray
    seg_b: np.ndarray
    g0: np.ndarray  # S
    capacitance: np.ndarray  # F
    coupling: np.ndarray  # F, distance-weighted capacitance
    volume: np.ndarray  # cm^3
    component: np.ndarray  # component label per node
    degree: np.ndarray

    @property
    def n_nodes(self):
        return len(self.node_ids)


@dataclass
class SimulationCell:
    """Topologies sharing one electrolyte node.

    Electrode ids are global; junction and segment ids are qualified with the
    topology position as ``t<k>.<id>``.  ``coupling_exponent`` weights each
    segment's capacitive coupling to the electrolyte by
    ``(1 + d / coupling_length) ** -coupling_exponent``, with ``d`` the distance
    from the segment midpoint to the capacitance-weighted centroid of all
    segments; an exponent of 0 turns the weighting off.
    """

    topologies: tuple
    electrode_dl_capacitance: float = 1e-9  # F per electrode
    device_params: DeviceParams = field(default_factory=DeviceParams)
    coupling_exponent: float = 1.0
    coupling_length: float = 100.0  # um

    def __post_init__(self):
        self.topologies = tuple(self.topologies)

    @staticmethod
    def qualify(k: int, local_id: str) -> str:
        return f"t{k}.{local_id}"

    @cached_property
    def index(self) -> CellIndex:
        params = self.device_params
        node_ids, positions, electrode_ids = [], [], []
        for topo in self.topologies:
            for e in topo.electrodes:
                node_ids.append(e.id)
                positions.append(e.position)
                electrode_ids.append(e.id)
        for k, topo in enumerate(self.topologies):
            for j in topo.junctions:
                node_ids.append(self.qualify(k, j.id))
                positions.append(j.position)
        where = {n: i for i, n in enumerate(node_ids)}
        seg_ids, a_idx, b_idx, radius, length = [], [], [], [], []
        electrode_set = set(electrode_ids)
        for k, topo in enumerate(self.topologies):
            for s in topo.segments:
                seg_ids.append(self.qualify(k, s.id))
                ends = [n if n in electrode_set else self.qualify(k, n) for n in s.endpoints]
                a_idx.append(where[ends[0]])
                b_idx.append(where[ends[1]])
                radius.append(s.radius)
                length.append(s.length)
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        seg_a = np.array(a_idx, dtype=int)
        seg_b = np.array(b_idx, dtype=int)
        radius = np.array(radius, dtype=float)
        length = np.array(length, dtype=float)
        vol = device.volume_cm3(radius, length)
        cap = params.volumetric_capacitance * vol
        if len(seg_a) and self.coupling_exponent != 0:
            mid = 0.5 * (positions[seg_a] + positions[seg_b])
            centroid = (cap[:, None] * mid).sum(axis=0) / cap.sum()
            d = np.hypot(*(mid - centroid).T)
            coupling = cap * (1.0 + d / self.coupling_length) ** (-self.coupling_exponent)
        else:
            coupling = cap.copy()
        n = len(node_ids)
        graph = coo_matrix((np.ones(len(seg_a)), (seg_a, seg_b)), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        degree = np.bincount(np.concatenate([seg_a, seg_b]), minlength=n) if len(seg_a) else np.zeros(n, int)
        return CellIndex(
            node_ids=node_ids,
            positions=positions,
            electrode_ids=electrode_ids,
            electrode_nodes=np.arange(len(electrode_ids)),
            segment_ids=seg_ids,
            seg_a=seg_a,
            seg_b=seg_b,
            g0=device.fully_doped_conductance(radius, length, params),
            capacitance=cap,
            coupling=coupling,
            volume=vol,
            component=labels,
            degree=degree,
        )

    @property
    def segment_ids(self) -> list:
        return self.index.segment_ids

    @property
    def electrode_ids(self) -> list:
        return self.index.electrode_ids

    @property
    def segment_map(self) -> dict:
        """Qualified segment id -> segment with endpoints rewritten to cell node ids."""
        out = {}
        electrodes = set(self.electrode_ids)
        for k, topo in enumerate(self.topologies):
            for s in topo.segments:
                ends = tuple(n if n in electrodes else self.qualify(k, n) for n in s.endpoints)
                out[self.qualify(k, s.id)] = DendriteSegment(self.qualify(k, s.id), ends, s.length, s.radius,
                                                             s.growth_frequency)
        return out

    def initial_state(self):
        return device.ElectrochemicalState.fully_doped(self.segment_ids)

    def max_stable_dt(self) -> float:
        return device.max_stable_dt(self.index.volume, self.device_params)

    def with_params(self, **changes) -> "SimulationCell":
        """Copy of the cell with device parameters replaced."""
        return SimulationCell(self.topologies, self.electrode_dl_capacitance,
                              self.device_params.with_(**changes), self.coupling_exponent, self.coupling_length)

    def to_dict(self) -> dict:
        return {
            "topologies": [t.to_dict() for t in self.topologies],
            "electrode_dl_capacitance": self.electrode_dl_capacitance,
            "device_params": self.device_params.as_dict(),
            "coupling_exponent": self.coupling_exponent,
            "coupling_length": self.coupling_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationCell":
        return assemble_cell([NetworkTopology.from_dict(t) for t in data["topologies"]],
                             data["electrode_dl_capacitance"], DeviceParams(**data["device_params"]),
                             coupling_exponent=data["coupling_exponent"], coupling_length=data["coupling_length"])

    def __eq__(self, other):
        if not isinstance(other, SimulationCell):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def assemble_cell(topologies, electrode_dl_capacitance: float = 1e-9, device_params: DeviceParams | None = None,
                  coupling_exponent: float = 1.0, coupling_length: float = 100.0) -> SimulationCell:
    """Place topologies in one electrolyte bath.

    Raises :class:`AssemblyError` for an empty list, duplicated electrode ids
    or an invalid topology.
    """
    topologies = tuple(topologies)
    if not topologies:
        raise AssemblyError("a cell needs at least one topology")
    seen = set()
    for k, topo in enumerate(topologies):
        problems = validate_topology(topo)
        if problems:
            raise AssemblyError(f"topology {k} ({topo.name or 'unnamed'}) is invalid: {problems[0]}")
        for eid in topo.electrode_ids:
            if eid in seen:
                raise AssemblyError(f"duplicate electrode id {eid!r}")
            seen.add(eid)
    if not (math.isfinite(electrode_dl_capacitance) and electrode_dl_capacitance >= 0):
        raise AssemblyError("electrode double-layer capacitance must be finite and >= 0")
    if coupling_exponent < 0 or coupling_length <= 0:
        raise AssemblyError("coupling exponent must be >= 0 and coupling length > 0")
    return SimulationCell(topologies, float(electrode_dl_capacitance), device_params or DeviceParams(),
                          float(coupling_exponent), float(coupling_length))
