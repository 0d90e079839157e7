"""Parallel-jaw grasp sampling, plane-clearance feasibility, shared-grasp
manipulation graphs, and breadth-first regrasp planning.

The gripper model is two finger boxes plus a clearance half-space; robot
arm kinematics are out of scope.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mesh import TriMesh
from .placements import Placement


class NoPlanExists(RuntimeError):
    """Start and goal placements are not connected by shared grasps."""


@dataclass(frozen=True)
class GripperSpec:
    max_width: float = 0.08
    finger_length: float = 0.04
    finger_thickness: float = 0.01
    friction_angle: float = 0.2  # radians
    plane_clearance: float = 0.005

    def __post_init__(self):
        for name in ("max_width", "finger_length", "finger_thickness", "plane_clearance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.friction_angle < 0:
            raise ValueError("friction_angle must be non-negative")


@dataclass
class GraspConfig:
    """Body-frame antipodal grasp: two finger contacts and an approach
    direction perpendicular to the grasp axis."""

    contact_a: np.ndarray  # (3,)
    contact_b: np.ndarray  # (3,)
    approach: np.ndarray  # unit (3,)

    @property
    def width(self) -> float:
        return float(np.linalg.norm(self.contact_b - self.contact_a))

    @property
    def axis(self) -> np.ndarray:
        d = self.contact_b - self.contact_a
        return d / np.linalg.norm(d)

    def to_json_dict(self) -> dict:
        return {
            "contact_a": [float(x) for x in self.contact_a],
            "contact_b": [float(x) for x in self.contact_b],
            "approach": [float(x) for x in self.approach],
            "width": self.width,
        }


@dataclass
class ManipulationGraph:
    """Placements as nodes, shared-grasp sets as undirected edges."""

    nodes: list[Placement]
    grasps: list[GraspConfig]
    edges: dict[tuple[int, int], list[int]]  # (i, j) with i < j -> grasp indices

    def neighbors(self, i: int):
        for (a, b), g in self.edges.items():
            if a == i:
                yield b, g
            elif b == i:
                yield a, g


@dataclass
class PlanStep:
    from_node: int
    to_node: int
    grasp: GraspConfig


@dataclass
class Plan:
    steps: list[PlanStep]

    def to_json_dict(self) -> dict:
        return {
            "steps": [
                {
                    "from_type": s.from_node,
                    "to_type": s.to_node,
                    "grasp": s.grasp.to_json_dict(),
                }
                for s in self.steps
            ]
        }


def _ray_mesh_exit(
    mesh: TriMesh, origin: np.ndarray, direction: np.ndarray
) -> tuple[np.ndarray, int] | None:
    """Farthest Moller-Trumbore hit of the ray, skipping grazing hits near
    the origin.  Returns (point, face index) or None."""
    v = mesh.vertices
    f = mesh.faces
    a = v[f[:, 0]]
    e1 = v[f[:, 1]] - a
    e2 = v[f[:, 2]] - a
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - a
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    w = qvec @ direction * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    hit = ok & (u >= -1e-9) & (w >= -1e-9) & (u + w <= 1 + 1e-9) & (t > 1e-9)
    if not np.any(hit):
        return None
    idx = np.flatnonzero(hit)
    far = idx[np.argmax(t[idx])]
    return origin + t[far] * direction, int(far)


def _perpendicular_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, ref)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def sample_antipodal_grasps(
    mesh: TriMesh,
    n: int,
    g: GripperSpec,
    seed: int,
    approach_count: int = 8,
) -> list[GraspConfig]:
    """Sample up to n antipodal contact pairs by surface point + inward
    ray casting, each expanded into evenly spaced approach directions in
    the plane perpendicular to the grasp axis.  Deterministic per seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    probs = areas / areas.sum()
    normals = mesh.face_normals()
    cos_fa = np.cos(g.friction_angle)
    grasps: list[GraspConfig] = []
    for _ in range(n):
        fi = int(rng.choice(len(mesh.faces), p=probs))
        u, w = rng.random(), rng.random()
        if u + w > 1.0:
            u, w = 1.0 - u, 1.0 - w
        tri = mesh.vertices[mesh.faces[fi]]
        p1 = tri[0] + u * (tri[1] - tri[0]) + w * (tri[2] - tri[0])
        n1 = normals[fi]
        hit = _ray_mesh_exit(mesh, p1, -n1)
        if hit is None:
            continue
        p2, fj = hit
        if np.linalg.norm(p2 - p1) > g.max_width:
            continue
        n2 = normals[fj]
        # closing direction at the second finger is -n1; antipodality
        # keeps the contact normal inside the friction cone
        if float(np.dot(n2, -n1)) < cos_fa - 1e-9:
            continue
        d = p2 - p1
        axis = d / np.linalg.norm(d)
        e1, e2 = _perpendicular_basis(axis)
        for k in range(approach_count):
            ang = 2.0 * np.pi * k / approach_count
            approach = np.cos(ang) * e1 + np.sin(ang) * e2
            grasps.append(GraspConfig(contact_a=p1, contact_b=p2, approach=approach))
    return grasps


def grasp_feasible_in_placement(
    grasp: GraspConfig, placement: Placement, g: GripperSpec
) -> bool:
    """Transform the grasp to the world frame of the placement and test
    both finger boxes against the clearance half-space z < clearance.

    Finger boxes extend finger_length backward along the approach and
    half a finger_thickness sideways along the grasp axis and binormal;
    side grasps are allowed (no approach-direction constraint).
    """
    if grasp.width > g.max_width + 1e-12:
        return False
    r, t = placement.rotation, placement.translation
    ca = r @ grasp.contact_a + t
    cb = r @ grasp.contact_b + t
    approach = r @ grasp.approach
    axis = cb - ca
    axis /= np.linalg.norm(axis)
    binorm = np.cross(approach, axis)
    half = 0.5 * g.finger_thickness
    for c in (ca, cb):
        zmin = np.inf
        for s1 in (-1.0, 1.0):
            for s2 in (-1.0, 1.0):
                for back in (0.0, g.finger_length):
                    corner = c + s1 * half * axis + s2 * half * binorm - back * approach
                    zmin = min(zmin, float(corner[2]))
        if zmin < g.plane_clearance:
            return False
    return True


def shared_grasps(
    pa: Placement, pb: Placement, grasps: list[GraspConfig], g: GripperSpec
) -> list[GraspConfig]:
    """Grasps feasible in both placements, in input order."""
    return [
        gr
        for gr in grasps
        if grasp_feasible_in_placement(gr, pa, g)
        and grasp_feasible_in_placement(gr, pb, g)
    ]


def build_manipulation_graph(
    placements: list[Placement], grasps: list[GraspConfig], g: GripperSpec
) -> ManipulationGraph:
    """Complete pairwise shared-grasp evaluation; edges carry the indices
    of their shared grasps."""
    if not placements:
        raise ValueError("need at least one placement")
    feasible = [
        [grasp_feasible_in_placement(gr, p, g) for gr in grasps] for p in placements
    ]
    edges: dict[tuple[int, int], list[int]] = {}
    for i in range(len(placements)):
        for j in range(i + 1, len(placements)):
            shared = [k for k in range(len(grasps)) if feasible[i][k] and feasible[j][k]]
            if shared:
                edges[(i, j)] = shared
    return ManipulationGraph(nodes=placements, grasps=grasps, edges=edges)


def plan_regrasp(graph: ManipulationGraph, start: int, goal: int) -> Plan:
    """Breadth-first shortest path; each step carries the lowest-index
    shared grasp of its edge.  start == goal gives an empty plan."""
    n = len(graph.nodes)
    if not (0 <= start < n and 0 <= goal < n):
        raise ValueError("start/goal not in graph")
    if start == goal:
        return Plan(steps=[])
    prev: dict[int, tuple[int, int]] = {}  # node -> (parent, grasp index)
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt, grasp_indices in sorted(graph.neighbors(cur)):
            if nxt in seen:
                continue
            seen.add(nxt)
            prev[nxt] = (cur, grasp_indices[0])
            if nxt == goal:
                steps: list[PlanStep] = []
                node = goal
                while node != start:
                    parent, gk = prev[node]
                    steps.append(
                        PlanStep(from_node=parent, to_node=node, grasp=graph.grasps[gk])
                    )
                    node = parent
                return Plan(steps=list(reversed(steps)))
            queue.append(nxt)
    raise NoPlanExists(f"no path from {start} to {goal}")
