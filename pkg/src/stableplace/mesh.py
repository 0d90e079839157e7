"""Triangle meshes: OBJ loading, mass properties, convex hulls, facet
merging, surface sampling, and auxiliary-plane geometry.

Vertices and point clouds are (N, 3) float arrays in meters; point order
is preserved through every transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .rotations import rotation_from_axis_angle


class MeshParseError(ValueError):
    """OBJ file missing or unparseable."""


class DegenerateMesh(ValueError):
    """Mesh has no surface area."""


class DegenerateHull(ValueError):
    """Points are coplanar or fewer than 4."""


class CollinearContacts(ValueError):
    """Three contact points do not span a plane."""


class ZeroPlaneVector(ValueError):
    """Plane passes through the origin and has no vector representation."""


@dataclass
class TriMesh:
    vertices: np.ndarray  # (N, 3)
    faces: np.ndarray  # (F, 3) int
    com: np.ndarray = field(init=False)
    volume: float = field(init=False)
    centroid_fallback: bool = field(init=False, default=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=int)
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise MeshParseError("face index out of range")
        self._compute_mass_properties()

    def _compute_mass_properties(self):
        v = self.vertices
        f = self.faces
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        cross = np.cross(b - a, c - a)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if areas.sum() < 1e-12:
            raise DegenerateMesh("mesh has zero surface area")
        # signed tetrahedra against the origin (divergence theorem)
        dets = np.einsum("ij,ij->i", a, np.cross(b, c))
        vol = dets.sum() / 6.0
        if self._is_watertight() and abs(vol) > 1e-12:
            centroids = (a + b + c) / 4.0  # tetra centroid, apex at origin
            com = (dets[:, None] * centroids).sum(axis=0) / (6.0 * vol)
            if vol < 0:  # inward winding
                vol = -vol
            self.volume = float(vol)
            self.com = com
        else:
            # open mesh: area-weighted surface centroid
            self.centroid_fallback = True
            self.volume = float(abs(vol))
            tri_centroids = (a + b + c) / 3.0
            self.com = (areas[:, None] * tri_centroids).sum(axis=0) / areas.sum()

    def _is_watertight(self) -> bool:
        edges = {}
        for tri in self.faces:
            for i in range(3):
                e = (min(tri[i], tri[(i + 1) % 3]), max(tri[i], tri[(i + 1) % 3]))
                edges[e] = edges.get(e, 0) + 1
        return all(n == 2 for n in edges.values())

    def face_normals(self) -> np.ndarray:
        v, f = self.vertices, self.faces
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        lens = np.linalg.norm(n, axis=1)
        lens[lens == 0] = 1.0
        return n / lens[:, None]

    def face_areas(self) -> np.ndarray:
        v, f = self.vertices, self.faces
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(n, axis=1)


def load_mesh(path: str | Path) -> TriMesh:
    """Parse an ASCII OBJ (``v``/``f`` records); polygonal faces are
    fan-triangulated.  Volume and COM assume uniform density."""
    path = Path(path)
    if not path.exists():
        raise MeshParseError(f"no such file: {path}")
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    try:
        for line_no, raw in enumerate(path.read_text().splitlines(), 1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                if len(idx) < 3:
                    raise MeshParseError(f"line {line_no}: face with < 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    except (ValueError, IndexError) as exc:
        if isinstance(exc, MeshParseError):
            raise
        raise MeshParseError(f"{path}: {exc}") from exc
    if not vertices or not faces:
        raise MeshParseError(f"{path}: no geometry found")
    return TriMesh(np.array(vertices), np.array(faces))


def save_obj(mesh: TriMesh, path: str | Path) -> None:
    lines = [f"v {float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def convex_hull(points: np.ndarray) -> TriMesh:
    """Convex hull as a TriMesh with outward-oriented triangles.

    Deterministic for a fixed input order; hull vertices keep the input
    point order (ascending original index).
    """
    points = np.asarray(points, dtype=float)
    if len(points) < 4:
        raise DegenerateHull("need at least 4 points")
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise DegenerateHull(str(exc)) from exc
    used = np.sort(np.unique(hull.simplices))
    remap = {int(old): new for new, old in enumerate(used)}
    verts = points[used]
    faces = np.array([[remap[int(i)] for i in tri] for tri in hull.simplices])
    centroid = verts.mean(axis=0)
    # orient every triangle outward
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    normals = np.cross(b - a, c - a)
    inward = np.einsum("ij,ij->i", normals, a - centroid) < 0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return TriMesh(verts, faces)


@dataclass
class Facet:
    """Planar polygonal facet of a convex hull."""

    vertex_indices: np.ndarray  # ordered around the polygon, into hull verts
    polygon: np.ndarray  # (k, 3) ordered vertex positions
    normal: np.ndarray  # outward unit normal
    area: float


def merge_coplanar_facets(hull: TriMesh, angle_tol: float = 1e-4) -> list[Facet]:
    """Merge adjacent hull triangles whose normals deviate by less than
    ``angle_tol`` into convex polygonal facets."""
    normals = hull.face_normals()
    areas = hull.face_areas()
    # adjacency over shared edges
    edge_to_faces: dict[tuple[int, int], list[int]] = {}
    for fi, tri in enumerate(hull.faces):
        for i in range(3):
            e = (min(tri[i], tri[(i + 1) % 3]), max(tri[i], tri[(i + 1) % 3]))
            edge_to_faces.setdefault(e, []).append(fi)
    adj: dict[int, list[int]] = {i: [] for i in range(len(hull.faces))}
    for fs in edge_to_faces.values():
        for i in fs:
            for j in fs:
                if i != j:
                    adj[i].append(j)

    cos_tol = np.cos(angle_tol)
    seen = np.zeros(len(hull.faces), dtype=bool)
    facets: list[Facet] = []
    for seed in range(len(hull.faces)):
        if seen[seed]:
            continue
        group = [seed]
        seen[seed] = True
        queue = [seed]
        while queue:
            cur = queue.pop()
            for nb in adj[cur]:
                if not seen[nb] and np.dot(normals[seed], normals[nb]) > cos_tol:
                    seen[nb] = True
                    group.append(nb)
                    queue.append(nb)
        w = areas[group]
        n = (w[:, None] * normals[group]).sum(axis=0)
        n /= np.linalg.norm(n)
        vidx = np.unique(hull.faces[group])
        pts = hull.vertices[vidx]
        # order around the polygon: 2D hull in the facet plane
        e1 = _any_perpendicular(n)
        e2 = np.cross(n, e1)
        uv = np.column_stack([pts @ e1, pts @ e2])
        order = _convex_order_2d(uv)
        facets.append(
            Facet(
                vertex_indices=vidx[order],
                polygon=pts[order],
                normal=n,
                area=float(w.sum()),
            )
        )
    return facets


def _any_perpendicular(n: np.ndarray) -> np.ndarray:
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e = np.cross(n, ref)
    return e / np.linalg.norm(e)


def _convex_order_2d(uv: np.ndarray) -> np.ndarray:
    """Counter-clockwise ordering of points forming a convex polygon."""
    if len(uv) < 3:
        return np.arange(len(uv))
    try:
        h = ConvexHull(uv)
        return h.vertices
    except QhullError:
        # nearly-degenerate facet: order along the dominant axis
        d = uv - uv.mean(axis=0)
        axis = d[np.argmax(np.linalg.norm(d, axis=1))]
        return np.argsort(d @ axis)


def sample_point_cloud(mesh: TriMesh, m: int, seed: int) -> np.ndarray:
    """Area-weighted uniform surface samples, deterministic per seed."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    probs = areas / areas.sum()
    fi = rng.choice(len(mesh.faces), size=m, p=probs)
    u = rng.random(m)
    v = rng.random(m)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.vertices[mesh.faces[fi]]
    return tri[:, 0] + u[:, None] * (tri[:, 1] - tri[:, 0]) + v[:, None] * (
        tri[:, 2] - tri[:, 0]
    )


# --- auxiliary-plane geometry ----------------------------------------------


def plane_from_contacts(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray) -> np.ndarray:
    """Vector v such that the plane through the three points is
    v . x = |v|^2; v is the plane's closest point to the origin."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    n = np.cross(p2 - p1, p3 - p1)
    area2 = np.linalg.norm(n)
    if area2 / 2.0 <= 1e-10:
        raise CollinearContacts("contact points do not span a plane")
    n /= area2
    d = float(np.dot(n, p1))
    if abs(d) < 1e-12:
        raise ZeroPlaneVector("plane through the origin has no vector form")
    return d * n


def plane_align_rotation(v_r: np.ndarray) -> np.ndarray:
    """Minimal-angle rotation taking v_r / |v_r| onto +z.

    The antiparallel case (v_r along -z) rotates pi about the x axis.
    """
    v_r = np.asarray(v_r, dtype=float)
    norm = np.linalg.norm(v_r)
    if norm <= 1e-12:
        raise ZeroPlaneVector("cannot align a zero plane vector")
    u = v_r / norm
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(u, z))
    if c >= 1.0 - 1e-15:
        return np.eye(3)
    if c <= -1.0 + 1e-15:
        return rotation_from_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi)
    axis = np.cross(u, z)
    axis /= np.linalg.norm(axis)
    return rotation_from_axis_angle(axis, float(np.arccos(np.clip(c, -1.0, 1.0))))


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation taking unit vector a onto unit vector b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = float(np.dot(a, b))
    if c >= 1.0 - 1e-15:
        return np.eye(3)
    if c <= -1.0 + 1e-15:
        axis = _any_perpendicular(a)
        return rotation_from_axis_angle(axis, np.pi)
    axis = np.cross(a, b)
    axis /= np.linalg.norm(axis)
    return rotation_from_axis_angle(axis, float(np.arccos(np.clip(c, -1.0, 1.0))))


def apply_refinement_transform(p_r: np.ndarray, v_r: np.ndarray) -> np.ndarray:
    """Rigid motion R @ (p - v_r) per point; auxiliary-plane points land
    on z = 0 and point order is preserved."""
    p_r = np.asarray(p_r, dtype=float)
    v_r = np.asarray(v_r, dtype=float)
    r = plane_align_rotation(v_r)
    return (p_r - v_r[None, :]) @ r.T
