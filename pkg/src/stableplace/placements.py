"""Analytic stable-placement engine: enumeration over convex-hull facets,
support-polygon stability checks, quasi-static tumble settling, and
dataset record generation.

Replaces physics-engine dropping with a deterministic pivot-until-stable
procedure; dynamic effects (bouncing, rolling) are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .mesh import (
    TriMesh,
    ZeroPlaneVector,
    convex_hull,
    merge_coplanar_facets,
    plane_from_contacts,
    rotation_between,
)
from .rotations import random_rotation, rotation_from_axis_angle

CONTACT_TOL = 1e-6
DEFAULT_MARGIN_EPS = 1e-4


class SettleDiverged(RuntimeError):
    """Tumbling did not reach a stable pose within max_tips."""


@dataclass
class Placement:
    """Resting pose: world rotation plus translation with z the resting
    height; xy is canonical (COM above the origin)."""

    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)
    stability_margin: float = 0.0
    score: float = 0.0
    type_id: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "rotation": [float(x) for x in np.asarray(self.rotation).ravel()],
            "translation": [float(x) for x in np.asarray(self.translation)],
            "stability_margin": float(self.stability_margin),
            "score": float(self.score),
            "type_id": self.type_id,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Placement":
        return cls(
            rotation=np.array(d["rotation"], dtype=float).reshape(3, 3),
            translation=np.array(d["translation"], dtype=float),
            stability_margin=float(d.get("stability_margin", 0.0)),
            score=float(d.get("score", 0.0)),
            type_id=d.get("type_id"),
        )


@dataclass
class PlacementRecord:
    """One dataset row: a settled stable placement, three of its plane
    contact points, and a paired unstable pose made by rotating the
    settled pose about its world COM, with the contact plane transformed
    along (v_gt = plane_from_contacts of the rotated contacts)."""

    object_id: str
    placement: Placement
    contact_points: np.ndarray  # (3, 3), z ~ 0
    unstable_rotation: np.ndarray | None = None  # (3, 3)
    v_gt: np.ndarray | None = None  # (3,)

    def to_json_dict(self) -> dict:
        d = {"object_id": self.object_id}
        d.update(self.placement.to_json_dict())
        d["contact_points"] = [[float(x) for x in p] for p in self.contact_points]
        if self.unstable_rotation is not None:
            d["unstable_rotation"] = [float(x) for x in self.unstable_rotation.ravel()]
        if self.v_gt is not None:
            d["v_gt"] = [float(x) for x in self.v_gt]
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlacementRecord":
        return cls(
            object_id=d["object_id"],
            placement=Placement.from_json_dict(d),
            contact_points=np.array(d["contact_points"], dtype=float),
            unstable_rotation=(
                np.array(d["unstable_rotation"], dtype=float).reshape(3, 3)
                if "unstable_rotation" in d
                else None
            ),
            v_gt=np.array(d["v_gt"], dtype=float) if "v_gt" in d else None,
        )


# --- 2D support-polygon helpers ----------------------------------------------


def _support_polygon(xy: np.ndarray) -> np.ndarray | None:
    """CCW convex hull of contact xy points, or None when degenerate
    (point / segment support)."""
    if len(xy) < 3:
        return None
    try:
        h = ConvexHull(xy)
    except QhullError:
        return None
    return xy[h.vertices]


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def signed_polygon_margin(p: np.ndarray, poly: np.ndarray) -> float:
    """Distance from p to the boundary of a CCW convex polygon; positive
    inside, negative outside."""
    k = len(poly)
    inside = True
    min_edge = np.inf
    min_bound = np.inf
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        d = b - a
        n = np.array([d[1], -d[0]])
        ln = np.linalg.norm(n)
        if ln < 1e-15:
            continue
        n /= ln
        s = float(n @ (p - a))  # positive on the outward side
        if s > 0:
            inside = False
        min_edge = min(min_edge, -s)
        min_bound = min(min_bound, _point_segment_distance(p, a, b))
    return min_edge if inside else -min_bound


def nearest_polygon_edge(p: np.ndarray, poly: np.ndarray) -> int:
    """Index of the polygon edge nearest to p (lowest index on ties)."""
    k = len(poly)
    dists = [_point_segment_distance(p, poly[i], poly[(i + 1) % k]) for i in range(k)]
    return int(np.argmin(dists))


def polygon_inradius(poly: np.ndarray) -> float:
    """Chebyshev radius of a CCW convex polygon."""
    rows, rhs = [], []
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        d = b - a
        n = np.array([d[1], -d[0]])
        ln = np.linalg.norm(n)
        if ln < 1e-15:
            continue
        n /= ln
        rows.append([n[0], n[1], 1.0])
        rhs.append(float(n @ a))
    if len(rows) < 3:
        return 0.0
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(None, None), (None, None), (0, None)],
        method="highs",
    )
    return float(res.x[2]) if res.success else 0.0


# --- stability -----------------------------------------------------------------


def _contact_margin(
    world_pts: np.ndarray, com_xy: np.ndarray, contact_tol: float
) -> tuple[float, np.ndarray]:
    """COM-projection margin against the support of points resting on
    z = 0, plus the contact xy set.  Degenerate supports give margin <= 0.
    """
    contacts = world_pts[world_pts[:, 2] <= contact_tol]
    if len(contacts) == 0:
        return -np.inf, np.empty((0, 2))
    xy = contacts[:, :2]
    poly = _support_polygon(xy)
    if poly is not None:
        return signed_polygon_margin(com_xy, poly), xy
    if len(xy) == 1:
        return -float(np.linalg.norm(com_xy - xy[0])), xy
    # segment support
    d = min(
        _point_segment_distance(com_xy, xy[i], xy[j])
        for i in range(len(xy))
        for j in range(i + 1, len(xy))
    )
    return -float(d), xy


def stability_check(
    mesh: TriMesh,
    pose: Placement,
    margin_eps: float = DEFAULT_MARGIN_EPS,
    contact_tol: float = CONTACT_TOL,
) -> tuple[bool, float]:
    """Support-polygon stability of a posed mesh.

    Stable iff the COM projection sits at least margin_eps inside the 2D
    hull of the plane contacts and no vertex penetrates the plane.
    """
    world = mesh.vertices @ pose.rotation.T + pose.translation
    if world[:, 2].min() < -contact_tol:
        return False, -np.inf
    com = pose.rotation @ mesh.com + pose.translation
    margin, _ = _contact_margin(world, com[:2], contact_tol)
    return bool(margin >= margin_eps), float(margin)


def enumerate_stable(
    mesh: TriMesh,
    margin_eps: float = DEFAULT_MARGIN_EPS,
    angle_tol: float = 1e-4,
) -> list[Placement]:
    """Candidate placements from merged convex-hull facets, keeping those
    whose COM projection lies at least margin_eps inside the facet's
    support polygon.  score = margin / facet inradius, clamped to [0, 1].
    """
    hull = convex_hull(mesh.vertices)
    facets = merge_coplanar_facets(hull, angle_tol)
    out: list[Placement] = []
    for facet in facets:
        rot = rotation_between(facet.normal, np.array([0.0, 0.0, -1.0]))
        poly_xy = (facet.polygon @ rot.T)[:, :2]
        try:
            poly_xy = poly_xy[ConvexHull(poly_xy).vertices]
        except QhullError:
            continue
        com = rot @ mesh.com
        margin = signed_polygon_margin(com[:2], poly_xy)
        if margin < margin_eps:
            continue
        zmin = (mesh.vertices @ rot.T)[:, 2].min()
        inr = polygon_inradius(poly_xy)
        out.append(
            Placement(
                rotation=rot,
                translation=np.array([-com[0], -com[1], -zmin]),
                stability_margin=float(margin),
                score=float(np.clip(margin / inr, 0.0, 1.0)) if inr > 0 else 0.0,
            )
        )
    return out


# --- quasi-static settling -------------------------------------------------------


def _pivot_axis(
    contacts_xy: np.ndarray, com_xy: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pivot line (point a, unit horizontal direction u) for an unstable
    contact configuration."""
    poly = _support_polygon(contacts_xy)
    if poly is not None:
        e = nearest_polygon_edge(com_xy, poly)
        a2 = poly[e]
        d = poly[(e + 1) % len(poly)] - a2
        u2 = d / np.linalg.norm(d)
    elif len(contacts_xy) >= 2 and _spread(contacts_xy) > 1e-9:
        # segment support: pivot about the contact line
        a2 = contacts_xy.mean(axis=0)
        far = contacts_xy[np.argmax(np.linalg.norm(contacts_xy - a2, axis=1))]
        d = far - a2
        u2 = d / np.linalg.norm(d)
    else:
        # point support: pivot about the horizontal perpendicular to the
        # lean direction
        a2 = contacts_xy[0]
        lean = com_xy - a2
        ln = np.linalg.norm(lean)
        d = lean / ln if ln > 1e-12 else np.array([1.0, 0.0])
        u2 = np.array([-d[1], d[0]])
    return np.array([a2[0], a2[1], 0.0]), np.array([u2[0], u2[1], 0.0])


def _spread(xy: np.ndarray) -> float:
    c = xy.mean(axis=0)
    return float(np.linalg.norm(xy - c, axis=1).max())


def settle(
    mesh: TriMesh,
    initial: np.ndarray,
    max_tips: int = 200,
    margin_eps: float = DEFAULT_MARGIN_EPS,
    contact_tol: float = CONTACT_TOL,
    return_trace: bool = False,
):
    """Lower the mesh onto the plane under ``initial`` and pivot about
    support edges until the COM projection enters the support polygon.

    Each pivot rotates about the support edge nearest the COM projection
    by the smallest angle that brings a new hull vertex into contact; the
    COM height is non-increasing across pivots.  Returns the stable
    Placement; with return_trace=True also returns the list of COM
    heights after each drop.
    """
    hull = convex_hull(mesh.vertices)
    hv = hull.vertices
    com_body = mesh.com
    rot = np.asarray(initial, dtype=float).copy()
    heights: list[float] = []

    for tip in range(max_tips + 1):
        world = hv @ rot.T
        zmin = world[:, 2].min()
        world = world - np.array([0.0, 0.0, zmin])
        com = rot @ com_body - np.array([0.0, 0.0, zmin])
        heights.append(float(com[2]))
        margin, contacts_xy = _contact_margin(world, com[:2], contact_tol)
        if margin >= margin_eps:
            com_r = rot @ com_body
            zmin_mesh = (mesh.vertices @ rot.T)[:, 2].min()
            placement = Placement(
                rotation=rot,
                translation=np.array([-com_r[0], -com_r[1], -zmin_mesh]),
                stability_margin=float(margin),
            )
            poly = _support_polygon(contacts_xy)
            if poly is not None:
                inr = polygon_inradius(poly)
                placement.score = (
                    float(np.clip(margin / inr, 0.0, 1.0)) if inr > 0 else 0.0
                )
            return (placement, heights) if return_trace else placement

        a, u = _pivot_axis(contacts_xy, com[:2])
        r_com = com - a
        torque = u[0] * r_com[1] - u[1] * r_com[0]
        s = -1.0 if torque > 0 else 1.0
        # smallest rotation bringing a new vertex down to the plane:
        # vertex z under the pivot is A cos(phi) + B sin(phi)
        rel = world - a
        a_z = rel[:, 2]
        b_z = s * (u[0] * rel[:, 1] - u[1] * rel[:, 0])
        phi = np.arctan2(np.maximum(a_z, 0.0), -b_z)
        # only vertices strictly above the plane can become the new contact
        valid = (a_z > contact_tol) & (phi > 1e-9)
        if not np.any(valid):
            raise SettleDiverged("no pivot target vertex")
        phi_star = float(phi[valid].min())
        rot = rotation_from_axis_angle(u, s * phi_star) @ rot

    raise SettleDiverged(f"exceeded max_tips={max_tips}")


# --- dataset generation -------------------------------------------------------------


@dataclass
class DatasetResult:
    records: list[PlacementRecord]
    diverged: dict[str, int]


def _pick_contact_triple(contacts_world: np.ndarray) -> np.ndarray:
    """Three well-spread, non-collinear contact points (z ~ 0)."""
    xy = contacts_world[:, :2]
    poly = _support_polygon(xy)
    if poly is None:
        raise SettleDiverged("stable placement with degenerate contact set")
    # map polygon vertices back to the original contact rows
    idx = []
    for p in poly:
        idx.append(int(np.argmin(np.linalg.norm(xy - p, axis=1))))
    k = len(idx)
    chosen = [idx[0], idx[k // 3], idx[(2 * k) // 3]]
    return contacts_world[chosen]


def settle_record(
    object_id: str,
    mesh: TriMesh,
    initial: np.ndarray,
    rng: np.random.Generator,
    max_tips: int = 200,
) -> PlacementRecord:
    """Settle one drop and build a full dataset record."""
    placement = settle(mesh, initial, max_tips=max_tips)
    world = mesh.vertices @ placement.rotation.T + placement.translation
    contacts = world[world[:, 2] <= CONTACT_TOL]
    triple = _pick_contact_triple(contacts)
    pivot = placement.rotation @ mesh.com + placement.translation

    unstable_rotation = None
    v_gt = None
    for _ in range(100):
        r_rand = random_rotation(rng)
        rotated = pivot + (triple - pivot) @ r_rand.T
        try:
            v = plane_from_contacts(rotated[0], rotated[1], rotated[2])
        except ZeroPlaneVector:
            continue
        if np.linalg.norm(v) < 1e-6:
            continue
        unstable_rotation = r_rand @ placement.rotation
        v_gt = v
        break
    return PlacementRecord(
        object_id=object_id,
        placement=placement,
        contact_points=triple,
        unstable_rotation=unstable_rotation,
        v_gt=v_gt,
    )


def generate_dataset(
    meshes: list[tuple[str, TriMesh]],
    drops_per_object: int,
    seed: int,
    max_tips: int = 200,
) -> DatasetResult:
    """Settle ``drops_per_object`` seeded random orientations per object.

    Each drop derives its RNG stream from (seed, object index, drop
    index), so results are independent of scheduling; diverged settles
    are skipped and counted.
    """
    if drops_per_object < 1:
        raise ValueError("drops_per_object must be >= 1")
    records: list[PlacementRecord] = []
    diverged: dict[str, int] = {}
    for obj_idx, (object_id, mesh) in enumerate(meshes):
        diverged[object_id] = 0
        for drop_idx in range(drops_per_object):
            rec = generate_one_drop(object_id, mesh, seed, obj_idx, drop_idx, max_tips)
            if rec is None:
                diverged[object_id] += 1
            else:
                records.append(rec)
    return DatasetResult(records=records, diverged=diverged)


def generate_one_drop(
    object_id: str,
    mesh: TriMesh,
    seed: int,
    obj_idx: int,
    drop_idx: int,
    max_tips: int = 200,
) -> PlacementRecord | None:
    """One dataset drop; None when the settle diverged.  Top-level so it
    can run in a worker pool."""
    rng = np.random.default_rng([seed, obj_idx, drop_idx])
    initial = random_rotation(rng)
    try:
        return settle_record(object_id, mesh, initial, rng, max_tips=max_tips)
    except SettleDiverged:
        return None
