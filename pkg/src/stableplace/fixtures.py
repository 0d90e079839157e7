"""Watertight fixture meshes used by the test suite and the example
scripts: cube, boxes, regular tetrahedron, L-prism, T-prism, and a
sphere approximation."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh

_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # z = lo
        [4, 5, 6], [4, 6, 7],  # z = hi
        [0, 1, 5], [0, 5, 4],  # y = lo
        [2, 3, 7], [2, 7, 6],  # y = hi
        [1, 2, 6], [1, 6, 5],  # x = hi
        [3, 0, 4], [3, 4, 7],  # x = lo
    ]
)


def box(sx: float, sy: float, sz: float, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box, outward winding."""
    cx, cy, cz = center
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    v = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ]
    )
    return TriMesh(v, _BOX_FACES.copy())


def unit_cube() -> TriMesh:
    return box(1.0, 1.0, 1.0)


def tall_box() -> TriMesh:
    """1 x 1 x 10 box (small end-face stability basins)."""
    return box(1.0, 1.0, 10.0)


def regular_tetrahedron(edge: float = 1.0) -> TriMesh:
    s = edge / (2.0 * np.sqrt(2.0))
    v = s * np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriMesh(v, f)


def _extrude_polygon(outline: np.ndarray, cap_tris: np.ndarray, height: float) -> TriMesh:
    """Prism over a simple (possibly concave) xy outline; cap_tris
    triangulates the outline (CCW).  Bottom at z=0, top at z=height."""
    n = len(outline)
    bottom = np.column_stack([outline, np.zeros(n)])
    top = np.column_stack([outline, np.full(n, height)])
    verts = np.vstack([bottom, top])
    faces = []
    for a, b, c in cap_tris:  # bottom cap, outward = -z
        faces.append([a, c, b])
    for a, b, c in cap_tris:  # top cap, outward = +z
        faces.append([n + a, n + b, n + c])
    for i in range(n):  # sides
        j = (i + 1) % n
        faces.append([i, j, n + j])
        faces.append([i, n + j, n + i])
    return TriMesh(verts, np.array(faces))


def l_prism() -> TriMesh:
    """2 x 2 x 1 block minus a 1 x 1 x 1 corner (L cross-section)."""
    outline = np.array(
        [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float
    )
    cap = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]])
    return _extrude_polygon(outline, cap, 1.0)


def t_prism() -> TriMesh:
    """T-nut-like prism: 3 x 1 bar on a 1 x 1 stem, extruded to height 1."""
    outline = np.array(
        [[1, 0], [2, 0], [2, 1], [3, 1], [3, 2], [0, 2], [0, 1], [1, 1]],
        dtype=float,
    )
    cap = np.array(
        [[0, 1, 2], [0, 2, 7], [6, 7, 5], [7, 2, 5], [2, 4, 5], [2, 3, 4]]
    )
    return _extrude_polygon(outline, cap, 1.0)


def icosphere(radius: float = 0.03, subdivisions: int = 2) -> TriMesh:
    """Subdivided icosahedron projected onto a sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    verts = [tuple(p) for p in v]
    index = {p: i for i, p in enumerate(verts)}

    def midpoint(i, j):
        m = (np.array(verts[i]) + np.array(verts[j])) / 2.0
        m /= np.linalg.norm(m)
        key = tuple(np.round(m, 12))
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    faces = f.tolist()
    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    return TriMesh(radius * np.array(verts, dtype=float), np.array(faces))


def standard_fixtures() -> dict[str, TriMesh]:
    """The five enumeration/settle acceptance fixtures."""
    return {
        "cube": unit_cube(),
        "tetrahedron": regular_tetrahedron(),
        "tall_box": tall_box(),
        "l_prism": l_prism(),
        "t_prism": t_prism(),
    }
