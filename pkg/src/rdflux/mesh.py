"""Conformal triangular meshes: construction, geometry, and ASCII file I/O.

Triangles are stored counterclockwise.  Local face ``f`` of a triangle joins
local vertices ``f`` and ``(f+1) % 3`` and is opposite local vertex
``(f+2) % 3``.  Edges are built once and shared: each interior edge knows its
two adjacent elements, each boundary face its single element and an integer
marker (structured meshes use 1=bottom, 2=right, 3=top, 4=left).
"""

import numpy as np

MESH_MAGIC = "rdmesh 1"


class MeshError(ValueError):
    pass


class Mesh:
    """Immutable-by-convention triangulation with precomputed connectivity."""

    def __init__(self, vertices, triangles, boundary_markers=None):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.num_vertices = len(self.vertices)
        self.num_triangles = len(self.triangles)
        if self.num_triangles == 0:
            raise MeshError("mesh has no triangles")

        self._build_geometry()
        self._build_edges(boundary_markers or {})
        self._check_invariants()

    # -- construction ---------------------------------------------------

    def _build_geometry(self):
        xy = self.vertices[self.triangles]  # (nt, 3, 2)
        d1 = xy[:, 1] - xy[:, 0]
        d2 = xy[:, 2] - xy[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        # scaled inward normals: n_i = perp(p_{i+2} - p_{i+1}), perp(d) = (-dy, dx)
        self.inward_normals = np.empty((self.num_triangles, 3, 2))
        for i in range(3):
            d = xy[:, (i + 2) % 3] - xy[:, (i + 1) % 3]
            self.inward_normals[:, i, 0] = -d[:, 1]
            self.inward_normals[:, i, 1] = d[:, 0]
        self.edge_lengths_local = np.linalg.norm(self.inward_normals, axis=2)[
            :, [2, 0, 1]
        ]  # length of local face f = |opposite normal of vertex (f+2)%3|
        self.diameters = self.edge_lengths_local.max(axis=1)
        self.perimeters = self.edge_lengths_local.sum(axis=1)

    def _build_edges(self, marker_map):
        # marker_map: {(vmin, vmax): marker} for boundary faces, optional
        edge_index = {}
        edge_verts = []
        edge_elems = []
        edge_local = []
        face_edge = np.empty((self.num_triangles, 3), dtype=np.int64)
        for t, tri in enumerate(self.triangles):
            for f in range(3):
                a, b = int(tri[f]), int(tri[(f + 1) % 3])
                key = (a, b) if a < b else (b, a)
                if key in edge_index:
                    e = edge_index[key]
                    if edge_elems[e][1] != -1:
                        raise MeshError(f"edge {key} shared by more than 2 elements")
                    edge_elems[e][1] = t
                    edge_local[e][1] = f
                else:
                    e = len(edge_verts)
                    edge_index[key] = e
                    edge_verts.append((a, b))
                    edge_elems.append([t, -1])
                    edge_local.append([f, -1])
                face_edge[t, f] = e
        self.edge_vertices = np.array(edge_verts, dtype=np.int64)
        self.edge_elements = np.array(edge_elems, dtype=np.int64)
        self.edge_local_face = np.array(edge_local, dtype=np.int64)
        self.face_edge = face_edge
        self.num_edges = len(self.edge_vertices)

        boundary = self.edge_elements[:, 1] == -1
        self.interior_edges = np.nonzero(~boundary)[0]
        self.boundary_faces = np.nonzero(boundary)[0]
        self.edge_markers = np.zeros(self.num_edges, dtype=np.int64)
        for e in self.boundary_faces:
            a, b = self.edge_vertices[e]
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            self.edge_markers[e] = marker_map.get(key, 1)

    def _check_invariants(self):
        if np.any(self.areas <= 0.0):
            bad = int(np.argmin(self.areas))
            raise MeshError(
                f"triangle {bad} has non-positive signed area {self.areas[bad]:g}; "
                "vertices must be counterclockwise"
            )

    # -- geometry queries -------------------------------------------------

    def element_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.triangles[t]]

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in radians."""
        xy = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = xy[:, (i + 1) % 3] - xy[:, i]
            b = xy[:, (i + 2) % 3] - xy[:, i]
            cosang = np.einsum("tx,tx->t", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return float(np.min(angles))

    def total_area(self) -> float:
        return float(self.areas.sum())


def scaled_inward_normals(mesh: Mesh, element: int) -> np.ndarray:
    """The three inward normals of an element, scaled by opposite-edge length.

    Row ``i`` is ``2 |K| grad(phi_i)`` for the linear vertex basis function;
    the rows sum to zero.
    """
    if element < 0 or element >= mesh.num_triangles:
        raise IndexError(f"element {element} out of range")
    return mesh.inward_normals[element].copy()


def generate_structured_mesh(nx: int, ny: int, rect=(0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """Structured triangulation of a rectangle, each cell split along the
    lower-left to upper-right diagonal.

    Parameters
    ----------
    nx, ny : int
        Number of cells per direction (>= 1).
    rect : (x0, y0, x1, y1)
        Corners of the rectangle; must be nondegenerate.

    Boundary markers: 1 bottom, 2 right, 3 top, 4 left.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")
    x0, y0, x1, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {rect!r}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    triangles = []
    for j in range(ny):
        for i in range(nx):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    markers = {}
    for i in range(nx):
        markers[tuple(sorted((vid(i, 0), vid(i + 1, 0))))] = 1
        markers[tuple(sorted((vid(i, ny), vid(i + 1, ny))))] = 3
    for j in range(ny):
        markers[tuple(sorted((vid(nx, j), vid(nx, j + 1))))] = 2
        markers[tuple(sorted((vid(0, j), vid(0, j + 1))))] = 4

    return Mesh(vertices, triangles, markers)


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain ASCII format (17 significant digits, diff-friendly)."""
    lines = [MESH_MAGIC, str(mesh.num_vertices)]
    for x, y in mesh.vertices:
        lines.append("%.17g %.17g" % (x, y))
    lines.append(str(mesh.num_triangles))
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    bf = mesh.boundary_faces
    lines.append(str(len(bf)))
    for e in bf:
        a, b = mesh.edge_vertices[e]
        lines.append(f"{a} {b} {mesh.edge_markers[e]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split("\n")
    it = iter(t for t in tokens if t.strip())
    header = next(it).strip()
    if header != MESH_MAGIC:
        raise MeshError(f"bad mesh header {header!r}, expected {MESH_MAGIC!r}")
    nv = int(next(it))
    vertices = np.array([[float(v) for v in next(it).split()] for _ in range(nv)])
    nt = int(next(it))
    triangles = np.array(
        [[int(v) for v in next(it).split()] for _ in range(nt)], dtype=np.int64
    )
    nb = int(next(it))
    markers = {}
    for _ in range(nb):
        a, b, m = (int(v) for v in next(it).split())
        markers[tuple(sorted((a, b)))] = m
    return Mesh(vertices, triangles, markers)
