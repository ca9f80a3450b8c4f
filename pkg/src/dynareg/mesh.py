"""P1 triangulation of the unit disk and the standard FEM matrices.

The mesh is a deterministic concentric-ring construction: ring j sits at
radius j/n_rings and carries 6j nodes (a single center node at j=0), with
rings stitched together by an angular two-pointer sweep.  Conductivities are
piecewise constant per triangle.
"""

import numpy as np


class DiskMesh:
    def __init__(self, nodes, triangles, boundary):
        self.nodes = np.asarray(nodes, dtype=float)           # (n_nodes, 2)
        self.triangles = np.asarray(triangles, dtype=int)     # (n_tri, 3), ccw
        self.boundary = np.asarray(boundary, dtype=int)       # ordered ccw cycle
        self.areas = _signed_areas(self.nodes, self.triangles)
        if np.any(self.areas <= 0):
            raise ValueError("mesh contains non-positively oriented triangles")
        mask = np.ones(len(self.nodes), dtype=bool)
        mask[self.boundary] = False
        self.interior = np.flatnonzero(mask)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_boundary(self):
        return len(self.boundary)

    @property
    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def total_area(self):
        return float(self.areas.sum())

    def dump(self, path):
        """Sectioned text dump: nodes, triangles, boundary cycle."""
        with open(path, "w") as fh:
            fh.write(f"nodes {self.n_nodes}\n")
            for x, y in self.nodes:
                fh.write(f"{x:.17g} {y:.17g}\n")
            fh.write(f"triangles {self.n_triangles}\n")
            for a, b, c in self.triangles:
                fh.write(f"{a} {b} {c}\n")
            fh.write(f"boundary {self.n_boundary}\n")
            fh.write(" ".join(str(i) for i in self.boundary) + "\n")


def _signed_areas(nodes, triangles):
    p = nodes[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_disk_mesh(n_rings):
    """Concentric-ring triangulation of the unit disk."""
    if n_rings < 2:
        raise ValueError("need at least two rings")
    nodes = [(0.0, 0.0)]
    ring_start = [0]
    for j in range(1, n_rings + 1):
        ring_start.append(len(nodes))
        r = j / n_rings
        for i in range(6 * j):
            th = 2.0 * np.pi * i / (6 * j)
            nodes.append((r * np.cos(th), r * np.sin(th)))
    nodes = np.asarray(nodes)

    triangles = []
    for j in range(n_rings):
        inner = [0] if j == 0 else list(range(ring_start[j], ring_start[j] + 6 * j))
        outer = list(range(ring_start[j + 1], ring_start[j + 1] + 6 * (j + 1)))
        triangles.extend(_stitch_rings(inner, outer, nodes))
    triangles = np.asarray(triangles, dtype=int)

    # enforce ccw orientation
    areas = _signed_areas(nodes, triangles)
    flip = areas < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    boundary = np.arange(ring_start[n_rings], ring_start[n_rings] + 6 * n_rings)
    return DiskMesh(nodes, triangles, boundary)


def _stitch_rings(inner, outer, nodes):
    """Triangulate the annulus between two node cycles by an angle sweep."""
    if len(inner) == 1:
        c = inner[0]
        return [(c, outer[i], outer[(i + 1) % len(outer)])
                for i in range(len(outer))]

    def angle(idx):
        x, y = nodes[idx]
        return np.arctan2(y, x) % (2.0 * np.pi)

    def next_angle(cycle, p):
        if p + 1 == len(cycle):
            return 2.0 * np.pi
        if p + 1 > len(cycle):
            return np.inf
        return angle(cycle[p + 1])

    tris = []
    i = o = 0
    ni, no = len(inner), len(outer)
    # both cycles start at angle 0; advance whichever pointer trails in angle
    while i < ni or o < no:
        if next_angle(outer, o) <= next_angle(inner, i):
            tris.append((inner[i % ni], outer[o % no], outer[(o + 1) % no]))
            o += 1
        else:
            tris.append((inner[i % ni], outer[o % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def _p1_element(coords):
    """Gradient matrix (3, 2) of the P1 basis and the triangle area."""
    (x1, y1), (x2, y2), (x3, y3) = coords
    area2 = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    grads = np.array([[y2 - y3, x3 - x2],
                      [y3 - y1, x1 - x3],
                      [y1 - y2, x2 - x1]]) / area2
    return grads, 0.5 * area2


def assemble_stiffness(mesh, sigma):
    """Stiffness matrix of -div(sigma grad .) with piecewise-constant sigma."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    if sigma.size != mesh.n_triangles:
        raise ValueError("one conductivity value per triangle required")
    if np.min(sigma) <= 0.0:
        raise ValueError("conductivity must be positive on every triangle")
    A = np.zeros((mesh.n_nodes, mesh.n_nodes))
    for e, tri in enumerate(mesh.triangles):
        grads, area = _p1_element(mesh.nodes[tri])
        Ke = sigma[e] * area * (grads @ grads.T)
        A[np.ix_(tri, tri)] += Ke
    return A


def boundary_mass(mesh):
    """Mass matrix of the P1 boundary traces on the polygonal boundary."""
    nb = mesh.n_boundary
    if nb == 0:
        raise ValueError("mesh has no boundary cycle")
    pts = mesh.nodes[mesh.boundary]
    h = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)  # segment i: i->i+1
    M = np.zeros((nb, nb))
    for i in range(nb):
        j = (i + 1) % nb
        M[i, i] += h[i] / 3.0
        M[j, j] += h[i] / 3.0
        M[i, j] += h[i] / 6.0
        M[j, i] += h[i] / 6.0
    return M
