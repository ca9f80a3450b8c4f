"""Artifact emission: PGM rasterization of triangle fields and run manifests.

PGM (plain P2) keeps image regression tests bit-exact without any imaging
dependency.  The gray map is linear and symmetric around the zero level, so
the background (gamma = 0) renders mid-gray and the min/max of the mapped
range is recorded in a comment line.  Pixels outside the unit disk are 0.
"""

import hashlib
import json
import os

import numpy as np

PGM_SIZE = 200
_ZERO_GRAY = 128


def rasterize_field(mesh, values, vmax_abs=None, size=PGM_SIZE):
    """Rasterize a per-triangle field over [-1, 1]^2 to a gray image.

    Returns (pixels, vmax_abs): pixels is a (size, size) uint8 array, row 0
    at y = +1.  Values map linearly with 0 at gray 128 and +-vmax_abs at
    255/1.  Pixels outside the unit disk are 0; pixels inside the disk but
    outside the polygonal mesh stay at the zero level.
    """
    values = np.asarray(values, dtype=float).ravel()
    if vmax_abs is None:
        vmax_abs = float(np.max(np.abs(values))) if values.size else 0.0
    if vmax_abs <= 0:
        vmax_abs = 1.0
    coords = (np.arange(size) + 0.5) * 2.0 / size - 1.0
    X, Y = np.meshgrid(coords, -coords)           # row 0 is top (y = +1)
    inside = X**2 + Y**2 <= 1.0
    img = np.where(inside, float(_ZERO_GRAY), 0.0)

    # paint triangles over their pixel bounding boxes via barycentric tests
    for tri, v in zip(mesh.triangles, values):
        p = mesh.nodes[tri]
        j0 = max(0, int(np.floor((p[:, 0].min() + 1.0) / 2.0 * size)) - 1)
        j1 = min(size, int(np.ceil((p[:, 0].max() + 1.0) / 2.0 * size)) + 1)
        i0 = max(0, int(np.floor((1.0 - p[:, 1].max()) / 2.0 * size)) - 1)
        i1 = min(size, int(np.ceil((1.0 - p[:, 1].min()) / 2.0 * size)) + 1)
        if j0 >= j1 or i0 >= i1:
            continue
        px = X[i0:i1, j0:j1]
        py = Y[i0:i1, j0:j1]
        d = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) \
            - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
        l1 = ((p[1, 0] - p[0, 0]) * (py - p[0, 1])
              - (px - p[0, 0]) * (p[1, 1] - p[0, 1])) / d
        l2 = ((px - p[0, 0]) * (p[2, 1] - p[0, 1])
              - (p[2, 0] - p[0, 0]) * (py - p[0, 1])) / d
        hit = (l1 >= -1e-12) & (l2 >= -1e-12) & (l1 + l2 <= 1.0 + 1e-12)
        gray = _ZERO_GRAY + v / vmax_abs * 127.0
        block = img[i0:i1, j0:j1]
        block[hit & inside[i0:i1, j0:j1]] = gray
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), vmax_abs


def write_pgm(pixels, path, vmin=None, vmax=None):
    """Plain (P2) PGM with the mapped value range recorded as a comment."""
    h, w = pixels.shape
    lines = ["P2"]
    if vmin is not None:
        lines.append(f"# range vmin={vmin:.17g} vmax={vmax:.17g} zero_gray={_ZERO_GRAY}")
    lines.append(f"{w} {h}")
    lines.append("255")
    for row in pixels:
        lines.append(" ".join(str(int(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_field_pgm(mesh, values, path, vmax_abs=None):
    pixels, vabs = rasterize_field(mesh, values, vmax_abs=vmax_abs)
    write_pgm(pixels, path, vmin=-vabs, vmax=vabs)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config, artifact_names):
    """Manifest listing every produced artifact with its content hash."""
    entries = {name: sha256_file(os.path.join(out_dir, name))
               for name in sorted(artifact_names)}
    manifest = {"config": config, "artifacts": entries}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
