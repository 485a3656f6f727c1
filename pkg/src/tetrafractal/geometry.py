"""Regular-tetrahedron geometry and the recursive fractal assembly.

Frame convention used everywhere in the package: the apex vertex sits on +z,
the base lies in the plane z = -r/3, vertex 2 points along +x and the edge
joining vertices 1 and 3 is parallel to y.  With this choice a Tetracopter
built from four submodules places its rotors exactly where the differential
thrust torque of :mod:`tetrafractal.dynamics` expects them.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DomainError, ResourceLimitError

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)
SQRT6 = np.sqrt(6.0)

DISK_RATIO = np.pi / (3.0 * SQRT3)
HEX_PACKING_RATIO = 2.0 * np.pi / (3.0 * SQRT3)
DEFAULT_MAX_DEPTH = 10

# Spin sign per rotor slot inside a Tetracopter: rotors 1 and 3 counter-clockwise.
TETRACOPTER_SPINS = np.array([1, -1, 1, -1])


def circumradius(edge_length):
    return 0.5 * np.sqrt(1.5) * edge_length


def unit_vertex_directions():
    """Unit vectors from the centre to the four vertices, canonical frame."""
    c = 2.0 * SQRT2 / 3.0
    dirs = []
    for azimuth in (240.0, 0.0, 120.0):
        t = np.radians(azimuth)
        dirs.append([c * np.cos(t), c * np.sin(t), -1.0 / 3.0])
    dirs.append([0.0, 0.0, 1.0])
    return np.array(dirs)


def skew(v):
    """Matrix of the left cross product ``v x .``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class TetrahedronGeometry:
    edge_length: float
    vertex_dirs: np.ndarray
    circumradius: float

    @property
    def vertices(self):
        return self.circumradius * self.vertex_dirs


def make_tetrahedron(edge_length):
    if not edge_length > 0:
        raise DomainError(f"edge length must be positive, got {edge_length!r}")
    edge_length = float(edge_length)
    return TetrahedronGeometry(edge_length, unit_vertex_directions(), circumradius(edge_length))


@dataclass(frozen=True)
class FractalAssembly:
    """Poses of the 4**depth elementary modules and the rotors they carry.

    ``module`` is ``"submodule"`` (one rotor on the vertical axis of each
    module) or ``"tetracopter"`` (four rotors per module, one per
    half-size submodule).  A depth-n Tetracopter assembly of edge L has the
    same rotors as a depth-(n+1) submodule assembly of edge L/2.
    """

    depth: int
    geometry: TetrahedronGeometry
    module: str
    module_poses: np.ndarray
    rotor_positions: np.ndarray
    rotor_spins: np.ndarray
    rotor_radius: float

    @property
    def bounding_edge(self):
        return 2 ** self.depth * self.geometry.edge_length

    def module_vertices(self):
        """All module vertices, shape (4**depth * 4, 3), module-major."""
        v = self.geometry.vertices
        return (self.module_poses[:, None, :] + v[None, :, :]).reshape(-1, 3)


def assembly_poses(geom, n):
    """Translations of the 4**n modules; top-level child index most significant."""
    poses = np.zeros((1, 3))
    for level in range(n):
        shifts = 2 ** level * geom.circumradius * geom.vertex_dirs
        poses = (shifts[:, None, :] + poses[None, :, :]).reshape(-1, 3)
    return poses


def generate_assembly(geom, n, module="submodule", max_depth=DEFAULT_MAX_DEPTH):
    """Build the n-assembly: four copies of the (n-1)-assembly shifted by 2**(n-1) r p_i."""
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a non-negative integer, got {n!r}")
    n = int(n)
    if n > max_depth:
        raise ResourceLimitError(f"depth {n} exceeds the configured maximum {max_depth}")
    poses = assembly_poses(geom, n)
    if module == "submodule":
        rotors = poses.copy()
        spins = TETRACOPTER_SPINS[np.arange(len(poses)) % 4] if n > 0 else np.array([1])
        radius = geom.edge_length / (2.0 * SQRT3)
    elif module == "tetracopter":
        offsets = 0.5 * geom.circumradius * geom.vertex_dirs
        rotors = (poses[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
        spins = np.tile(TETRACOPTER_SPINS, len(poses))
        radius = 0.5 * geom.edge_length / (2.0 * SQRT3)
    else:
        raise DomainError(f"unknown module kind {module!r}")
    return FractalAssembly(n, geom, module, poses, rotors, spins, radius)


def count_overlaps(centers, radius, tol=1e-12, chunk=512):
    """Brute-force count of disk pairs whose centre distance is below 2*radius - tol."""
    n = len(centers)
    limit = 2.0 * radius - tol
    overlaps = 0
    min_dist = np.inf
    for start in range(0, n, chunk):
        block = centers[start:start + chunk]
        d = np.linalg.norm(block[:, None, :] - centers[None, :, :], axis=-1)
        i = np.arange(start, start + len(block))[:, None]
        j = np.arange(n)[None, :]
        upper = j > i
        if upper.any():
            du = d[upper]
            overlaps += int(np.count_nonzero(du < limit))
            min_dist = min(min_dist, float(du.min()))
    return overlaps, min_dist


def rotor_disk_report(asm):
    """Projected rotor-disk coverage of the assembly base.

    The base area is measured from the convex hull of the projected module
    vertices, not from a formula, so the ratio is an honest check.
    """
    centers = asm.rotor_positions[:, :2]
    total = len(centers) * np.pi * asm.rotor_radius ** 2
    hull = ConvexHull(asm.module_vertices()[:, :2])
    base_area = float(hull.volume)
    scale = max(1.0, asm.bounding_edge)
    overlaps, min_dist = count_overlaps(centers, asm.rotor_radius, tol=1e-12 * scale)
    return {
        "depth": asm.depth,
        "rotor_count": len(centers),
        "rotor_radius": asm.rotor_radius,
        "total_disk_area": total,
        "base_area": base_area,
        "ratio": total / base_area,
        "expected_ratio": DISK_RATIO,
        "hex_packing_ratio": HEX_PACKING_RATIO,
        "overlap_found": overlaps > 0,
        "overlap_pairs": overlaps,
        "min_center_distance": min_dist if np.isfinite(min_dist) else None,
    }


@dataclass(frozen=True)
class TetraDimensions:
    a: float
    x: float
    d: float
    h: float
    R: float
    r: float
    phi: float


def derive_dimensions(a):
    """Standard regular-tetrahedron dimensions from the side ``a``.

    x: circumradius of a face, d: inradius of a face, h: height,
    R: circumradius, r: inradius.  ``phi = atan(r / x)`` is the elevation of
    the centre seen from a base vertex, equal to asin(1/3).
    """
    if not a > 0:
        raise DomainError(f"side length must be positive, got {a!r}")
    a = float(a)
    x = SQRT3 / 3.0 * a
    d = SQRT3 / 6.0 * a
    h = SQRT6 / 3.0 * a
    R = SQRT6 / 4.0 * a
    r = SQRT6 / 12.0 * a
    return TetraDimensions(a, x, d, h, R, r, float(np.arctan(r / x)))
