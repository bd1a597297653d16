"""4-point homography parameterization and planar warps.

A homography is carried either as a 3x3 matrix (bottom-right entry 1) or as
the displacements of the four image corners ("h4pt"), a (4, 2) float array in
corner order top-left, top-right, bottom-right, bottom-left. The two forms are
interchangeable through an exact DLT solve.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularHomographyError

_SINGULAR_COND = 1e12


def image_corners(width: int, height: int) -> np.ndarray:
    """Corner pixel coordinates, order TL, TR, BR, BL, shape (4, 2)."""
    w, h = float(width - 1), float(height - 1)
    return np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])


def identity_h4pt() -> np.ndarray:
    return np.zeros((4, 2))


def solve_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact homography mapping four source points onto four destinations.

    Solves the standard 8x8 linear system with the bottom-right entry pinned
    to 1. Raises SingularHomographyError for collinear/degenerate corners.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("solve_dlt expects four 2D point correspondences")
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * i] = [x, y, 1, 0, 0, 0, -x * u, -y * u]
        a[2 * i + 1] = [0, 0, 0, x, y, 1, -x * v, -y * v]
        b[2 * i] = u
        b[2 * i + 1] = v
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > _SINGULAR_COND:
        raise SingularHomographyError("degenerate corner configuration")
    h = np.linalg.solve(a, b)
    return np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    )


def h4pt_to_matrix(h4pt: np.ndarray, width: int, height: int) -> np.ndarray:
    """3x3 homography moving each image corner by its displacement."""
    h4pt = np.asarray(h4pt, dtype=float).reshape(4, 2)
    if not np.all(np.isfinite(h4pt)):
        raise SingularHomographyError("non-finite corner displacements")
    corners = image_corners(width, height)
    return solve_dlt(corners, corners + h4pt)


def matrix_to_h4pt(matrix: np.ndarray, width: int, height: int) -> np.ndarray:
    """Corner displacements induced by a 3x3 homography."""
    corners = image_corners(width, height)
    return apply_homography(matrix, corners) - corners


def apply_homography(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply a 3x3 homography to (..., 2) points."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    w = matrix[2, 0] * x + matrix[2, 1] * y + matrix[2, 2]
    if np.any(np.abs(w) < 1e-12):
        raise SingularHomographyError("point maps to infinity")
    u = (matrix[0, 0] * x + matrix[0, 1] * y + matrix[0, 2]) / w
    v = (matrix[1, 0] * x + matrix[1, 1] * y + matrix[1, 2]) / w
    return np.stack([u, v], axis=-1)


def invert_matrix(matrix: np.ndarray) -> np.ndarray:
    det = np.linalg.det(matrix)
    if not np.isfinite(det) or abs(det) < 1e-12:
        raise SingularHomographyError("homography is singular")
    inv = np.linalg.inv(matrix)
    return inv / inv[2, 2]


def invert_h4pt(h4pt: np.ndarray, width: int, height: int) -> np.ndarray:
    m = h4pt_to_matrix(h4pt, width, height)
    return matrix_to_h4pt(invert_matrix(m), width, height)


def compose_h4pt(second: np.ndarray, first: np.ndarray, width: int, height: int) -> np.ndarray:
    """Displacements of applying ``first`` then ``second``."""
    m = h4pt_to_matrix(second, width, height) @ h4pt_to_matrix(first, width, height)
    return matrix_to_h4pt(m / m[2, 2], width, height)


def scale_matrix(matrix: np.ndarray, factor: float) -> np.ndarray:
    """Rescale a homography to coordinates multiplied by ``factor``."""
    s = np.diag([factor, factor, 1.0])
    s_inv = np.diag([1.0 / factor, 1.0 / factor, 1.0])
    m = s @ matrix @ s_inv
    return m / m[2, 2]
