"""Lagrange bases and Gauss rules on the unit interval and the unit square."""

from dataclasses import dataclass
from functools import cache

import numpy as np
from numpy.polynomial.legendre import leggauss

SUPPORTED_DEGREES = (1, 2, 3)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Quadrature rule on a reference domain.

    Attributes:
        points: Quadrature points, shape (nq, dim).
        weights: Weights summing to the measure of the reference domain.
    """

    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        """Number of quadrature points."""
        return int(self.weights.shape[0])


@cache
def gauss_interval(n_points: int) -> QuadratureRule:
    """
    Gauss-Legendre rule on [0, 1], exact for polynomials of degree 2n-1.

    Args:
        n_points: Number of points.

    Returns:
        Rule with points of shape (n, 1).
    """
    x, w = leggauss(n_points)
    return QuadratureRule(points=(0.5 * (x + 1.0))[:, None], weights=0.5 * w)


@cache
def gauss_square(n_points: int) -> QuadratureRule:
    """
    Tensor Gauss-Legendre rule on [0, 1]^2.

    Args:
        n_points: Number of points per direction.

    Returns:
        Rule with points of shape (n^2, 2), ordered with the first coordinate fastest.
    """
    line = gauss_interval(n_points)
    x = line.points[:, 0]
    xx, yy = np.meshgrid(x, x, indexing="xy")
    ww = np.outer(line.weights, line.weights)
    return QuadratureRule(points=np.column_stack([xx.ravel(), yy.ravel()]), weights=ww.ravel())


def points_for_degree(degree: int, extra: int = 1) -> int:
    """
    Number of Gauss points per direction for a degree-k discretisation.

    k + 1 points integrate degree 2k + 1 exactly; ``extra`` adds points for the
    rational geometry factors of curved cells.

    Args:
        degree: Polynomial degree k.
        extra: Additional points per direction.

    Returns:
        Points per direction.
    """
    return degree + 1 + max(extra, 0)


def lagrange_1d(degree: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the equispaced Lagrange basis of [0, 1] and its derivative.

    Args:
        degree: Polynomial degree k >= 1 (nodes i/k).
        x: Evaluation points of any shape.

    Returns:
        Tuple (values, derivatives), each of shape x.shape + (k + 1,).
    """
    nodes = np.linspace(0.0, 1.0, degree + 1)
    x = np.asarray(x, dtype=float)[..., None]
    diff = x - nodes
    values = np.ones(x.shape[:-1] + (degree + 1,))
    derivs = np.zeros_like(values)
    for i in range(degree + 1):
        others = [j for j in range(degree + 1) if j != i]
        denom = np.prod([nodes[i] - nodes[j] for j in others])
        values[..., i] = np.prod(diff[..., others], axis=-1) / denom
        for m in others:
            rest = [j for j in others if j != m]
            term = np.prod(diff[..., rest], axis=-1) if rest else np.ones(x.shape[:-1])
            derivs[..., i] += term / denom
    return values, derivs


def lattice(degree: int) -> np.ndarray:
    """
    Nodal lattice of the Qk element on [0, 1]^2.

    Local node a = j * (k + 1) + i sits at (i / k, j / k).

    Args:
        degree: Polynomial degree k.

    Returns:
        Array of shape ((k + 1)^2, 2).
    """
    t = np.linspace(0.0, 1.0, degree + 1)
    xx, yy = np.meshgrid(t, t, indexing="xy")
    return np.column_stack([xx.ravel(), yy.ravel()])


def tabulate_q(degree: int, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the tensor-product Qk basis at reference points.

    Args:
        degree: Polynomial degree k.
        xi: Points of shape (..., 2).

    Returns:
        Tuple (values (..., nloc), gradients (..., nloc, 2)) with respect to xi.
    """
    vx, dx = lagrange_1d(degree, xi[..., 0])
    vy, dy = lagrange_1d(degree, xi[..., 1])
    values = (vy[..., :, None] * vx[..., None, :]).reshape(xi.shape[:-1] + (-1,))
    gx = (vy[..., :, None] * dx[..., None, :]).reshape(xi.shape[:-1] + (-1,))
    gy = (dy[..., :, None] * vx[..., None, :]).reshape(xi.shape[:-1] + (-1,))
    return values, np.stack([gx, gy], axis=-1)
