"""Dictionary learning and assembly of the solver inputs."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

_EPS = 1e-12
# spatial weight for sizes normalized to sum to one (see README, "Parameters")
DEFAULT_GAMMA = 0.01


@dataclass(frozen=True)
class Dictionary:
    """Nonnegative dictionary ``D`` (d x l) and the NMF error trace."""

    D: np.ndarray
    errors: tuple = ()

    @property
    def l(self):
        return self.D.shape[1]


def learn_dictionary(X, l, iterations=200, seed=0):
    """Learn ``D >= 0`` with Frobenius-loss multiplicative updates.

    Words start as ``l`` distinct data columns (seeded) plus 1e-6. Words whose
    activations vanish are re-seeded from random data columns. The returned
    ``errors`` hold ``||X - D U'||_F`` before the first and after each update.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("feature matrix must be a nonempty 2-D array")
    if np.any(X < 0):
        raise ValueError("feature matrix must be nonnegative")
    if l < 1:
        raise ValueError("dictionary size must be >= 1")
    d, n = X.shape
    rng = np.random.default_rng(seed)
    if l > n:
        warnings.warn(f"dictionary size {l} exceeds superpixel count {n}", stacklevel=2)
        cols = np.concatenate([rng.permutation(n), rng.integers(0, n, l - n)])
        D = X[:, cols] + 1e-6 + 1e-6 * rng.random((d, l))
    else:
        D = X[:, rng.choice(n, size=l, replace=False)] + 1e-6
    H = rng.random((l, n)) + 1e-6

    errors = [float(np.linalg.norm(X - D @ H))]
    for _ in range(iterations):
        H *= (D.T @ X) / (D.T @ D @ H + _EPS)
        D *= (X @ H.T) / (D @ (H @ H.T) + _EPS)
        dead = H.max(axis=1) <= _EPS
        if dead.any():
            # a word with no activation does not change D @ H, so this keeps the error trace
            D[:, dead] = X[:, rng.integers(0, n, int(dead.sum()))] + 1e-6
            H[dead] = 1e-6
        errors.append(float(np.linalg.norm(X - D @ H)))
    return Dictionary(D, tuple(errors))


def dissimilarity(D, X):
    """``R[j, i] = ||d_j - x_i||^2``, computed by explicit differences."""
    D = np.asarray(D, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if D.shape[0] != X.shape[0]:
        raise ValueError(f"dimension mismatch: D is {D.shape}, X is {X.shape}")
    R = np.empty((D.shape[1], X.shape[1]))
    for j in range(D.shape[1]):
        diff = X - D[:, j:j + 1]
        R[j] = np.einsum("ij,ij->j", diff, diff)
    return R


def size_matrix(s):
    """Diagonal of the size matrix, normalized to sum to one."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or np.any(s < 1):
        raise ValueError("sizes must be positive pixel counts")
    return s / s.sum()


def _sq_feature_dist(graph, X):
    diff = X[:, graph.i] - X[:, graph.j]
    return np.einsum("ij,ij->j", diff, diff)


def edge_weights(graph, X, sigma_x):
    """Sparse symmetric similarity ``exp(-||x_i - x_j||^2 / sigma_x - bbar)``."""
    if not sigma_x > 0:
        raise ValueError("sigma_x must be positive")
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != graph.n:
        raise ValueError("graph node count differs from feature columns")
    w = np.exp(-_sq_feature_dist(graph, X) / sigma_x - graph.bbar)
    rows = np.concatenate([graph.i, graph.j])
    cols = np.concatenate([graph.j, graph.i])
    return sp.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(graph.n, graph.n))


def laplacian(W):
    """``L = diag(W 1) - W`` for a symmetric, zero-diagonal ``W``."""
    W = sp.csr_matrix(W, dtype=np.float64)
    if W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    asym = abs(W - W.T)
    if asym.nnz and asym.max() > 1e-12:
        raise ValueError("W must be symmetric")
    if np.any(W.diagonal() != 0):
        raise ValueError("W must have a zero diagonal")
    deg = np.asarray(W.sum(axis=1)).ravel()
    return (sp.diags(deg) - W).tocsr()


def auto_sigma(graph, X):
    """Mean squared feature distance over edges, floored at 1e-12."""
    if len(graph) == 0:
        raise ValueError("auto sigma needs at least one edge")
    return max(float(np.mean(_sq_feature_dist(graph, np.asarray(X, dtype=np.float64)))), 1e-12)


@dataclass
class ModelInstance:
    """Inputs of the convex selection model.

    ``R`` (l x n) dissimilarities, ``p`` (n) normalized sizes, ``W``/``L``
    (n x n, sparse) similarity and its Laplacian, ``gamma`` spatial weight,
    ``lam`` row-sparsity weight.
    """

    R: np.ndarray
    p: np.ndarray
    W: sp.spmatrix
    L: sp.spmatrix
    gamma: float = DEFAULT_GAMMA
    lam: float = 0.0
    sigma_x: float = 1.0

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.L = sp.csr_matrix(self.L)
        l, n = self.R.shape
        if self.p.shape != (n,):
            raise ValueError("p must have one entry per superpixel")
        if self.L.shape != (n, n):
            raise ValueError("L must be n x n")
        if np.any(self.R < 0) or np.any(self.p <= 0):
            raise ValueError("R must be nonnegative and p positive")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError("gamma must be finite and nonnegative")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and nonnegative")

    @property
    def shape(self):
        return self.R.shape

    @property
    def cost(self):
        """Data-term weights ``R diag(p)``."""
        return self.R * self.p

    def with_lambda(self, lam):
        return ModelInstance(self.R, self.p, self.W, self.L, self.gamma, float(lam), self.sigma_x)


def build_instance(X, D, graph, s, gamma=DEFAULT_GAMMA, sigma_x="auto", lam=0.0):
    """Assemble a :class:`ModelInstance` from features, dictionary and graph."""
    if sigma_x == "auto":
        sigma_x = auto_sigma(graph, X) if len(graph) else 1.0
    W = edge_weights(graph, X, float(sigma_x))
    return ModelInstance(dissimilarity(D, X), size_matrix(s), W, laplacian(W),
                         float(gamma), float(lam), float(sigma_x))


@dataclass(frozen=True)
class SweepConfig:
    alpha_grid: tuple
    lambda_max: float

    def __post_init__(self):
        grid = tuple(sorted(float(a) for a in self.alpha_grid))
        if not grid:
            raise ValueError("alpha grid must not be empty")
        if grid[0] < 0:
            raise ValueError("alpha values must be nonnegative")
        if not (np.isfinite(self.lambda_max) and self.lambda_max >= 0):
            raise ValueError("lambda_max must be finite and nonnegative")
        object.__setattr__(self, "alpha_grid", grid)


def default_alpha_grid(count=19):
    """``count`` evenly spaced values strictly inside (0, 1)."""
    return tuple(float(a) for a in np.linspace(0, 1, count + 2)[1:-1])
