"""Matrix-normal distribution and the masked multilayer panel likelihood.

The observation model treats each layer slice Y_t (n x n) as matrix-normal
around a factor-driven mean, with identity row covariance and diagonal column
covariance diag(sigma^2_1..sigma^2_n), so Var(Y_t[i, j]) = sigma^2_j.
Diagonal cells are structural placeholders and never enter the likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

# Layer keys in (l, k) form. l indexes the caused signal, k the causing one:
# (1, 1) return -> return, (2, 2) volatility -> volatility,
# (1, 2) volatility -> return, (2, 1) return -> volatility.
LAYERS: tuple[tuple[int, int], ...] = ((1, 1), (1, 2), (2, 1), (2, 2))

LAYER_NAMES: dict[tuple[int, int], str] = {
    (1, 1): "return",
    (1, 2): "risk_premium",
    (2, 1): "leverage",
    (2, 2): "volatility",
}

LAYER_BY_NAME: dict[str, tuple[int, int]] = {v: k for k, v in LAYER_NAMES.items()}


def offdiag_mask(n: int) -> np.ndarray:
    """Boolean n x n mask selecting the modeled (off-diagonal) cells."""
    return ~np.eye(n, dtype=bool)


@dataclass
class FactorSeries:
    """Common regressors aligned to panel slice dates.

    Parameters
    ----------
    values : ndarray, shape (T, R)
        One column per factor.
    names : list of str
        Factor names, length R.
    dates : list of str
        ISO dates, length T, strictly increasing.
    """

    values: np.ndarray
    names: list[str]
    dates: list[str]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    def validate(self) -> None:
        if self.values.ndim != 2:
            raise ValueError("factor values must be 2-D (T, R)")
        if len(self.names) != self.values.shape[1]:
            raise ValueError("factor name count does not match columns")
        if len(self.dates) != self.values.shape[0]:
            raise ValueError("factor date count does not match rows")
        if list(self.dates) != sorted(set(self.dates)):
            raise ValueError("factor dates must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("factor values must be finite")


@dataclass
class MultilayerPanel:
    """Stack of dated n x n response slices for each of the four layers.

    layers[lk] has shape (T, n, n) and holds the transformed edge responses;
    diagonal entries are a fixed sentinel (0.0) and carry no information.
    flags[lk] marks cells whose upstream pairwise fit was degenerate; flagged
    cells hold the sentinel too and are excluded from the likelihood.
    """

    layers: dict[tuple[int, int], np.ndarray]
    dates: list[str]
    node_labels: list[str]
    sectors: list[str] = field(default_factory=list)
    flags: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return next(iter(self.layers.values())).shape[1]

    @property
    def n_periods(self) -> int:
        return next(iter(self.layers.values())).shape[0]

    def validate(self) -> None:
        if set(self.layers) != set(LAYERS):
            raise ValueError("panel must carry exactly the four layers")
        n, t = self.n_nodes, self.n_periods
        for lk in LAYERS:
            arr = self.layers[lk]
            if arr.shape != (t, n, n):
                raise ValueError(f"layer {lk} has shape {arr.shape}, want {(t, n, n)}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"layer {lk} contains non-finite values")
            diag = arr[:, np.arange(n), np.arange(n)]
            if not np.all(diag == 0.0):
                raise ValueError(f"layer {lk} diagonal must hold the 0.0 sentinel")
            if lk in self.flags and self.flags[lk].shape != (t, n, n):
                raise ValueError(f"flags for layer {lk} have the wrong shape")
        if len(self.dates) != t:
            raise ValueError("date count does not match slices")
        if len(self.node_labels) != n:
            raise ValueError("label count does not match nodes")
        if self.sectors and len(self.sectors) != n:
            raise ValueError("sector count does not match nodes")


@dataclass
class ModelParams:
    """Per-layer regression coefficients and column noise variances.

    b[lk] has shape (R, n, n): b[r, i, j] moves cell (i, j) with factor r.
    Diagonal entries are fixed at 0. sigma2[lk] has shape (n,): sigma2[j] is
    the noise variance of every cell in column j.
    """

    b: dict[tuple[int, int], np.ndarray]
    sigma2: dict[tuple[int, int], np.ndarray]

    @property
    def n_factors(self) -> int:
        return next(iter(self.b.values())).shape[0]

    @property
    def n_nodes(self) -> int:
        return next(iter(self.b.values())).shape[1]


def _chol_logdet(sigma: np.ndarray) -> tuple[np.ndarray, float]:
    chol = np.linalg.cholesky(sigma)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return chol, logdet


def matnorm_logpdf(x: np.ndarray, mean: np.ndarray, row_cov: np.ndarray,
                   col_cov: np.ndarray) -> float:
    """Log-density of a matrix-normal observation.

    Equivalent to the multivariate normal log-density of vec(x) (columns
    stacked) with covariance kron(col_cov, row_cov), computed without forming
    the Kronecker product.

    Parameters
    ----------
    x, mean : ndarray, shape (n, p)
    row_cov : ndarray, shape (n, n)
        Positive definite covariance across rows.
    col_cov : ndarray, shape (p, p)
        Positive definite covariance across columns.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if x.shape != mean.shape:
        raise ValueError("x and mean must share a shape")
    n, p = x.shape
    if row_cov.shape != (n, n) or col_cov.shape != (p, p):
        raise ValueError("covariance shapes do not match the observation")

    l_row, logdet_row = _chol_logdet(row_cov)
    l_col, logdet_col = _chol_logdet(col_cov)
    resid = x - mean
    # tr(col^-1 resid' row^-1 resid) = ||L_row^-1 resid L_col^-T||_F^2
    half = solve_triangular(l_row, resid, lower=True)
    half = solve_triangular(l_col, half.T, lower=True)
    quad = float(np.sum(half * half))
    return -0.5 * (n * p * np.log(2.0 * np.pi) + p * logdet_row + n * logdet_col + quad)


def matnorm_sample(rng: np.random.Generator, mean: np.ndarray, row_cov: np.ndarray,
                   col_cov: np.ndarray, size: int | None = None) -> np.ndarray:
    """Draw from the matrix-normal via X = M + L1 Z L2'.

    Returns shape (n, p) when size is None, else (size, n, p).
    """
    mean = np.asarray(mean, dtype=float)
    n, p = mean.shape
    l_row = np.linalg.cholesky(row_cov)
    l_col = np.linalg.cholesky(col_cov)
    shape = (n, p) if size is None else (size, n, p)
    z = rng.standard_normal(shape)
    return mean + l_row @ z @ l_col.T


def layer_mean(b: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Factor-driven mean stack: out[t] = sum_r b[r] * factors[t, r].

    b has shape (R, n, n), factors (T, R); returns (T, n, n).
    """
    return np.einsum("tr,rij->tij", factors, b)


def model_loglik(panel: MultilayerPanel, params: ModelParams,
                 factors: FactorSeries) -> float:
    """Joint log-likelihood of the panel under the four-layer model.

    Sums, over layers, slices, and off-diagonal unflagged cells, the scalar
    normal log-density with cell variance sigma2[column]. Additive over
    layers and slices by construction.
    """
    total = 0.0
    f = factors.values
    n = panel.n_nodes
    mask = offdiag_mask(n)
    for lk in LAYERS:
        y = panel.layers[lk]
        resid = y - layer_mean(params.b[lk], f)
        s2 = params.sigma2[lk]  # (n,) column variances
        cell_mask = mask[None, :, :] & ~panel.flags.get(lk, np.zeros_like(y, dtype=bool))
        quad = np.where(cell_mask, resid * resid / s2[None, None, :], 0.0)
        const = np.where(cell_mask, np.log(2.0 * np.pi * s2)[None, None, :], 0.0)
        total += -0.5 * float(np.sum(quad + const))
    return total
