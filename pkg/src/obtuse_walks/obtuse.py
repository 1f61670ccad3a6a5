"""Obtuse random variables in R^N.

An obtuse random variable takes N+1 values v_0,...,v_N in R^N with
probabilities p_0,...,p_N and is centered (E[X] = 0) and normalized
(Cov(X) = I).  Three equivalent characterizations are checked here:

  1. moments:       sum_i p_i v_i = 0  and  sum_i p_i v_i v_i^T = I;
  2. geometry:      <v_i, v_j> = -1 for i != j  and  p_i = 1/(1 + |v_i|^2);
  3. orthogonality: the (N+1)x(N+1) matrix with entries sqrt(p_j) v_j^i
                    (row i = 0..N, with v_j^0 = 1) is orthogonal.

Index convention used package-wide: coordinate 0 is the constant-1
coordinate, so every coordinate table has N+1 rows and row 0 is all ones.
Arrays are 0-indexed with index 0 as the distinguished slot.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MalformedInputError
from .linalg import random_special_orthogonal

DEFAULT_TOL = 1e-10

# p_i = 1/(1 + |v_i|^2), so tiny probabilities force huge value vectors;
# requests below this floor are rejected as numerically hostile.
PROBABILITY_FLOOR = 1e-8

_PROB_SUM_TOL = 1e-9


def _as_readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ObtuseSystem:
    """N+1 value vectors in R^N together with their probabilities.

    Construction checks structure only (shapes, finiteness); whether the
    system actually is obtuse is the job of :func:`validate_obtuse`.

    Attributes
    ----------
    dim : int
        Ambient dimension N.
    values : (N+1, N) ndarray
        Row l is the value vector v_l.
    probabilities : (N+1,) ndarray
    """

    dim: int
    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise MalformedInputError(f"dim must be a positive integer, got {self.dim!r}")
        values = _as_readonly(self.values)
        probs = _as_readonly(self.probabilities)
        if values.ndim != 2 or values.shape != (self.dim + 1, self.dim):
            raise MalformedInputError(
                f"values must have shape ({self.dim + 1}, {self.dim}), got {values.shape}"
            )
        if probs.shape != (self.dim + 1,):
            raise MalformedInputError(
                f"probabilities must have shape ({self.dim + 1},), got {probs.shape}"
            )
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(probs))):
            raise MalformedInputError("values and probabilities must be finite")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probabilities", probs)

    @property
    def site_dim(self):
        """Number of outcomes, N+1."""
        return self.dim + 1

    def coordinate_table(self):
        """(N+1, N+1) array C with C[i, l] = X^i(l); row 0 is all ones."""
        table = np.empty((self.dim + 1, self.dim + 1))
        table[0, :] = 1.0
        table[1:, :] = self.values.T
        return table


@dataclass(frozen=True, eq=False)
class GeneralRandomVariable:
    """A k-point random variable in R^d, not necessarily obtuse.

    Values must be pairwise distinct (otherwise the law is not identifiable
    as a k-point law) and probabilities must lie in (0, 1) and sum to 1.
    """

    values: np.ndarray        # (k, target_dim)
    probabilities: np.ndarray  # (k,)

    def __post_init__(self):
        values = _as_readonly(np.atleast_2d(self.values))
        probs = _as_readonly(self.probabilities)
        if values.ndim != 2 or probs.ndim != 1 or values.shape[0] != probs.shape[0]:
            raise MalformedInputError(
                f"values {values.shape} and probabilities {probs.shape} do not match"
            )
        if values.shape[0] < 2:
            raise MalformedInputError("need at least k = 2 sample points")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(probs))):
            raise MalformedInputError("values and probabilities must be finite")
        if np.any(probs <= 0.0) or np.any(probs >= 1.0):
            raise DomainError("probabilities must lie in the open interval (0, 1)")
        if abs(float(probs.sum()) - 1.0) > _PROB_SUM_TOL:
            raise DomainError(f"probabilities sum to {probs.sum()!r}, expected 1")
        for a in range(values.shape[0]):
            for b in range(a + 1, values.shape[0]):
                if np.array_equal(values[a], values[b]):
                    raise DomainError(f"values {a} and {b} coincide; law is degenerate")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probabilities", probs)

    @property
    def target_dim(self):
        return self.values.shape[1]

    @property
    def n_points(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ObtuseValidationReport:
    """Residuals of the three equivalent obtuseness conditions.

    All residuals are max-abs except ``orthogonality_residual`` which is the
    Frobenius norm of M M^T - I.  ``passed`` is True iff every residual is
    at most ``tol`` and the probabilities are a valid distribution.
    """

    passed: bool
    tol: float
    probabilities_positive: bool
    probability_sum_residual: float
    centering_residual: float
    covariance_residual: float
    inner_product_residual: float
    normalization_residual: float
    orthogonality_residual: float

    @property
    def moments_ok(self):
        """Condition group 1: centered and normalized."""
        return max(self.centering_residual, self.covariance_residual) <= self.tol

    @property
    def geometry_ok(self):
        """Condition group 2: pairwise inner products -1 and p_i = 1/(1+|v_i|^2)."""
        return max(self.inner_product_residual, self.normalization_residual) <= self.tol

    @property
    def orthogonality_ok(self):
        """Condition group 3: the scaled coordinate matrix is orthogonal."""
        return self.orthogonality_residual <= self.tol

    @property
    def max_residual(self):
        return max(
            self.probability_sum_residual,
            self.centering_residual,
            self.covariance_residual,
            self.inner_product_residual,
            self.normalization_residual,
            self.orthogonality_residual,
        )


def scaled_coordinate_matrix(system):
    """The (N+1)x(N+1) matrix M with M[i, j] = sqrt(p_j) * v_j^i (v_j^0 = 1).

    For a valid obtuse system M is orthogonal: its rows encode the moment
    conditions and its columns the inner-product/probability conditions.
    Probabilities must be positive for the square roots to exist.
    """
    if np.any(system.probabilities <= 0.0):
        raise DomainError("probabilities must be positive")
    return system.coordinate_table() * np.sqrt(system.probabilities)[None, :]


def validate_obtuse(system, tol=DEFAULT_TOL):
    """Check all three obtuseness condition groups independently.

    Parameters
    ----------
    system : ObtuseSystem
        Structurally well-formed candidate (the constructor enforces that).
    tol : float
        Acceptance threshold applied to every residual.

    Returns
    -------
    ObtuseValidationReport
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    v = system.values
    p = system.probabilities
    n = system.dim

    positive = bool(np.all(p > 0.0))
    sum_residual = abs(float(p.sum()) - 1.0)

    centering = float(np.abs(v.T @ p).max())
    cov = np.einsum("l,li,lj->ij", p, v, v) - np.eye(n)
    covariance = float(np.abs(cov).max())

    gram = v @ v.T
    off = gram + 1.0
    np.fill_diagonal(off, 0.0)
    inner_product = float(np.abs(off).max())
    normalization = float(np.abs(p * (1.0 + np.diag(gram)) - 1.0).max())

    if positive:
        m = scaled_coordinate_matrix(system)
        orthogonality = float(np.linalg.norm(m @ m.T - np.eye(n + 1)))
    else:
        orthogonality = float("inf")

    passed = (
        positive
        and max(sum_residual, centering, covariance, inner_product, normalization, orthogonality)
        <= tol
    )
    return ObtuseValidationReport(
        passed=passed,
        tol=float(tol),
        probabilities_positive=positive,
        probability_sum_residual=sum_residual,
        centering_residual=centering,
        covariance_residual=covariance,
        inner_product_residual=inner_product,
        normalization_residual=normalization,
        orthogonality_residual=orthogonality,
    )


def _check_probabilities(probabilities, n_points):
    p = np.asarray(probabilities, dtype=float)
    if p.shape != (n_points,):
        raise DomainError(f"expected {n_points} probabilities, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DomainError("probabilities must be finite")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError("probabilities must lie in the open interval (0, 1)")
    if np.any(p < PROBABILITY_FLOOR):
        raise DomainError(
            f"probabilities below {PROBABILITY_FLOOR:g} are rejected: "
            "p_i = 1/(1+|v_i|^2) would force numerically hostile value vectors"
        )
    if abs(float(p.sum()) - 1.0) > _PROB_SUM_TOL:
        raise DomainError(f"probabilities sum to {p.sum()!r}, expected 1")
    return p / p.sum()


def generate_obtuse(dim, probabilities=None, seed=0):
    """Construct an obtuse random variable in R^dim.

    An orthogonal (N+1)x(N+1) matrix with first row (sqrt(p_0),...,sqrt(p_N))
    is built by a Householder reflection mapping e_0 to that row, followed by
    a seeded Haar rotation of the remaining rows; values are read off as
    v_j^i = M[i, j] / sqrt(p_j).  This inverts the orthogonality
    characterization, so the output is valid by construction.

    Obtuse systems with given probabilities are only unique up to a rotation
    of R^N; the seed selects one of them and is part of the contract, not a
    canonical choice.  For dim = 1 the rotation group is trivial and the
    output is always v_0 = sqrt(q/p), v_1 = -sqrt(p/q).

    Parameters
    ----------
    dim : int
        Ambient dimension N >= 1.
    probabilities : sequence of N+1 floats, optional
        Each in (0, 1), summing to 1.  Sampled from a flat Dirichlet when
        omitted.
    seed : int
        Seeds both the Dirichlet draw and the rotation.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise DomainError(f"dim must be a positive integer, got {dim!r}")
    dim = int(dim)
    rng = np.random.default_rng(seed)

    if probabilities is None:
        for _ in range(128):
            p = rng.dirichlet(np.ones(dim + 1))
            if p.min() >= PROBABILITY_FLOOR:
                break
        else:  # pragma: no cover - probability ~ (N+1) * 1e-8 per draw
            raise RuntimeError("failed to sample probabilities above the floor")
    else:
        p = _check_probabilities(probabilities, dim + 1)

    u = np.sqrt(p)
    # Householder reflection H = I - w w^T / w_0 with w = e_0 - u maps e_0 to
    # u and is symmetric, so its first row is exactly (sqrt(p_0),...).
    # w_0 = 1 - sqrt(p_0) is computed as (1 - p_0)/(1 + sqrt(p_0)) to avoid
    # cancellation when p_0 is close to 1.
    w = -u.copy()
    w[0] = (1.0 - p[0]) / (1.0 + u[0])
    m = np.eye(dim + 1) - np.outer(w, w) / w[0]

    rotation = random_special_orthogonal(dim, rng)
    m[1:, :] = rotation @ m[1:, :]

    values = (m[1:, :] / u[None, :]).T
    system = ObtuseSystem(dim=dim, values=values, probabilities=p)
    report = validate_obtuse(system, DEFAULT_TOL)
    if not report.passed:  # pragma: no cover - construction guarantees validity
        raise RuntimeError(f"generated system failed validation: {report}")
    return system


def decompose_general(y, basis=None, seed=0):
    """Represent a k-point random variable over an obtuse coordinate basis.

    The coordinates X^0,...,X^{k-1} of an obtuse random variable X in
    R^{k-1} with Y's probabilities form an orthonormal basis of the k-point
    L^2 space, so each coordinate of Y expands as
    Y^i = sum_j alpha[i, j] X^j with alpha[i, j] = E[Y^i X^j].

    Parameters
    ----------
    y : GeneralRandomVariable
    basis : ObtuseSystem, optional
        Obtuse system to expand over; must share y's probabilities.  When
        omitted: if y's own value table is already a valid obtuse system it
        is reused (so the expansion of an obtuse system over itself is
        [0 | I]), otherwise a fresh system is generated from ``seed``.
    seed : int
        Seed for the generated basis when one is needed.

    Returns
    -------
    (ObtuseSystem, ndarray)
        The basis X and the (target_dim, k) coefficient matrix alpha.  The
        pointwise reconstruction Y^i(l) = sum_j alpha[i, j] X^j(l) holds to
        1e-10 relative to the magnitude of Y's values.
    """
    k = y.n_points
    if basis is not None:
        if basis.dim != k - 1:
            raise DomainError(f"basis dimension {basis.dim} does not match k-1 = {k - 1}")
        if not np.allclose(basis.probabilities, y.probabilities, rtol=0.0, atol=1e-12):
            raise DomainError("basis probabilities do not match y's")
        system = basis
    else:
        system = None
        if y.target_dim == k - 1:
            candidate = ObtuseSystem(k - 1, y.values, y.probabilities)
            if validate_obtuse(candidate).passed:
                system = candidate
        if system is None:
            system = generate_obtuse(k - 1, y.probabilities, seed)

    table = system.coordinate_table()  # (k, k), table[j, l] = X^j(l)
    alpha = (y.values.T * y.probabilities[None, :]) @ table.T

    reconstruction = alpha @ table  # (target_dim, k), column l = sum_j alpha X^j(l)
    scale = max(1.0, float(np.abs(y.values).max()))
    residual = float(np.abs(reconstruction - y.values.T).max())
    if residual > 1e-10 * scale:  # pragma: no cover - orthonormal expansion is exact
        raise RuntimeError(f"reconstruction residual {residual:.3e} exceeds tolerance")
    return system, alpha
