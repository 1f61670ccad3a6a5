"""Discrete one-site noise operators and their chain ampliations.

One site is C^(N+1) with basis indexed 0..N (index 0 is the vacuum slot,
matching the constant coordinate of an obtuse random variable).  The
elementary operators are the matrix units a(i, j) sending basis vector i
to basis vector j.

Orientation warning: a(i, j) maps e_i to e_j, so the returned matrix has
its single 1 at ROW j, COLUMN i.  The transposed convention is common
elsewhere; every formula in this package (multiplication operators, block
decompositions, evolution recursions) assumes the one stated here.

Chain operators act on H_0 (x) site_1 (x) ... (x) site_n with the system
leg slowest, i.e. flat index = h * (N+1)^n + path, path lexicographic with
site 1 as the most significant digit.  Dense matrices of dimension
d * (N+1)^n are materialized, guarded at 16384 (override flag or
OBTUSE_WALKS_GUARD_OVERRIDE=1 lifts the guard): the point is exact
desk-scale verification, not scalability.
"""

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GuardError, MalformedInputError
from .obtuse import DEFAULT_TOL, validate_obtuse

CHAIN_DIM_LIMIT = 16384
GUARD_ENV_VAR = "OBTUSE_WALKS_GUARD_OVERRIDE"


def guard_overridden():
    """True if the chain-size guard is lifted via the environment."""
    return os.environ.get(GUARD_ENV_VAR, "") == "1"


def check_chain_guard(system_dim, site_dim, site_count, override=False):
    """Raise GuardError if d * (N+1)^n exceeds the dense-matrix limit."""
    dim = system_dim * site_dim**site_count
    if dim > CHAIN_DIM_LIMIT and not override and not guard_overridden():
        raise GuardError(
            f"chain dimension {dim} exceeds the guard {CHAIN_DIM_LIMIT}; "
            f"pass override or set {GUARD_ENV_VAR}=1 to proceed"
        )
    return dim


@dataclass(frozen=True, eq=False)
class ChainOperator:
    """Dense operator on H_0 (x) (C^site_dim)^(x site_count).

    The matrix dimension must factor exactly as system_dim * site_dim^site_count;
    leg ordering is (H_0, site 1, ..., site n).
    """

    site_count: int
    site_dim: int
    system_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.site_count < 0 or self.site_dim < 1 or self.system_dim < 1:
            raise MalformedInputError("site_count, site_dim, system_dim out of range")
        matrix = np.array(self.matrix, dtype=complex)
        dim = self.system_dim * self.site_dim**self.site_count
        if matrix.shape != (dim, dim):
            raise MalformedInputError(
                f"matrix shape {matrix.shape} does not factor as "
                f"{self.system_dim} * {self.site_dim}^{self.site_count}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self):
        return self.system_dim * self.site_dim**self.site_count


def matrix_unit(i, j, site_dim):
    """The one-site operator sending basis vector i to basis vector j.

    Entry (j, i) is 1, everything else 0.  Products compose as
    a(i, j) a(k, l) = delta_il a(k, j).
    """
    if not (0 <= i < site_dim and 0 <= j < site_dim):
        raise DomainError(f"indices ({i}, {j}) out of range for site dimension {site_dim}")
    unit = np.zeros((site_dim, site_dim), dtype=complex)
    unit[j, i] = 1.0
    return unit


def ampliate(op, site_index, site_count, system_dim, override_guard=False):
    """Place a one-site operator at site ``site_index`` of the chain.

    Returns I_d (x) I (x) ... (x) op (x) ... (x) I as a ChainOperator;
    sites are numbered from 1.  Kronecker placement is bit-exact: entries
    of the result are entries of ``op`` or exact zeros/copies.
    """
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DomainError(f"op must be square, got shape {op.shape}")
    site_dim = op.shape[0]
    if not 1 <= site_index <= site_count:
        raise DomainError(f"site_index {site_index} out of range 1..{site_count}")
    if system_dim < 1:
        raise DomainError("system_dim must be positive")
    check_chain_guard(system_dim, site_dim, site_count, override_guard)

    left = system_dim * site_dim ** (site_index - 1)
    right = site_dim ** (site_count - site_index)
    matrix = np.kron(np.kron(np.eye(left), op), np.eye(right))
    return ChainOperator(
        site_count=site_count, site_dim=site_dim, system_dim=system_dim, matrix=matrix
    )


def multiplication_operator(system, tensor, coordinate):
    """One-site matrix of multiplication by the obtuse coordinate X^i.

    Implements M_i = a(0, i) + a(i, 0) + sum_{j,l>=1} T_i^{jl} a(j, l);
    hermitian because the tensor is symmetric.  Coordinate 0 is the
    constant function 1, whose multiplication operator is the identity
    (returned with a warning since asking for it is usually a slip).

    The family {M_i} commutes and is simultaneously diagonalized by
    :func:`path_basis_unitary`, with spectra exactly the value tables.
    """
    n = system.dim
    if tensor.dim != n:
        raise DomainError(f"tensor dim {tensor.dim} does not match system dim {n}")
    if not 0 <= coordinate <= n:
        raise DomainError(f"coordinate {coordinate} out of range 0..{n}")
    if coordinate == 0:
        warnings.warn(
            "coordinate 0 is the constant function 1; returning the identity",
            stacklevel=2,
        )
        return np.eye(n + 1, dtype=complex)

    op = matrix_unit(0, coordinate, n + 1) + matrix_unit(coordinate, 0, n + 1)
    for j in range(1, n + 1):
        for l in range(1, n + 1):
            op += tensor.coeffs[j, l, coordinate] * matrix_unit(j, l, n + 1)
    return op


def path_basis_unitary(system, tol=DEFAULT_TOL):
    """Orthogonal change of basis diagonalizing every multiplication operator.

    Theta[i, l] = sqrt(p_l) * X^i(l).  Columns are the (normalized) point
    masses of the sample space, so Theta^T M_i Theta = diag(v_0^i, ..., v_N^i)
    for every coordinate i; per-site tensor powers of Theta identify the
    n-fold product space with the chain.
    """
    report = validate_obtuse(system, tol)
    if not report.passed:
        raise DomainError(
            f"system is not obtuse at tol {tol:g} (max residual {report.max_residual:.3e})"
        )
    theta = system.coordinate_table() * np.sqrt(system.probabilities)[None, :]
    return theta.astype(complex)
