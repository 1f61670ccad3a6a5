"""Product 3-tensors of obtuse random variables.

The coordinates of an obtuse X are an orthonormal basis of its k-point
L^2 space, so coordinate products expand back over the coordinates:

    X^i X^j = sum_k T_k^{ij} X^k,      T_k^{ij} = E[X^i X^j X^k].

Indices run over 0..N with the constant coordinate X^0 included; the
entries touching index 0 are fixed by the convention
T_0^{ij} = T_j^{i0} = T_j^{0i} = delta_ij.  A tensor of this kind is
sesqui-symmetric: (i, j, k) -> T_k^{ij} is symmetric, and
(i, j, l, m) -> sum_{k=0}^N T_k^{ij} T_k^{lm} is symmetric too (the k = 0
term contributes the delta_ij delta_lm of the unextended formulation).
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MalformedInputError
from .obtuse import DEFAULT_TOL, validate_obtuse


@dataclass(frozen=True, eq=False)
class ThreeTensor:
    """Dense product tensor with coeffs[i, j, k] = T_k^{ij}, indices 0..N."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise MalformedInputError(f"dim must be a positive integer, got {self.dim!r}")
        coeffs = np.array(self.coeffs, dtype=float)
        shape = (self.dim + 1,) * 3
        if coeffs.shape != shape:
            raise MalformedInputError(f"coeffs must have shape {shape}, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise MalformedInputError("coeffs must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class SesquiSymmetryReport:
    """Residuals of the two sesqui-symmetry conditions.

    ``symmetry_residual`` is the max deviation of coeffs from any permutation
    of its three indices; ``product_symmetry_residual`` the max deviation of
    F[i,j,l,m] = sum_k T_k^{ij} T_k^{lm} from any permutation of its four.
    ``extended_entries_exact`` records whether every entry with an index 0
    equals its fixed delta value exactly.
    """

    passed: bool
    tol: float
    symmetry_residual: float
    product_symmetry_residual: float
    extended_entries_exact: bool


def compute_tensor(system, tol=DEFAULT_TOL):
    """Product tensor of a valid obtuse system.

    Coefficients come from the orthonormal-basis projection
    T_k^{ij} = sum_l p_l X^i(l) X^j(l) X^k(l); entries with an index 0 are
    then pinned to their exact delta values.  The result satisfies the
    pointwise identity X^i(l) X^j(l) = sum_m T_m^{ij} X^m(l) at every
    sample point.

    Raises
    ------
    DomainError
        If the system fails :func:`validate_obtuse` at ``tol``.
    """
    report = validate_obtuse(system, tol)
    if not report.passed:
        raise DomainError(
            f"system is not obtuse at tol {tol:g} (max residual {report.max_residual:.3e})"
        )
    table = system.coordinate_table()
    coeffs = np.einsum("l,il,jl,kl->ijk", system.probabilities, table, table, table)
    eye = np.eye(system.dim + 1)
    coeffs[0, :, :] = eye
    coeffs[:, 0, :] = eye
    coeffs[:, :, 0] = eye
    return ThreeTensor(dim=system.dim, coeffs=coeffs)


def check_sesqui_symmetry(tensor, tol=DEFAULT_TOL):
    """Verify sesqui-symmetry and the fixed extended entries of a tensor.

    Both symmetry residuals are taken over all permutations of the full
    index range 0..N; the extended-entry convention is checked for exact
    equality, not up to tol.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t = tensor.coeffs
    eye = np.eye(tensor.dim + 1)
    extended_exact = (
        np.array_equal(t[0, :, :], eye)
        and np.array_equal(t[:, 0, :], eye)
        and np.array_equal(t[:, :, 0], eye)
    )

    symmetry = 0.0
    for perm in itertools.permutations(range(3)):
        symmetry = max(symmetry, float(np.abs(t - t.transpose(perm)).max()))

    products = np.einsum("ijk,lmk->ijlm", t, t)
    product_symmetry = 0.0
    for perm in itertools.permutations(range(4)):
        product_symmetry = max(
            product_symmetry, float(np.abs(products - products.transpose(perm)).max())
        )

    passed = extended_exact and max(symmetry, product_symmetry) <= tol
    return SesquiSymmetryReport(
        passed=passed,
        tol=float(tol),
        symmetry_residual=symmetry,
        product_symmetry_residual=product_symmetry,
        extended_entries_exact=extended_exact,
    )


def pointwise_product_residual(system, tensor):
    """Max-abs residual of X^i(l) X^j(l) = sum_m T_m^{ij} X^m(l) over all i, j, l.

    This is the sample-space statement of the product expansion; it is the
    natural cross-check that a tensor belongs to a system.
    """
    table = system.coordinate_table()
    lhs = np.einsum("il,jl->ijl", table, table)
    rhs = np.einsum("ijm,ml->ijl", tensor.coeffs, table)
    return float(np.abs(lhs - rhs).max())
