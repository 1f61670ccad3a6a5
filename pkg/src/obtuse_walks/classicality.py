"""Block unitaries on H_0 (x) C^(N+1) and their classical forms.

An interaction unitary decomposes as U = sum_{i,j} U^i_j (x) a(i, j) with
d x d blocks U^i_j.  The repeated-interaction evolution driven by U
reduces to a classical random walk over an obtuse random variable X
exactly when there are unitaries W_0..W_N on H_0 with

    U^k_l = sum_i p_i v_i^k v_i^l W_i        (v_i^0 = 1),

equivalently U^i_j = sum_k T_k^{ij} B_k with B_i = sum_l p_l v_l^i W_l
and W_l = sum_i v_l^i B_i.  Both directions are implemented:
:func:`build_block_unitary` constructs U from the W's, and
:func:`detect_classical` extracts and verifies a claimed classical form.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MalformedInputError
from .linalg import unitarity_residual
from .noise import ChainOperator, ampliate, check_chain_guard, matrix_unit, multiplication_operator
from .obtuse import validate_obtuse
from .tensor3 import compute_tensor

# Residuals below this are "not unitary"; above the user tolerance they are
# "unitary but not classically driven".  Keeping the two thresholds separate
# keeps failure attribution sharp.
STRUCTURAL_TOL = 1e-8
DETECT_TOL = 1e-8


def _as_block_stack(matrices, count, dim_name="matrix"):
    stack = np.array([np.asarray(m, dtype=complex) for m in matrices])
    if stack.ndim != 3 or stack.shape[0] != count or stack.shape[1] != stack.shape[2]:
        raise MalformedInputError(
            f"expected {count} square {dim_name} blocks, got array of shape {stack.shape}"
        )
    if not np.all(np.isfinite(stack.view(float))):
        raise MalformedInputError(f"{dim_name} entries must be finite")
    return stack


@dataclass(frozen=True, eq=False)
class BlockUnitary:
    """(N+1)x(N+1) grid of d x d blocks, blocks[i, j] = U^i_j.

    Under U = sum U^i_j (x) a(i, j) the dense matrix on C^(N+1) (x) H_0
    carries U^i_j at block row j, block column i.  Construction checks
    structure only; :meth:`unitarity_residual` measures the actual
    unitarity so that perturbed candidates can still be represented and
    rejected downstream.
    """

    system_dim: int
    site_dim: int
    blocks: np.ndarray

    def __post_init__(self):
        if self.system_dim < 1 or self.site_dim < 2:
            raise MalformedInputError("system_dim must be >= 1 and site_dim >= 2")
        blocks = np.array(self.blocks, dtype=complex)
        shape = (self.site_dim, self.site_dim, self.system_dim, self.system_dim)
        if blocks.shape != shape:
            raise MalformedInputError(f"blocks must have shape {shape}, got {blocks.shape}")
        if not np.all(np.isfinite(blocks.view(float))):
            raise MalformedInputError("block entries must be finite")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self):
        return self.system_dim * self.site_dim

    def to_matrix(self):
        """Dense matrix on C^site_dim (x) H_0: U^i_j at block (row j, col i)."""
        s, d = self.site_dim, self.system_dim
        out = np.zeros((s * d, s * d), dtype=complex)
        for i in range(s):
            for j in range(s):
                out[j * d : (j + 1) * d, i * d : (i + 1) * d] = self.blocks[i, j]
        return out

    def unitarity_residual(self):
        """max Frobenius deviation of U*U and UU* from the identity."""
        return unitarity_residual(self.to_matrix())


@dataclass(frozen=True, eq=False)
class ClassicalForm:
    """Witness that a block unitary is classically driven.

    ``step_unitaries[l]`` is W_l, the unitary applied when outcome l is
    drawn; ``coefficients[k]`` is B_k, the operator multiplying the k-th
    coordinate in the driven evolution (k = 0 is the drift term).
    """

    system: object
    step_unitaries: np.ndarray  # (N+1, d, d)
    coefficients: np.ndarray    # (N+1, d, d)

    def __post_init__(self):
        count = self.system.dim + 1
        w = _as_block_stack(self.step_unitaries, count, "step unitary")
        b = _as_block_stack(self.coefficients, count, "coefficient")
        if w.shape != b.shape:
            raise MalformedInputError("step_unitaries and coefficients shapes differ")
        object.__setattr__(self, "step_unitaries", w)
        object.__setattr__(self, "coefficients", b)

    @property
    def system_dim(self):
        return self.step_unitaries.shape[1]

    @classmethod
    def from_unitaries(cls, unitaries, system, tol=1e-10):
        """Build the form for given step unitaries; B_i = sum_l p_l v_l^i W_l."""
        w = _as_block_stack(unitaries, system.dim + 1, "step unitary")
        _require_unitaries(w, tol)
        table = system.coordinate_table()
        b = np.einsum("l,il,lab->iab", system.probabilities, table, w)
        return cls(system=system, step_unitaries=w, coefficients=b)

    def consistency_residuals(self):
        """Max Frobenius residuals of the defining identities.

        Keys: ``w_unitarity`` for max_l ||W_l* W_l - I||, ``b_from_w`` for
        B_i = sum_l p_l v_l^i W_l, ``w_from_b`` for W_l = sum_i v_l^i B_i.
        """
        table = self.system.coordinate_table()
        b_pred = np.einsum("l,il,lab->iab", self.system.probabilities, table, self.step_unitaries)
        w_pred = np.einsum("il,iab->lab", table, self.coefficients)
        return {
            "w_unitarity": max(unitarity_residual(w) for w in self.step_unitaries),
            "b_from_w": float(
                max(np.linalg.norm(d) for d in (self.coefficients - b_pred))
            ),
            "w_from_b": float(
                max(np.linalg.norm(d) for d in (self.step_unitaries - w_pred))
            ),
        }


@dataclass(frozen=True, eq=False)
class DetectionResult:
    """Outcome of :func:`detect_classical`.

    ``failed_check`` is None on acceptance, otherwise the first check that
    fired: ``input-unitarity`` (input not unitary at the structural
    tolerance), ``reconstruction`` (blocks do not match sum_k T_k^{ij} B_k),
    or ``w-unitarity`` (some recovered W_l is not unitary).
    """

    accepted: bool
    form: object
    tol: float
    structural_tol: float
    input_unitarity_residual: float
    reconstruction_residual: float
    w_unitarity_residual: float
    failed_check: object

    @property
    def max_residual(self):
        return max(
            self.input_unitarity_residual,
            self.reconstruction_residual,
            self.w_unitarity_residual,
        )


def _require_unitaries(stack, tol):
    for index, w in enumerate(stack):
        residual = unitarity_residual(w)
        if residual > tol:
            raise DomainError(
                f"input unitary {index} has unitarity residual {residual:.3e} > {tol:g}"
            )


def _require_valid_system(system, tol=1e-10):
    report = validate_obtuse(system, tol)
    if not report.passed:
        raise DomainError(
            f"system is not obtuse at tol {tol:g} (max residual {report.max_residual:.3e})"
        )


def build_block_unitary(unitaries, system, tol=1e-10):
    """Assemble the classically driven block unitary from step unitaries.

    Blocks are U^k_l = sum_i p_i v_i^k v_i^l W_i with v_i^0 = 1.  The
    result is unitary whenever every W_i is (the coordinate orthonormality
    sum_i p_i v_i^k v_i^l = delta_kl collapses the cross terms).

    Raises
    ------
    DomainError
        If some input is not unitary at ``tol`` (the offending index and
        residual are reported) or the system is not valid.
    """
    _require_valid_system(system)
    w = _as_block_stack(unitaries, system.dim + 1, "step unitary")
    _require_unitaries(w, tol)
    table = system.coordinate_table()
    blocks = np.einsum("i,ki,li,iab->klab", system.probabilities, table, table, w)
    return BlockUnitary(system_dim=w.shape[1], site_dim=system.dim + 1, blocks=blocks)


def bernoulli_block_unitary(w0, w1, p, tol=1e-10):
    """Explicit two-outcome block unitary.

    For the one-dimensional obtuse variable with probabilities (p, q) the
    generic construction specializes to the 2x2 block matrix

        [ p W0 + q W1          sqrt(pq) (W0 - W1) ]
        [ sqrt(pq) (W0 - W1)   q W0 + p W1        ]

    with B_0 = U^0_0 and B_1 = U^0_1 = U^1_0.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    w = _as_block_stack([w0, w1], 2, "step unitary")
    _require_unitaries(w, tol)
    q = 1.0 - p
    off = np.sqrt(p * q) * (w[0] - w[1])
    d = w.shape[1]
    blocks = np.empty((2, 2, d, d), dtype=complex)
    blocks[0, 0] = p * w[0] + q * w[1]
    blocks[0, 1] = off
    blocks[1, 0] = off
    blocks[1, 1] = q * w[0] + p * w[1]
    return BlockUnitary(system_dim=d, site_dim=2, blocks=blocks)


def detect_classical(u, system, tol=DETECT_TOL, structural_tol=STRUCTURAL_TOL):
    """Decide whether a block unitary is classically driven over a system.

    The candidate coefficients are read off the distinguished column,
    B_i := U^i_0 (forced by the extended tensor convention T_j^{i0} =
    delta_ij), then two checks run at ``tol``:

      (a) reconstruction: U^i_j = sum_k T_k^{ij} B_k for all i, j;
      (b) restored unitarity: W_l = sum_i v_l^i B_i is unitary for all l.

    Input unitarity is checked first at ``structural_tol`` so that "not
    unitary" and "unitary but not classical" stay distinguishable; all
    three residuals are always reported.  Detection is relative to the
    given system — whether U is classical over some *other* obtuse
    variable is not decided here.

    Returns
    -------
    DetectionResult
        ``result.form`` holds the recovered ClassicalForm on acceptance.

    Raises
    ------
    DomainError
        On dimension mismatch between ``u`` and ``system`` (as opposed to a
        negative verdict, which is reported).
    """
    if u.site_dim != system.dim + 1:
        raise DomainError(
            f"block unitary site dimension {u.site_dim} does not match system's {system.dim + 1}"
        )
    _require_valid_system(system)
    if tol <= 0 or structural_tol <= 0:
        raise DomainError("tolerances must be positive")

    input_residual = u.unitarity_residual()
    tensor = compute_tensor(system)
    b = u.blocks[:, 0].copy()  # B_i := U^i_0
    predicted = np.einsum("ijk,kab->ijab", tensor.coeffs, b)
    reconstruction = float(
        np.sqrt((np.abs(u.blocks - predicted) ** 2).sum(axis=(2, 3))).max()
    )
    table = system.coordinate_table()
    w = np.einsum("il,iab->lab", table, b)
    w_residual = max(unitarity_residual(wl) for wl in w)

    failed = None
    if input_residual > structural_tol:
        failed = "input-unitarity"
    elif reconstruction > tol:
        failed = "reconstruction"
    elif w_residual > tol:
        failed = "w-unitarity"

    form = None
    if failed is None:
        form = ClassicalForm(system=system, step_unitaries=w, coefficients=b)
    return DetectionResult(
        accepted=failed is None,
        form=form,
        tol=float(tol),
        structural_tol=float(structural_tol),
        input_unitarity_residual=input_residual,
        reconstruction_residual=reconstruction,
        w_unitarity_residual=w_residual,
        failed_check=failed,
    )


def ampliate_block_unitary(u, site_index, site_count, override_guard=False):
    """Chain operator sum_{i,j} U^i_j (x) a(i, j) acting at one site.

    Leg ordering is (H_0, sites); the guard applies to the full chain
    dimension.
    """
    check_chain_guard(u.system_dim, u.site_dim, site_count, override_guard)
    dim = u.system_dim * u.site_dim**site_count
    matrix = np.zeros((dim, dim), dtype=complex)
    for i in range(u.site_dim):
        for j in range(u.site_dim):
            site_part = ampliate(
                matrix_unit(i, j, u.site_dim), site_index, site_count, 1, override_guard=True
            ).matrix
            matrix += np.kron(u.blocks[i, j], site_part)
    return ChainOperator(
        site_count=site_count, site_dim=u.site_dim, system_dim=u.system_dim, matrix=matrix
    )


def classical_step_operator(form, site_count, site_index, override_guard=False):
    """One interaction step written in driven form, sum_k B_k (x) M_k(site).

    M_0 is the identity and M_k the multiplication operator of coordinate k.
    For an accepted classical form this equals the ampliated block unitary
    sum_{i,j} U^i_j (x) a(i, j) at the same site.
    """
    if not 1 <= site_index <= site_count:
        raise DomainError(f"site_index {site_index} out of range 1..{site_count}")
    s = form.system.dim + 1
    d = form.system_dim
    check_chain_guard(d, s, site_count, override_guard)
    tensor = compute_tensor(form.system)

    dim = d * s**site_count
    matrix = np.zeros((dim, dim), dtype=complex)
    for k in range(s):
        if k == 0:
            site_op = np.eye(s, dtype=complex)
        else:
            site_op = multiplication_operator(form.system, tensor, k)
        site_part = ampliate(site_op, site_index, site_count, 1, override_guard=True).matrix
        matrix += np.kron(form.coefficients[k], site_part)
    return ChainOperator(site_count=site_count, site_dim=s, system_dim=d, matrix=matrix)
