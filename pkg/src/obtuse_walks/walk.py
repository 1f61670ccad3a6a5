"""Random walks on the unitary group and their chain-evolution equivalents.

A classically driven interaction generates the walk V_0 = I,
V_{n+1} = W_i V_n with probability p_i, drawn independently at each step.
This module simulates the walk, enumerates its exact distribution, builds
the corresponding chain evolution V_n = U_n ... U_1 on the truncated chain,
and verifies that conjugating by the per-site path basis turns the chain
evolution into the block-diagonal family of walk word products.

RNG contract: trajectory draws come from a counter-based Philox stream
keyed by the seed, step k consuming counter position k, so trajectories
are reproducible and independent seeds can run in parallel.  Step matrices
are applied exactly as drawn, with no re-unitarization: unitarity drift is
a diagnostic, so masking it would hide bugs.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .classicality import ampliate_block_unitary, detect_classical
from .errors import DomainError, GuardError, MalformedInputError
from .noise import ChainOperator, ampliate, check_chain_guard, matrix_unit, path_basis_unitary

WORD_ENUMERATION_LIMIT = 10**6
DEFAULT_MERGE_TOL = 1e-9

# Per-step unitarity budget: desk-scale walks drift far below this.
STEP_DRIFT = 1e-12


@dataclass(frozen=True, eq=False)
class WalkTrajectory:
    """One realized walk: outcome indices and the visited unitaries.

    states[0] is the identity and states[k+1] = W_steps[k] @ states[k]
    exactly as multiplied, so states has one more entry than steps.
    """

    steps: np.ndarray           # (n,) outcome indices
    states: np.ndarray          # (n+1, d, d) visited unitaries
    seed: int

    def __post_init__(self):
        steps = np.array(self.steps, dtype=int)
        states = np.array(self.states, dtype=complex)
        if steps.ndim != 1 or states.ndim != 3 or states.shape[0] != steps.shape[0] + 1:
            raise MalformedInputError(
                f"need n steps and n+1 states, got {steps.shape} and {states.shape}"
            )
        steps.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "states", states)

    @property
    def n_steps(self):
        return self.steps.shape[0]

    @property
    def final(self):
        return self.states[-1]

    def max_unitarity_drift(self):
        """Worst ||V_k* V_k - I||_F along the trajectory."""
        eye = np.eye(self.states.shape[1])
        return float(
            max(
                np.linalg.norm(np.conj(v).T @ v - eye)
                for v in self.states
            )
        )


@dataclass(frozen=True, eq=False)
class WalkDistribution:
    """Finitely supported law of V_n: (matrix, probability) atoms."""

    horizon: int
    atoms: tuple

    def __post_init__(self):
        if self.horizon < 0:
            raise MalformedInputError("horizon must be nonnegative")
        atoms = tuple((np.asarray(m, dtype=complex), float(p)) for m, p in self.atoms)
        if not atoms:
            raise MalformedInputError("distribution needs at least one atom")
        if any(p <= 0.0 for _, p in atoms):
            raise DomainError("atom probabilities must be positive")
        total = float(np.array([p for _, p in atoms]).sum())
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"atom probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self):
        return len(self.atoms)

    def probability_of(self, matrix, tol=DEFAULT_MERGE_TOL):
        """Total probability of atoms within tol of the given matrix."""
        m = np.asarray(matrix, dtype=complex)
        return float(
            sum(p for atom, p in self.atoms if np.linalg.norm(atom - m) <= tol)
        )


def _philox(seed):
    return np.random.Generator(np.random.Philox(key=seed % (1 << 128)))


def _draw_steps(probabilities, shape, seed):
    """Outcome indices with the given law, Philox stream keyed by seed."""
    edges = np.cumsum(probabilities)
    uniforms = _philox(seed).random(shape)
    return np.minimum(np.searchsorted(edges, uniforms, side="right"), len(edges) - 1)


def simulate(form, n_steps, seed):
    """Run one walk trajectory of ``n_steps`` steps.

    Step k applies the step unitary of an index drawn with the system's
    probabilities, independently of everything drawn before; draws are a
    deterministic function of (seed, k).  ``n_steps = 0`` returns the
    trivial trajectory [I].
    """
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")
    w = form.step_unitaries
    d = form.system_dim
    states = np.empty((n_steps + 1, d, d), dtype=complex)
    states[0] = np.eye(d)
    if n_steps == 0:
        return WalkTrajectory(steps=np.empty(0, dtype=int), states=states, seed=seed)
    steps = _draw_steps(form.system.probabilities, n_steps, seed)
    for k, index in enumerate(steps):
        states[k + 1] = w[index] @ states[k]
    return WalkTrajectory(steps=steps, states=states, seed=seed)


def sample_endpoints(form, n_steps, seed, n_samples):
    """Final states of many independent trajectories, one bulk draw.

    Sample t consumes counter positions t*n_steps..(t+1)*n_steps-1 of the
    seed-keyed stream, so sample 0 reproduces ``simulate(form, n_steps,
    seed)``.  Returns (steps, finals) with shapes (m, n) and (m, d, d).
    """
    if n_steps < 0 or n_samples < 1:
        raise DomainError("need n_steps >= 0 and n_samples >= 1")
    d = form.system_dim
    steps = _draw_steps(form.system.probabilities, (n_samples, n_steps), seed)
    w = form.step_unitaries
    if d == 1:
        scalars = w[:, 0, 0]
        finals = np.prod(scalars[steps], axis=1).reshape(n_samples, 1, 1)
        return steps, finals
    finals = np.empty((n_samples, d, d), dtype=complex)
    for t in range(n_samples):
        v = np.eye(d, dtype=complex)
        for index in steps[t]:
            v = w[index] @ v
        finals[t] = v
    return steps, finals


def _merge_atoms(matrices, weights, merge_tol):
    """Group matrices within merge_tol (Frobenius), adding weights.

    The first matrix encountered in each group is kept as the
    representative, so the output order follows the input order.
    """
    reps = []
    totals = []
    stack = None
    for m, weight in zip(matrices, weights):
        if reps:
            distances = np.linalg.norm(stack - m[None], axis=(1, 2))
            hit = int(np.argmin(distances))
            if distances[hit] <= merge_tol:
                totals[hit] += weight
                continue
        reps.append(m)
        totals.append(weight)
        stack = np.array(reps)
    return list(zip(reps, totals))


def iter_word_products(unitaries, n_steps):
    """Yield ((j_1..j_n), W_{j_n} ... W_{j_1}) in lexicographic word order.

    Prefix products are shared along the enumeration tree, so each word
    costs one matrix multiply.  Word order matches the path ordering of
    the chain basis (site 1 is the most significant digit).
    """
    w = [np.asarray(m, dtype=complex) for m in unitaries]
    d = w[0].shape[0]

    def rec(prefix, product):
        if len(prefix) == n_steps:
            yield prefix, product
            return
        for j in range(len(w)):
            yield from rec(prefix + (j,), w[j] @ product)

    yield from rec((), np.eye(d, dtype=complex))


def exact_distribution(form, n_steps, merge_tol=DEFAULT_MERGE_TOL):
    """Exact law of V_n by full word enumeration.

    Every word (i_1..i_n) contributes its product with probability
    prod_k p_{i_k}; atoms within ``merge_tol`` in Frobenius norm are
    merged (word products that coincide analytically differ by rounding).

    Raises
    ------
    GuardError
        If (N+1)^n exceeds the enumeration budget; use
        :func:`empirical_distribution` (Monte Carlo) beyond it.
    """
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")
    if merge_tol < 0:
        raise DomainError("merge_tol must be nonnegative")
    s = form.system.dim + 1
    words = s**n_steps
    if words > WORD_ENUMERATION_LIMIT:
        raise GuardError(
            f"{words} words exceed the enumeration budget {WORD_ENUMERATION_LIMIT}; "
            "use empirical_distribution (Monte Carlo) instead"
        )
    p = form.system.probabilities

    def entries():
        for word, product in iter_word_products(form.step_unitaries, n_steps):
            yield product, float(np.prod(p[list(word)])) if word else 1.0

    matrices, weights = zip(*entries())
    atoms = _merge_atoms(matrices, weights, merge_tol)
    return WalkDistribution(horizon=n_steps, atoms=atoms)


def empirical_distribution(form, n_steps, seed, n_samples, merge_tol=DEFAULT_MERGE_TOL):
    """Monte Carlo estimate of the law of V_n from ``n_samples`` endpoints."""
    _, finals = sample_endpoints(form, n_steps, seed, n_samples)
    atoms = _merge_atoms(finals, np.full(n_samples, 1.0 / n_samples), merge_tol)
    return WalkDistribution(horizon=n_steps, atoms=atoms)


def chain_evolution(u, n_steps, override_guard=False):
    """Chain evolution V_n = U_n ... U_1 of the ampliated interaction.

    Built twice — as the literal product of ampliated copies of U, and by
    the one-step recursion V_{k+1} = sum_{i,j} U^i_j V_k a(i, j)(k+1) that
    uses commutation of V_k with site-(k+1) operators — and the two are
    required to agree to 1e-10 before the product form is returned.
    """
    if n_steps < 1:
        raise DomainError("n_steps must be positive")
    d, s = u.system_dim, u.site_dim
    check_chain_guard(d, s, n_steps, override_guard)
    dim = d * s**n_steps

    product = np.eye(dim, dtype=complex)
    for site in range(1, n_steps + 1):
        product = ampliate_block_unitary(u, site, n_steps, override_guard=True).matrix @ product

    system_blocks = {
        (i, j): np.kron(u.blocks[i, j], np.eye(s**n_steps))
        for i in range(s)
        for j in range(s)
    }
    recursion = np.eye(dim, dtype=complex)
    for site in range(1, n_steps + 1):
        step = np.zeros((dim, dim), dtype=complex)
        for (i, j), left in system_blocks.items():
            site_unit = ampliate(matrix_unit(i, j, s), site, n_steps, d, override_guard=True)
            step += left @ recursion @ site_unit.matrix
        recursion = step

    gap = float(np.linalg.norm(product - recursion))
    if gap > 1e-10:  # pragma: no cover - the two constructions agree identically
        raise RuntimeError(f"evolution constructions disagree: ||product - recursion|| = {gap:.3e}")
    return ChainOperator(site_count=n_steps, site_dim=s, system_dim=d, matrix=product)


def path_basis_conjugation(u, system, n_steps, override_guard=False):
    """S* V_n S with S = I_d (x) Theta^(x n), Theta the path basis.

    Makes no classicality assumption: for a classically driven U the result
    is block diagonal over paths, and the off-diagonal mass of a generic
    quantum U is a useful (heuristic) diagnostic of non-classicality.
    """
    evolution = chain_evolution(u, n_steps, override_guard=override_guard).matrix
    theta = path_basis_unitary(system)
    site_change = reduce(np.kron, [theta] * n_steps)
    s = np.kron(np.eye(u.system_dim), site_change)
    return np.conj(s).T @ evolution @ s


@dataclass(frozen=True)
class BlockDiagonalizationReport:
    """Path-basis conjugation of a chain evolution versus walk word products.

    ``off_diagonal_mass`` is the largest entry magnitude outside the
    diagonal path blocks; ``block_residual`` the largest Frobenius
    deviation of a diagonal block from its word product W_{j_n}...W_{j_1}.
    """

    passed: bool
    tol: float
    site_count: int
    off_diagonal_mass: float
    block_residual: float


def verify_block_diagonalization(u, form, n_steps, tol=1e-9, override_guard=False):
    """Check that the chain evolution of a classical U is the walk in disguise.

    Conjugates V_n by the per-site path basis and compares the diagonal
    path blocks (path order lexicographic, site 1 slowest) against the
    word products of the walk.  Only meaningful for classically driven U:
    the input is re-detected against ``form.system`` first.

    Raises
    ------
    DomainError
        If detect_classical rejects ``u`` over the form's system.
    """
    detection = detect_classical(u, form.system)
    if not detection.accepted:
        raise DomainError(
            f"block unitary is not classically driven (failed {detection.failed_check}, "
            f"max residual {detection.max_residual:.3e})"
        )
    d, s = u.system_dim, u.site_dim
    conjugated = path_basis_conjugation(u, form.system, n_steps, override_guard=override_guard)
    paths = s**n_steps
    by_path = conjugated.reshape(d, paths, d, paths).transpose(1, 3, 0, 2)

    block_residual = 0.0
    for index, (_, product) in enumerate(iter_word_products(form.step_unitaries, n_steps)):
        block_residual = max(
            block_residual, float(np.linalg.norm(by_path[index, index] - product))
        )

    off = by_path.copy()
    off[np.arange(paths), np.arange(paths)] = 0.0
    off_mass = float(np.abs(off).max())

    return BlockDiagonalizationReport(
        passed=max(off_mass, block_residual) <= tol,
        tol=float(tol),
        site_count=n_steps,
        off_diagonal_mass=off_mass,
        block_residual=block_residual,
    )
