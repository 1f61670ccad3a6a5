"""Small dense linear-algebra helpers used throughout the package."""

import numpy as np


def dagger(m):
    """Hermitian adjoint."""
    return np.conj(m).T


def frobenius(m):
    """Frobenius norm."""
    return float(np.linalg.norm(m))


def unitarity_residual(m):
    """max(||m* m - I||_F, ||m m* - I||_F); 0 for an exactly unitary matrix."""
    m = np.asarray(m)
    eye = np.eye(m.shape[0])
    return max(frobenius(dagger(m) @ m - eye), frobenius(m @ dagger(m) - eye))


def is_unitary(m, tol=1e-10):
    """True if the unitarity residual of m is at most tol."""
    return unitarity_residual(m) <= tol


def random_unitary(dim, rng):
    """Draw a Haar-distributed unitary via QR of a complex Ginibre matrix.

    The R-diagonal phases are divided out so the distribution is exactly
    Haar rather than QR-convention dependent.
    """
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_special_orthogonal(dim, rng):
    """Draw a Haar-distributed rotation from SO(dim).

    QR of a real Gaussian matrix with the R-diagonal signs divided out gives
    O(dim); if the determinant is -1 the last row is flipped.  For dim = 1
    this always returns [[1.0]].
    """
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[-1, :] = -q[-1, :]
    return q
