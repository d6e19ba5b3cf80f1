"""Dense complex matrix kernel.

Hermitian spectral decomposition, spectral functional calculus, operator
norms, positivity classification, and seeded random density matrices whose
spectrum is bounded away from zero.  Everything downstream funnels its
linear algebra through this module so that tolerances live in one place.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FloorTooLarge, NotHermitian, NotPositive

# absolute tolerances, scale-adjusted by the operator norm where noted
TAU_HERM = 1e-10   # hermiticity: ||A - A*|| <= TAU_HERM * ||A||
TAU_POS = 1e-10    # positivity threshold on eigenvalues
TAU_REL = 1e-9     # relative residual for reconstructions
TAU_ABS = 1e-12    # absolute residual (traces, normalization)


def dagger(A):
    """Conjugate transpose."""
    return np.asarray(A).conj().T


def herm_defect(A):
    """Operator-norm distance from A to its own adjoint."""
    A = np.asarray(A)
    return operator_norm(A - dagger(A))


def is_hermitian(A, tol=TAU_HERM):
    A = np.asarray(A)
    scale = max(operator_norm(A), 1.0)
    return herm_defect(A) <= tol * scale


def operator_norm(A):
    """Largest singular value of A."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def _fix_phases(V):
    # make the largest-magnitude component of each eigenvector real positive,
    # so repeated runs on identical input give identical output
    V = np.array(V, dtype=complex)
    for k in range(V.shape[1]):
        col = V[:, k]
        j = int(np.argmax(np.abs(col)))
        pivot = col[j]
        if abs(pivot) > 0:
            V[:, k] = col * (abs(pivot) / pivot)
    return V


def spectral_decompose(H, tol=TAU_HERM):
    """Eigenvalues (ascending) and a unitary of eigenvectors for hermitian H.

    Raises NotHermitian when the input fails the hermiticity tolerance.
    """
    H = np.asarray(H, dtype=complex)
    scale = max(operator_norm(H), 1.0)
    if herm_defect(H) > tol * scale:
        raise NotHermitian(f"hermiticity defect {herm_defect(H):.3e} exceeds {tol:.1e} * {scale:.3e}")
    Hs = (H + dagger(H)) / 2.0
    lam, V = np.linalg.eigh(Hs)
    return lam, _fix_phases(V)


def matrix_power(P, s, floor_tol=TAU_ABS):
    """Spectral power P^s for positive hermitian P and real s.

    The output is symmetrized to (M + M*)/2 to kill round-off asymmetry.
    matrix_power(P, 0) is the identity; matrix_power(P, 1) returns P's
    hermitian part.  Raises NotPositive when the minimum eigenvalue does
    not clear the floor tolerance (s = 0 and positive integer s excepted,
    where no spectral inversion is involved).
    """
    P = np.asarray(P, dtype=complex)
    if s == 0:
        return np.eye(P.shape[0], dtype=complex)
    lam, V = spectral_decompose(P)
    needs_floor = (s != int(s)) or (s < 0)
    if needs_floor and lam.min() <= floor_tol:
        raise NotPositive(f"min eigenvalue {lam.min():.3e} <= floor tolerance {floor_tol:.1e}")
    mu = np.power(lam.astype(complex) if not needs_floor else lam, float(s))
    M = (V * mu) @ dagger(V)
    return (M + dagger(M)) / 2.0


def inv(A):
    """Plain matrix inverse (not restricted to hermitian input)."""
    return np.linalg.inv(np.asarray(A, dtype=complex))


def random_density(dim, floor, seed):
    """Seeded random density matrix with all eigenvalues >= floor.

    Recipe: complex Gaussian G, form GG*, normalize to trace 1 - dim*floor,
    add floor * I.  The Philox counter-based generator makes the output a
    pure function of (dim, floor, seed).
    """
    if not 0 < floor < 1.0 / dim:
        raise FloorTooLarge(f"need 0 < floor < 1/dim = {1.0 / dim:.4f}, got {floor}")
    rng = np.random.Generator(np.random.Philox(seed))
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    A = G @ dagger(G)
    A = A * ((1.0 - dim * floor) / np.trace(A).real)
    W = A + floor * np.eye(dim)
    return (W + dagger(W)) / 2.0


def random_hermitian(dim, seed, scale=1.0):
    """Seeded random hermitian matrix (GUE-style, not normalized)."""
    rng = np.random.Generator(np.random.Philox(seed))
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (G + dagger(G)) / 2.0


def random_matrix(dim, seed, scale=1.0):
    """Seeded random complex matrix."""
    rng = np.random.Generator(np.random.Philox(seed))
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * G


@dataclass(frozen=True)
class Classification:
    hermitian: bool
    positive: bool
    invertible: bool
    min_eig: float | None
    max_eig: float | None


def classify(A, tol=TAU_POS):
    """Hermiticity / positivity / invertibility flags with spectrum bounds.

    min_eig and max_eig are reported for hermitian inputs only.
    """
    A = np.asarray(A, dtype=complex)
    scale = max(operator_norm(A), 1.0)
    hermitian = herm_defect(A) <= TAU_HERM * scale
    if hermitian:
        lam = np.linalg.eigvalsh((A + dagger(A)) / 2.0)
        min_eig, max_eig = float(lam[0]), float(lam[-1])
        positive = min_eig > tol * scale
        invertible = float(np.abs(lam).min()) > tol * scale
    else:
        min_eig = max_eig = None
        positive = False
        sv = np.linalg.svd(A, compute_uv=False)
        invertible = float(sv.min()) > tol * scale
    return Classification(hermitian, positive, invertible, min_eig, max_eig)
