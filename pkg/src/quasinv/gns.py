"""Finite-dimensional GNS construction and the covariant unitaries.

The representation space for a faithful state phi on a window of dimension
D is C^(D^2) carrying the inner product <a, b> = phi(a* b).  Vectors are
column-stacked matrices, so the gram matrix is W^T (x) I_D, the left
regular representation is pi(a) = I_D (x) a, and the cyclic vector is
vec(1).  Adjoints are taken relative to the gram: M# = gram^-1 M+ gram.

For a strong cocycle table the map U_g vec(a) = vec(g(a) x_{g^-1}^(1/2))
is gram-unitary, satisfies the group law, U_g# = U_{g^-1}, covariance
U_g# pi(a) U_g = pi(g^-1(a)), and transports the group average on the
algebra to the averaged conjugation on the representation.
"""

from dataclasses import dataclass

import numpy as np

from . import matcore, states
from .errors import NotFaithful, NotStrongCocycle
from .lattice import LocalOperator, act, permutation_unitary

GNS_TOL = 1e-9


def vec(m):
    """Column-stacking vectorization."""
    return np.asarray(m, dtype=complex).flatten(order="F")


def unvec(v, D):
    return np.asarray(v, dtype=complex).reshape((D, D), order="F")


@dataclass(frozen=True)
class GnsRepresentation:
    window: object
    W: np.ndarray          # full-window density of the state
    gram: np.ndarray       # W^T (x) I
    gram_inv: np.ndarray
    Phi: np.ndarray        # vec(1), the cyclic vector

    @property
    def D(self):
        return self.window.total_dim

    @property
    def dim(self):
        return self.D * self.D

    def pi(self, a):
        m = a.matrix if isinstance(a, LocalOperator) else np.asarray(a, dtype=complex)
        return np.kron(np.eye(self.D), m)

    def inner(self, u, v):
        return complex(np.conj(u) @ self.gram @ v)

    def adjoint(self, M):
        """The gram adjoint M# with <M# u, v> = <u, M v>."""
        return self.gram_inv @ M.conj().T @ self.gram

    def state_value(self, a):
        return self.inner(self.Phi, self.pi(a) @ self.Phi)

    def orthonormal_form(self, M):
        """The same operator written in an orthonormalized basis (Cholesky
        change of frame), for export: gram-unitaries become plain unitaries."""
        L = np.linalg.cholesky(self.gram)
        return L.conj().T @ M @ np.linalg.inv(L.conj().T)


def build_gns(phi):
    """The cyclic representation of a faithful state on its window."""
    ok, min_eig = states.is_faithful(phi)
    if not ok:
        raise NotFaithful(f"state density has min eigenvalue {min_eig:.3e}")
    W = states.full_density(phi)
    window = phi.window
    D = window.total_dim
    gram = np.kron(W.T, np.eye(D))
    gram_inv = np.kron(np.linalg.inv(W.T), np.eye(D))
    Phi = vec(np.eye(D))
    return GnsRepresentation(window, W, gram, gram_inv, Phi)


def build_unitaries(R, T, tol=GNS_TOL):
    """U_g on vec(a) = vec(g(a) x_{g^-1}^(1/2)) for a strong table:
    U_g = ((P_g* s_g)^T (x) P_g) with s_g the square root of x_{g^-1}."""
    for g in T.group:
        x = T.entries[g.image].matrix
        if matcore.herm_defect(x) > tol * max(1.0, matcore.operator_norm(x)):
            raise NotStrongCocycle(f"entry for {g.image} is not hermitean")
        if np.linalg.eigvalsh((x + x.conj().T) / 2.0)[0] <= 0:
            raise NotStrongCocycle(f"entry for {g.image} is not positive")
    out = {}
    for g in T.group:
        s = matcore.matrix_power(T.entries[g.inverse().image].matrix, 0.5)
        P = permutation_unitary(g, R.window)
        out[g.image] = np.kron((P.conj().T @ s).T, P)
    return out


def verify_unitaries(R, U, group, tol=GNS_TOL):
    """Gram-unitarity, the group law, and U_g# = U_{g^-1}."""
    I = np.eye(R.dim)
    unit = law = adj = 0.0
    for g in group:
        Ug = U[g.image]
        unit = max(unit, matcore.operator_norm(R.adjoint(Ug) @ Ug - I))
        adj = max(adj, matcore.operator_norm(R.adjoint(Ug) - U[g.inverse().image]))
    for g in group:
        for h in group:
            law = max(law, matcore.operator_norm(U[g.image] @ U[h.image] - U[(g * h).image]))
    resid = max(unit, law, adj)
    return {"unitarity": unit, "group_law": law, "adjoint": adj, "residual": resid,
            "pass": resid <= tol}


def verify_covariance(R, U, group, probes, tol=GNS_TOL):
    """max over g, probes of || U_g# pi(a) U_g - pi(g^-1(a)) ||."""
    worst = 0.0
    for g in group:
        Ug = U[g.image]
        Ug_sharp = R.adjoint(Ug)
        for a in probes:
            lhs = Ug_sharp @ R.pi(a) @ Ug
            rhs = R.pi(act(g.inverse(), a))
            worst = max(worst, matcore.operator_norm(lhs - rhs))
    return {"residual": worst, "pass": worst <= tol}


def algebra_average(subgroup, a):
    """The uniform average of the group action on the algebra."""
    total = sum(act(g, a).matrix for g in subgroup)
    return LocalOperator(a.window, total / len(subgroup))


def lift_conditional_expectation(R, U, subgroup):
    """The averaged conjugation X -> (1/|G|) sum_g U_g# X U_g."""
    pairs = [(U[g.image], R.adjoint(U[g.image])) for g in subgroup]

    def lifted(X):
        return sum(sharp @ X @ Ug for Ug, sharp in pairs) / len(pairs)

    return lifted


def verify_lifted_expectation(R, U, subgroup, probes, tol=GNS_TOL):
    """The lift agrees with the algebra-level average: for every probe a,
    (1/|G|) sum U_g# pi(a) U_g = pi(E_G(a))."""
    lifted = lift_conditional_expectation(R, U, subgroup)
    worst = 0.0
    for a in probes:
        lhs = lifted(R.pi(a))
        rhs = R.pi(algebra_average(subgroup, a))
        worst = max(worst, matcore.operator_norm(lhs - rhs))
    return {"residual": worst, "pass": worst <= tol}


def cyclicity_rank(R):
    """Rank of the span of {pi(e_ij) Phi}; D^2 certifies the cyclic vector."""
    cols = []
    for a in states.matrix_unit_probes(R.window):
        cols.append(R.pi(a) @ R.Phi)
    return int(np.linalg.matrix_rank(np.column_stack(cols), tol=1e-10))
