"""Quantum Markov chains built from commuting conditional density amplitudes.

A chain of N two-site amplitudes K_1..K_N lives on a window of N+1 sites
over a homogeneous reference state psi with weight W_inf.  The state is

    phi(a) = psi( R* a R ),    R = j_[1,2](K_1) ... j_[N,N+1](K_N)

for observables a supported in [1,N].  Each K_n is normalized so the
psi-slice of K*K is the identity, which makes phi(1) = 1 and makes the
value of phi(a) independent of appending further normalized amplitudes.

Quasi-invariance comes in sandwich form phi(g(a)) = phi(y* a y) with
y = g^-1(R) R^-1, and in the commuting-centralizer case collapses to the
left form phi(g(a)) = phi(x_g a) with x_g = y y* built from |K_n|^2.
"""

from dataclasses import dataclass

import numpy as np

from . import matcore, states
from .errors import (
    NotCommutingChain,
    NotInCentralizer,
    SingularCDA,
    SizeMismatch,
    SupportTooLarge,
)
from .lattice import LocalOperator, Window, act, embed_pair, extend, support
from .states import homogeneous_state, matrix_unit_probes, slice_expectation

CDA_TOL = 1e-8


def cda_normalize_check(K, W_inf):
    """|| Tr_2[ K*K (1 (x) W_inf) ] - I ||, the conditional normalization."""
    K = np.asarray(K, dtype=complex)
    W_inf = np.asarray(W_inf, dtype=complex)
    d = W_inf.shape[0]
    if K.shape != (d * d, d * d):
        raise SizeMismatch(f"amplitude shape {K.shape} does not match d={d}")
    out = slice_expectation(W_inf, K.conj().T @ K)
    return matcore.operator_norm(out - np.eye(d))


def diagonal_cda(d=2, delta=0.0):
    """The diagonal amplitude diag(alpha, beta, beta, alpha) with
    alpha^2 = 3/2 + delta, beta^2 = 1/2 - delta, normalized against W = I/2."""
    if d != 2:
        raise SizeMismatch("the diagonal sampler is a d=2 construction")
    a2, b2 = 1.5 + delta, 0.5 - delta
    if b2 <= 0:
        raise SingularCDA(f"delta {delta} drives the amplitude singular")
    a, b = np.sqrt(a2), np.sqrt(b2)
    return np.diag([a, b, b, a]).astype(complex)


def seeded_chain(N, seed, spread=0.2):
    """N diagonal amplitudes with seeded detunings, all normalized against I/2."""
    rng = np.random.Generator(np.random.Philox(seed))
    deltas = spread * (2.0 * rng.random(N) - 1.0)
    return tuple(diagonal_cda(2, float(dl)) for dl in deltas)


@dataclass(frozen=True)
class MarkovState:
    d: int
    W_inf: np.ndarray
    chain: tuple
    validate: bool = True

    def __post_init__(self):
        W = np.asarray(self.W_inf, dtype=complex)
        object.__setattr__(self, "W_inf", W)
        ks = tuple(np.asarray(K, dtype=complex) for K in self.chain)
        object.__setattr__(self, "chain", ks)
        if self.validate:
            for n, K in enumerate(ks, start=1):
                sv = np.linalg.svd(K, compute_uv=False)
                if sv.min() <= matcore.TAU_POS:
                    raise SingularCDA(f"amplitude {n} has min singular value {sv.min():.3e}")
                r = cda_normalize_check(K, W)
                if r > CDA_TOL:
                    raise SingularCDA(f"amplitude {n} normalization residual {r:.3e}")

    @property
    def N(self):
        return len(self.chain)

    @property
    def window(self):
        return Window(self.d, self.N + 1)

    def psi(self):
        return homogeneous_state(self.d, self.N + 1, self.W_inf)


def ordered_product(M, direction="right"):
    """right: j_[1,2](K_1) ... j_[N,N+1](K_N); left: the reversed order."""
    w = M.window
    ns = range(1, M.N + 1) if direction == "right" else range(M.N, 0, -1)
    out = w.identity()
    for n in ns:
        out = out @ embed_pair(w, n, M.chain[n - 1])
    return out


def _extend_to_window(a, window):
    """View an operator on [1,M] inside a longer window, identity on the rest."""
    if a.window.d != window.d or a.window.N > window.N:
        raise SupportTooLarge(f"operator on {a.window.N} sites, window has {window.N}")
    if a.window.N == window.N:
        return a
    pad = window.d ** (window.N - a.window.N)
    return LocalOperator(window, np.kron(a.matrix, np.eye(pad)))


def _extend_perm(g, M):
    if g.N > M.N + 1:
        raise SupportTooLarge(f"permutation moves {g.N} sites, window has {M.N + 1}")
    if max(support(g), default=0) > M.N:
        raise SupportTooLarge("permutation must fix the boundary site")
    return extend(g, M.N + 1)


def markov_density(M):
    """The window density implementing phi: phi(a) = Tr(R Psi R* a)."""
    R = ordered_product(M, "right").matrix
    Psi = states.full_density(M.psi())
    return R @ Psi @ R.conj().T


def markov_functional(M):
    """phi as a weighted-trace state on the full window."""
    return states.WeightedTraceState(M.window, markov_density(M), validate=False)


def markov_eval(M, a):
    """phi(a) = psi(R* a R) for a supported in [1,N]."""
    if a.window.N > M.N:
        raise SupportTooLarge(f"observable on {a.window.N} sites, chain supports [1,{M.N}]")
    a_full = _extend_to_window(a, M.window)
    R = ordered_product(M, "right")
    return states.evaluate(M.psi(), R.dagger() @ a_full @ R)


def extension_residual(M, K_next, probes):
    """max over probes of |phi_N(a) - phi_{N+1}(a)| after appending one
    more normalized amplitude; the well-definedness diagnostic."""
    M_ext = MarkovState(M.d, M.W_inf, M.chain + (np.asarray(K_next, dtype=complex),),
                        validate=M.validate)
    worst = 0.0
    for a in probes:
        worst = max(worst, abs(markov_eval(M, a) - markov_eval(M_ext, a)))
    return worst


def y_cocycle(M, g):
    """y = g^-1(R) R^-1, the sandwich cocycle at the window scale."""
    g_full = _extend_perm(g, M)
    R = ordered_product(M, "right")
    try:
        R_inv = matcore.inv(R.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularCDA("chain product is singular") from exc
    return act(g_full.inverse(), R) @ LocalOperator(M.window, R_inv)


def sandwich_residual(M, g, probes):
    """max over probes a in A_[1,N] of |phi(g(a)) - phi(y* a y)|."""
    g_full = _extend_perm(g, M)
    y = y_cocycle(M, g)
    phi = markov_functional(M)
    worst = 0.0
    for a in probes:
        a_full = _extend_to_window(a, M.window)
        lhs = states.evaluate(phi, act(g_full, a_full))
        rhs = states.evaluate(phi, y.dagger() @ a_full @ y)
        worst = max(worst, abs(lhs - rhs))
    return worst


def chain_commutation_residual(M):
    """max pairwise commutator norm of the embedded amplitudes."""
    w = M.window
    embedded = [embed_pair(w, n, M.chain[n - 1]).matrix for n in range(1, M.N + 1)]
    worst = 0.0
    for i in range(len(embedded)):
        for j in range(i + 1, len(embedded)):
            worst = max(worst, matcore.operator_norm(
                embedded[i] @ embedded[j] - embedded[j] @ embedded[i]))
    return worst


def chain_centralizer_residual(M):
    """max over amplitudes of the centralizer residual of K_n in the
    two-site reference state."""
    psi2 = homogeneous_state(M.d, 2, M.W_inf)
    probes = matrix_unit_probes(psi2.window)
    worst = 0.0
    for K in M.chain:
        c = LocalOperator(psi2.window, K)
        worst = max(worst, states.centralizer_residual(psi2, c, probes))
    return worst


def x_cocycle_commuting(M, g, tol=CDA_TOL):
    """x_g = Q^-1 g^-1(Q) with Q = prod_n j_[n,n+1](K_n* K_n); equals y y*
    for commuting chains whose amplitudes centralize the reference state."""
    comm = chain_commutation_residual(M)
    if comm > tol:
        raise NotCommutingChain(f"pairwise commutator norm {comm:.3e}")
    centr = chain_centralizer_residual(M)
    if centr > tol:
        raise NotInCentralizer(f"amplitude centralizer residual {centr:.3e}")
    g_full = _extend_perm(g, M)
    w = M.window
    Q = w.identity()
    for n in range(1, M.N + 1):
        K = M.chain[n - 1]
        Q = Q @ embed_pair(w, n, K.conj().T @ K)
    return LocalOperator(w, matcore.inv(Q.matrix)) @ act(g_full.inverse(), Q)


def x_cocycle_table(M, group, tol=CDA_TOL):
    """Tabulate the commuting-case cocycle over a permutation group acting
    on the chain sites [1,N]."""
    from .cocycle import build_table
    w = M.window
    return build_table([_extend_perm(g, M) for g in group], w,
                       lambda g: x_cocycle_commuting(M, g, tol=tol))
