"""States on tensor windows: weighted traces, product states, centralizers.

A product state is phi = (x) Tr(W_n .) with per-site density matrices W_n;
a weighted-trace state carries one full-window density.  Both evaluate as
Tr(W a).  The slice expectation is the conditional expectation induced by a
homogeneous product state onto the first factor of an adjacent pair,
realized as the weighted partial trace Tr_2[X (1 (x) W)].
"""

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import matcore
from .errors import NotHomogeneous, SizeMismatch
from .lattice import LocalOperator, Window, act, embed

# probe-set policy: complete matrix-unit bases up to this window dimension,
# seeded random hermitian probes beyond it
MATRIX_UNIT_PROBE_CAP = 64
N_RANDOM_PROBES = 200


@dataclass(frozen=True)
class ProductState:
    window: Window
    weights: tuple

    def __post_init__(self):
        ws = tuple(np.asarray(W, dtype=complex) for W in self.weights)
        if len(ws) != self.window.N:
            raise SizeMismatch(f"{len(ws)} weights for {self.window.N} sites")
        for W in ws:
            if W.shape != (self.window.d, self.window.d):
                raise SizeMismatch(f"weight shape {W.shape}, site dimension {self.window.d}")
        object.__setattr__(self, "weights", ws)

    def is_homogeneous(self):
        return all(np.array_equal(W, self.weights[0]) for W in self.weights[1:])


@dataclass(frozen=True)
class WeightedTraceState:
    window: Window
    W: np.ndarray
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if W.shape != (self.window.total_dim, self.window.total_dim):
            raise SizeMismatch(f"density shape {W.shape}, window dim {self.window.total_dim}")
        object.__setattr__(self, "W", W)
        if self.validate:
            if abs(np.trace(W) - 1.0) > 1e-9:
                raise SizeMismatch(f"trace {np.trace(W):.6f} is not 1")


def product_state(d, weights):
    ws = tuple(np.asarray(W) for W in weights)
    return ProductState(Window(d, len(ws)), ws)


def homogeneous_state(d, N, W):
    return ProductState(Window(d, N), tuple(np.asarray(W) for _ in range(N)))


def full_density(phi):
    """The full-window density matrix of the state."""
    if isinstance(phi, WeightedTraceState):
        return phi.W
    if isinstance(phi, ProductState):
        return reduce(np.kron, phi.weights)
    return np.asarray(phi, dtype=complex)


def evaluate(phi, a):
    """phi(a) = Tr(W a)."""
    m = a.matrix if isinstance(a, LocalOperator) else np.asarray(a, dtype=complex)
    W = full_density(phi)
    if W.shape != m.shape:
        raise SizeMismatch(f"state on dim {W.shape[0]}, operator on dim {m.shape[0]}")
    return complex(np.trace(W @ m))


def is_faithful(phi, tol=matcore.TAU_POS):
    """Whether the full-window density is positive definite; returns (flag, min eig)."""
    W = full_density(phi)
    lam = np.linalg.eigvalsh((W + W.conj().T) / 2.0)
    return bool(lam[0] > tol), float(lam[0])


def matrix_unit_probes(window):
    """All matrix units e_ij of the window; complete, so linear identities
    verified on them hold on the whole algebra."""
    dim = window.total_dim
    probes = []
    for i in range(dim):
        for j in range(dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = 1.0
            probes.append(LocalOperator(window, m))
    return probes


def random_hermitian_probes(window, count=N_RANDOM_PROBES, seed=0):
    dim = window.total_dim
    return [
        LocalOperator(window, matcore.random_hermitian(dim, seed=seed * 100_003 + k))
        for k in range(count)
    ]


def default_probes(window, seed=0):
    """Matrix-unit basis for small windows, seeded hermitian probes otherwise."""
    if window.total_dim <= MATRIX_UNIT_PROBE_CAP:
        return matrix_unit_probes(window)
    return random_hermitian_probes(window, seed=seed)


def centralizer_residual(phi, c, probes):
    """max over probes a of |phi(ac) - phi(ca)|; zero certifies membership
    in the centralizer relative to the probe set."""
    cm = c.matrix if isinstance(c, LocalOperator) else np.asarray(c)
    W = full_density(phi)
    best = 0.0
    for a in probes:
        am = a.matrix if isinstance(a, LocalOperator) else np.asarray(a)
        r = abs(np.trace(W @ am @ cm) - np.trace(W @ cm @ am))
        best = max(best, float(r))
    return best


def slice_expectation(psi, X):
    """(id (x) psi_0)(X) for a homogeneous product state: Tr_2[X (1 (x) W)].

    X lives on an adjacent pair of sites (a d^2 x d^2 block); the result is
    the d x d block left on the first site of the pair.
    """
    if isinstance(psi, ProductState):
        if not psi.is_homogeneous():
            raise NotHomogeneous("slice expectation needs a homogeneous product state")
        W = psi.weights[0]
        d = psi.window.d
    else:
        W = np.asarray(psi, dtype=complex)
        d = W.shape[0]
    Xm = X.matrix if isinstance(X, LocalOperator) else np.asarray(X, dtype=complex)
    if Xm.shape != (d * d, d * d):
        raise SizeMismatch(f"expected a {d * d}x{d * d} pair block, got {Xm.shape}")
    X4 = Xm.reshape(d, d, d, d)
    return np.einsum("ijkm,mj->ik", X4, W)


def is_exchangeable(psi, group, probes):
    """max over group elements and probes of |psi(g(a)) - psi(a)|."""
    best = 0.0
    for g in group:
        for a in probes:
            r = abs(evaluate(psi, act(g, a)) - evaluate(psi, a))
            best = max(best, float(r))
    return best


def partial_trace_site(W_full, window, site):
    """Reduced density on one site: trace out every other factor."""
    d, N = window.d, window.N
    T = np.asarray(W_full).reshape((d,) * (2 * N))
    keep = site - 1
    others = [k for k in range(N) if k != keep]
    T2 = T.transpose([keep, N + keep] + others + [N + k for k in others])
    T3 = T2.reshape(d, d, d ** (N - 1), d ** (N - 1))
    return np.einsum("ijkk->ij", T3)
