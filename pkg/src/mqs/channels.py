"""Completely-positive operations supported on lattice subsystems.

Kraus operators are stored on the support subspace only and embedded into
the full lattice on demand, which keeps the locality that the commutator
bounds rely on explicit.  A channel is valid when sum_k E_k^dag E_k <= 1;
the selective success probability is G = Tr(sum_k E_k^dag E_k rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import (
    DensityState,
    LatticeConfig,
    PureState,
    SubsystemSupport,
    PAULI_X,
    apply_on_support,
    cat_state,
    embed_on_support,
    schmidt,
    tilted_state,
)

VALIDITY_TOL = 1e-10
NULL_OUTCOME_G = 1e-14


class NullOutcome(RuntimeError):
    """Raised when the selective outcome has vanishing probability."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Ordered Kraus operators on a subsystem, trace-non-increasing when valid."""

    kraus_ops: tuple[np.ndarray, ...]
    support: SubsystemSupport
    trace_preserving: bool

    def __post_init__(self):
        if not self.kraus_ops:
            raise ValueError("channel needs at least one Kraus operator")
        dim = self.support.dim
        ops = []
        for op in self.kraus_ops:
            op = np.ascontiguousarray(op, dtype=np.complex128)
            if op.shape != (dim, dim):
                raise ValueError(f"Kraus operators must be {dim} x {dim}")
            op.setflags(write=False)
            ops.append(op)
        object.__setattr__(self, "kraus_ops", tuple(ops))

    @property
    def n_kraus(self) -> int:
        return len(self.kraus_ops)

    def gram(self) -> np.ndarray:
        """sum_k E_k^dag E_k on the support subspace."""
        dim = self.support.dim
        g = np.zeros((dim, dim), dtype=np.complex128)
        for op in self.kraus_ops:
            g += op.conj().T @ op
        return g

    def embedded_ops(self) -> list[np.ndarray]:
        return [embed_on_support(op, self.support) for op in self.kraus_ops]


@dataclass(frozen=True, eq=False)
class ChannelOutcome:
    """Normalized post-selection state together with its probability."""

    state: PureState | DensityState
    success_probability: float

    def __post_init__(self):
        g = float(self.success_probability)
        if not 0.0 <= g <= 1.0 + 1e-10:
            raise ValueError(f"success probability {g} outside [0, 1]")
        object.__setattr__(self, "success_probability", g)


@dataclass(frozen=True)
class ChannelValidation:
    max_gram_eigenvalue: float
    valid: bool
    trace_preserving: bool


def make_channel(ops, support: SubsystemSupport) -> KrausChannel:
    """Build a channel, computing the trace-preserving flag from the Gram sum."""
    chan = KrausChannel(tuple(np.asarray(op) for op in ops), support,
                        trace_preserving=False)
    gram = chan.gram()
    tp = bool(np.abs(gram - np.eye(support.dim)).max() <= VALIDITY_TOL)
    return KrausChannel(chan.kraus_ops, support, trace_preserving=tp)


def validate(channel: KrausChannel, tol: float = VALIDITY_TOL) -> ChannelValidation:
    """Report whether sum_k E_k^dag E_k <= 1 holds (report-only, never raises)."""
    gram = channel.gram()
    top = float(np.linalg.eigvalsh(gram)[-1])
    tp = bool(np.abs(gram - np.eye(channel.support.dim)).max() <= tol)
    return ChannelValidation(max_gram_eigenvalue=top,
                             valid=top <= 1.0 + tol,
                             trace_preserving=tp)


def apply_pure(channel: KrausChannel, psi: PureState) -> ChannelOutcome:
    """Selective single-Kraus update E|psi> / sqrt(G), G = <psi|E^dag E|psi>."""
    if channel.n_kraus != 1:
        raise ValueError("pure-to-pure application takes a single Kraus operator")
    if psi.lattice.dim != channel.support.lattice.dim:
        raise ValueError("channel and state lattices do not match")
    w = apply_on_support(channel.kraus_ops[0], channel.support, psi.amplitudes)
    g = float(np.vdot(w, w).real)
    if g < NULL_OUTCOME_G:
        raise NullOutcome(f"outcome probability {g:g} below threshold")
    return ChannelOutcome(PureState(w / math.sqrt(g), psi.lattice), g)


def apply_mixed(channel: KrausChannel, rho: DensityState) -> ChannelOutcome:
    """Selective update sum_k E_k rho E_k^dag / G, G = Tr(sum E_k rho E_k^dag)."""
    if rho.lattice.dim != channel.support.lattice.dim:
        raise ValueError("channel and state lattices do not match")
    out = np.zeros_like(rho.matrix)
    for op in channel.embedded_ops():
        out += op @ rho.matrix @ op.conj().T
    g = float(np.trace(out).real)
    if g < NULL_OUTCOME_G:
        raise NullOutcome(f"outcome probability {g:g} below threshold")
    return ChannelOutcome(DensityState(out / g, rho.lattice), g)


def complete_channel(ops, support: SubsystemSupport) -> KrausChannel:
    """Append sqrt(1 - sum E_k^dag E_k) so the channel becomes trace preserving."""
    partial = KrausChannel(tuple(np.asarray(op) for op in ops), support,
                           trace_preserving=False)
    deficit = np.eye(support.dim) - partial.gram()
    evals, evecs = np.linalg.eigh(deficit)
    if evals[0] < -VALIDITY_TOL:
        raise ValueError("operators already exceed the contraction budget")
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    new_ops = list(partial.kraus_ops)
    if np.abs(root).max() > VALIDITY_TOL:
        new_ops.append(root)
    return make_channel(new_ops, support)


# ---------------------------------------------------------------------------
# named constructions


def make_spin_flip_even(lattice: LatticeConfig) -> KrausChannel:
    """Unitary product of sigma_x over the even sites."""
    if lattice.local_dim != 2:
        raise ValueError("spin flips are defined for qubits")
    if lattice.n_sites < 2:
        raise ValueError("need at least 2 sites")
    sites = tuple(range(2, lattice.n_sites + 1, 2))
    support = SubsystemSupport(sites, lattice)
    op = np.array([[1.0]], dtype=np.complex128)
    for _ in sites:
        op = np.kron(op, PAULI_X)
    return make_channel([op], support)


def make_local_projection(lattice: LatticeConfig,
                          alpha: float) -> tuple[KrausChannel, PureState]:
    """Single-site projector that turns the tilted state into a cat factor.

    Returns the rank-1 Kraus |v><v| on site 1 with |v> = b|1> + a|0>,
    a = N**(-alpha), b = sqrt(1 - a^2), together with the matching tilted
    input state.  On that input G = 2 a^2 b^2 = 2 N**(-2a) (1 - N**(-2a))
    and the outcome is |v> on site 1 times a cat state on the rest.
    """
    if lattice.local_dim != 2:
        raise ValueError("local projection is defined for qubits")
    if lattice.n_sites < 2:
        raise ValueError("need at least 2 sites")
    n = lattice.n_sites
    a = n ** (-alpha)
    b = math.sqrt(1.0 - a * a)
    v = np.array([a, b], dtype=np.complex128)  # (|0>, |1>) components
    proj = np.outer(v, v.conj())
    support = SubsystemSupport((1,), lattice)
    return make_channel([proj], support), tilted_state(lattice, alpha)


def make_cat_creator(psi1: PureState, support: SubsystemSupport,
                     mode: str = "completed") -> KrausChannel:
    """Channel mapping `psi1` to a state with a cat factor on `support`.

    mode="literal" is the single operator |c><xi_1| + ... + |c><xi_v|
    built from the Schmidt vectors of `psi1` on the support; its operator
    norm is sqrt(v), so for Schmidt rank v > 1 it fails contraction
    validation even though it acts deterministically on `psi1` itself.
    mode="completed" instead uses the instrument {|c><xi_i|} plus the
    projector onto the orthogonal complement of span{xi_i}; that channel is
    trace preserving (G = 1 on every input) and still installs the cat
    factor on the support when applied to `psi1`.
    """
    lat = psi1.lattice
    if lat.local_dim != 2:
        raise ValueError("cat creation is defined for qubits")
    if support.volume >= lat.n_sites:
        raise ValueError("support must be a proper subset of the lattice")
    dec = schmidt(psi1, support)
    ds = support.dim
    cat = np.zeros(ds, dtype=np.complex128)
    cat[0] = cat[-1] = 1.0 / math.sqrt(2.0)
    if mode == "literal":
        op = np.zeros((ds, ds), dtype=np.complex128)
        for xi in dec.xi_vectors:
            op += np.outer(cat, xi.conj())
        return make_channel([op], support)
    if mode != "completed":
        raise ValueError("mode must be 'literal' or 'completed'")
    ops = [np.outer(cat, xi.conj()) for xi in dec.xi_vectors]
    span = dec.xi_vectors.T @ dec.xi_vectors.conj()
    residual = np.eye(ds) - span
    if np.abs(residual).max() > VALIDITY_TOL:
        ops.append(residual)
    return make_channel(ops, support)


def random_channel(lattice: LatticeConfig, support: SubsystemSupport,
                   n_kraus: int, seed: int, unitary: bool = False) -> KrausChannel:
    """Seeded random channel on `support`.

    Gaussian blocks are jointly rescaled so the stacked column has operator
    norm drawn uniformly from [0.5, 1]; with `unitary` a single Haar
    unitary Kraus is returned instead (trace preserving).
    """
    if n_kraus < 1:
        raise ValueError("n_kraus must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6368616e]))
    dim = support.dim
    if unitary:
        if n_kraus != 1:
            raise ValueError("a unitary channel has a single Kraus operator")
        z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return make_channel([q], support)
    blocks = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
              for _ in range(n_kraus)]
    stacked = np.vstack(blocks)
    top = np.linalg.svd(stacked, compute_uv=False)[0]
    target = rng.uniform(0.5, 1.0)
    scale = target / top
    return make_channel([scale * b for b in blocks], support)


# ---------------------------------------------------------------------------
# serialization


def _encode_matrix(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def _decode_matrix(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data],
                    dtype=np.complex128)


def channel_to_dict(channel: KrausChannel) -> dict:
    """JSON-ready document: complex entries as [re, im] pairs plus metadata."""
    return {
        "n_sites": channel.support.lattice.n_sites,
        "local_dim": channel.support.lattice.local_dim,
        "support": list(channel.support.sites),
        "trace_preserving": channel.trace_preserving,
        "kraus": [_encode_matrix(op) for op in channel.kraus_ops],
    }


def channel_from_dict(data: dict) -> KrausChannel:
    lattice = LatticeConfig(int(data["n_sites"]), int(data.get("local_dim", 2)))
    support = SubsystemSupport(tuple(data["support"]), lattice)
    ops = [_decode_matrix(op) for op in data["kraus"]]
    return make_channel(ops, support)
