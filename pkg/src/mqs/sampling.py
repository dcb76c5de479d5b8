"""Seeded random states, observables, and subsystems.

Every draw goes through a numpy Generator so batch runs can derive
per-task generators from a master seed and stay reproducible regardless
of scheduling.
"""

from __future__ import annotations

import numpy as np

from .lattice import (
    AdditiveOperator,
    DensityState,
    LatticeConfig,
    PureState,
    SubsystemSupport,
    product_state,
)


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-derived generator: (seed, i, j, ...) -> independent stream."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed),
                                                         *[int(p) for p in path]]))


def random_pure_state(lattice: LatticeConfig, rng: np.random.Generator) -> PureState:
    z = rng.standard_normal(lattice.dim) + 1j * rng.standard_normal(lattice.dim)
    return PureState(z / np.linalg.norm(z), lattice)


def random_product_state(lattice: LatticeConfig,
                         rng: np.random.Generator) -> PureState:
    d = lattice.local_dim
    vecs = [rng.standard_normal(d) + 1j * rng.standard_normal(d)
            for _ in range(lattice.n_sites)]
    return product_state(lattice, vecs)


def random_density_state(lattice: LatticeConfig, rng: np.random.Generator,
                         rank: int | None = None) -> DensityState:
    """Normalized Wishart matrix G G^dag / Tr, full rank by default."""
    dim = lattice.dim
    r = dim if rank is None else max(1, min(rank, dim))
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    mat = g @ g.conj().T
    return DensityState(mat / np.trace(mat).real, lattice)


def random_product_mixture(lattice: LatticeConfig, n_terms: int,
                           rng: np.random.Generator) -> DensityState:
    """Convex mixture of random product states (a minimal-index family)."""
    dim = lattice.dim
    weights = rng.dirichlet(np.ones(n_terms))
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for w in weights:
        psi = random_product_state(lattice, rng)
        mat += w * psi.projector()
    return DensityState(mat, lattice)


def random_additive(lattice: LatticeConfig,
                    rng: np.random.Generator) -> AdditiveOperator:
    """Independent unit-norm direction on every site."""
    c = rng.standard_normal((lattice.n_sites, lattice.n_basis))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    if lattice.local_dim > 2:
        c /= np.maximum(AdditiveOperator._site_norms(c, lattice), 1e-300)[:, None]
    return AdditiveOperator(c, lattice)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_support(lattice: LatticeConfig, rng: np.random.Generator,
                   max_volume: int | None = None) -> SubsystemSupport:
    n = lattice.n_sites
    cap = n if max_volume is None else min(max_volume, n)
    volume = int(rng.integers(1, cap + 1))
    sites = rng.choice(np.arange(1, n + 1), size=volume, replace=False)
    return SubsystemSupport(tuple(int(s) for s in sites), lattice)
