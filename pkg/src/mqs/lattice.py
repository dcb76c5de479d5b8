"""Dense states, local-operator embeddings, Schatten norms, and Schmidt
decompositions on finite spin lattices.

Sites are 1-based and site 1 is the most significant tensor factor, so the
basis index of |b1 b2 ... bN> is sum_l b_l * d**(N-l).  All matrices are
dense; the default site caps (14 for state vectors, 10 for density matrices)
keep full-spectrum trace norms affordable and can be raised via the
MQS_MAX_QUBITS environment variable.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np

DEFAULT_PURE_CAP = 14
DEFAULT_MIXED_CAP = 10

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
SCHMIDT_CUTOFF = 1e-12


def max_sites(mode: str) -> int:
    """Site cap for "pure" (state-vector) or "mixed" (density-matrix) work."""
    env = os.environ.get("MQS_MAX_QUBITS")
    if env is not None:
        return int(env)
    return DEFAULT_PURE_CAP if mode == "pure" else DEFAULT_MIXED_CAP


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


PAULI_X = _frozen(np.array([[0, 1], [1, 0]], dtype=np.complex128))
PAULI_Y = _frozen(np.array([[0, -1j], [1j, 0]], dtype=np.complex128))
PAULI_Z = _frozen(np.array([[1, 0], [0, -1]], dtype=np.complex128))

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@functools.lru_cache(maxsize=None)
def local_basis(local_dim: int) -> np.ndarray:
    """Traceless Hermitian orthogonal basis of the d x d site algebra.

    Returns an array of shape (d*d - 1, d, d) with Tr(B_a B_b) = 2 delta_ab.
    For d = 2 this is exactly (sigma_x, sigma_y, sigma_z); for larger d the
    generalized Gell-Mann construction is used.
    """
    d = local_dim
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0
            mats.append(sym)
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.append(anti)
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=np.complex128)
        for j in range(l):
            diag[j, j] = 1.0
        diag[l, l] = -l
        mats.append(diag * math.sqrt(2.0 / (l * (l + 1))))
    if d == 2:  # keep the conventional (x, y, z) ordering
        mats = [PAULI_X.copy(), PAULI_Y.copy(), PAULI_Z.copy()]
    return _frozen(np.array(mats))


@dataclass(frozen=True)
class LatticeConfig:
    """Geometry of the problem: N sites, each carrying a d-level system."""

    n_sites: int
    local_dim: int = 2

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.local_dim < 2:
            raise ValueError("local_dim must be >= 2")
        cap = max_sites("pure")
        if self.n_sites > cap:
            raise ValueError(f"n_sites={self.n_sites} exceeds cap {cap} "
                             "(set MQS_MAX_QUBITS to override)")

    @property
    def dim(self) -> int:
        return self.local_dim ** self.n_sites

    @property
    def n_basis(self) -> int:
        """Number of traceless Hermitian basis operators per site."""
        return self.local_dim ** 2 - 1


@dataclass(frozen=True, eq=False)
class SubsystemSupport:
    """Sorted set of 1-based site indices a channel acts on."""

    sites: tuple[int, ...]
    lattice: LatticeConfig

    def __post_init__(self):
        sites = tuple(sorted(set(int(s) for s in self.sites)))
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ValueError("support must be nonempty")
        if sites[0] < 1 or sites[-1] > self.lattice.n_sites:
            raise ValueError("support sites out of range")

    @property
    def volume(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.lattice.local_dim ** self.volume

    def complement(self) -> tuple[int, ...]:
        inside = set(self.sites)
        return tuple(l for l in range(1, self.lattice.n_sites + 1)
                     if l not in inside)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on the full lattice."""

    amplitudes: np.ndarray
    lattice: LatticeConfig

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.lattice.dim,):
            raise ValueError(f"amplitude vector must have length {self.lattice.dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def projector(self) -> np.ndarray:
        """Dense |psi><psi| (use only at modest N)."""
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class DensityState:
    """Unit-trace positive matrix on the full lattice."""

    matrix: np.ndarray
    lattice: LatticeConfig

    def __post_init__(self):
        cap = max_sites("mixed")
        if self.lattice.n_sites > cap:
            raise ValueError(f"n_sites={self.lattice.n_sites} exceeds mixed-mode "
                             f"cap {cap} (set MQS_MAX_QUBITS to override)")
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        dim = self.lattice.dim
        if mat.shape != (dim, dim):
            raise ValueError(f"density matrix must be {dim} x {dim}")
        herm_err = np.abs(mat - mat.conj().T).max()
        if herm_err > HERMITIAN_TOL:
            raise ValueError(f"density matrix not Hermitian (max dev {herm_err:g})")
        mat = 0.5 * (mat + mat.conj().T)
        tr = np.trace(mat).real
        if abs(tr - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"trace {tr!r} deviates from 1")
        emin = np.linalg.eigvalsh(mat)[0]
        if emin < -HERMITIAN_TOL:
            raise ValueError(f"negative eigenvalue {emin:g} below tolerance")
        object.__setattr__(self, "matrix", _frozen(mat))


@dataclass(frozen=True, eq=False)
class AdditiveOperator:
    """Sum of single-site observables, A = sum_l a(l).

    `coeffs` has shape (N, d*d - 1); row l holds the real expansion of a(l+1)
    in the traceless local basis.  Every site operator must have operator
    norm <= 1; for qubits that norm equals the Euclidean norm of the row, so
    the feasibility check is exact.
    """

    coeffs: np.ndarray
    lattice: LatticeConfig

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        n, k = self.lattice.n_sites, self.lattice.n_basis
        if c.shape != (n, k):
            raise ValueError(f"coeffs must have shape ({n}, {k})")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        norms = self.__class__._site_norms(c, self.lattice)
        if norms.max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError(f"site operator norm {norms.max()} exceeds 1")
        object.__setattr__(self, "coeffs", _frozen(c))

    @staticmethod
    def _site_norms(coeffs: np.ndarray, lattice: LatticeConfig) -> np.ndarray:
        if lattice.local_dim == 2:
            return np.linalg.norm(coeffs, axis=1)
        basis = local_basis(lattice.local_dim)
        ops = np.tensordot(coeffs, basis, axes=([1], [0]))
        return np.array([np.abs(np.linalg.eigvalsh(op)).max(initial=0.0)
                         for op in ops])

    def site_norms(self) -> np.ndarray:
        return self.__class__._site_norms(self.coeffs, self.lattice)

    def site_operator(self, site: int) -> np.ndarray:
        """The d x d observable acting on `site` (1-based)."""
        _check_site(site, self.lattice)
        basis = local_basis(self.lattice.local_dim)
        return np.tensordot(self.coeffs[site - 1], basis, axes=([0], [0]))

    def restricted(self, support: SubsystemSupport) -> "AdditiveOperator":
        """Copy with coefficients zeroed outside `support`."""
        c = np.zeros_like(self.coeffs)
        for site in support.sites:
            c[site - 1] = self.coeffs[site - 1]
        return AdditiveOperator(c, self.lattice)

    @classmethod
    def uniform(cls, lattice: LatticeConfig, axis: str = "z",
                weight: float = 1.0) -> "AdditiveOperator":
        """Same direction on every site, e.g. the total magnetization M_z."""
        c = np.zeros((lattice.n_sites, lattice.n_basis))
        c[:, _axis_index(axis, lattice)] = weight
        return cls(c, lattice)

    @classmethod
    def staggered(cls, lattice: LatticeConfig, axis: str = "z",
                  weight: float = 1.0) -> "AdditiveOperator":
        """Alternating signs (-1)**l with l = 1..N, e.g. M_z^st."""
        c = np.zeros((lattice.n_sites, lattice.n_basis))
        signs = np.array([(-1.0) ** l for l in range(1, lattice.n_sites + 1)])
        c[:, _axis_index(axis, lattice)] = weight * signs
        return cls(c, lattice)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """psi = sum_i lambda_i xi_i (x) phi_i across a bipartition.

    `xi_vectors[i]` lives on the subsystem, `phi_vectors[i]` on its
    complement; coefficients are positive and descending.
    """

    lambdas: np.ndarray
    xi_vectors: np.ndarray
    phi_vectors: np.ndarray
    rank: int

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if lam.ndim != 1 or self.rank != lam.size:
            raise ValueError("rank must equal the number of coefficients")
        if np.any(np.diff(lam) > 0):
            raise ValueError("Schmidt coefficients must be descending")
        if abs(np.sum(lam ** 2) - 1.0) > HERMITIAN_TOL:
            raise ValueError("Schmidt coefficients must square-sum to 1")
        for name in ("xi_vectors", "phi_vectors"):
            vecs = np.ascontiguousarray(getattr(self, name), dtype=np.complex128)
            gram = vecs.conj() @ vecs.T
            if np.abs(gram - np.eye(self.rank)).max() > HERMITIAN_TOL:
                raise ValueError(f"{name} are not orthonormal")
            object.__setattr__(self, name, _frozen(vecs))
        object.__setattr__(self, "lambdas", _frozen(lam))

    def reconstruct(self) -> np.ndarray:
        """Amplitudes in subsystem-major ordering (subsystem sites first)."""
        return np.einsum("i,ia,ib->ab", self.lambdas, self.xi_vectors,
                         self.phi_vectors).reshape(-1)


# ---------------------------------------------------------------------------
# embeddings and tensor contractions


def _check_site(site: int, lattice: LatticeConfig) -> None:
    if not 1 <= site <= lattice.n_sites:
        raise ValueError(f"site {site} out of range 1..{lattice.n_sites}")


def _axis_index(axis: str, lattice: LatticeConfig) -> int:
    if isinstance(axis, str):
        if axis not in AXIS_INDEX or lattice.local_dim != 2:
            if lattice.local_dim != 2:
                raise ValueError("axis labels are defined for qubits only")
            raise ValueError(f"unknown axis {axis!r}")
        return AXIS_INDEX[axis]
    return int(axis)


def embed_local(op: np.ndarray, site: int, lattice: LatticeConfig) -> np.ndarray:
    """1 (x) ... (x) op (x) ... (x) 1 with `op` at the given 1-based site."""
    _check_site(site, lattice)
    d = lattice.local_dim
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (d, d):
        raise ValueError(f"local operator must be {d} x {d}")
    left = d ** (site - 1)
    right = d ** (lattice.n_sites - site)
    return np.kron(np.kron(np.eye(left, dtype=np.complex128), op),
                   np.eye(right, dtype=np.complex128))


def apply_local(op: np.ndarray, site: int, vec: np.ndarray,
                lattice: LatticeConfig) -> np.ndarray:
    """op(site) |vec> without building the full matrix."""
    _check_site(site, lattice)
    d = lattice.local_dim
    left = d ** (site - 1)
    right = d ** (lattice.n_sites - site)
    v = vec.reshape(left, d, right)
    return np.einsum("ab,xby->xay", op, v).reshape(-1)


def apply_local_matrix(op: np.ndarray, site: int, mat: np.ndarray,
                       lattice: LatticeConfig, side: str = "left") -> np.ndarray:
    """op(site) @ mat (side="left") or mat @ op(site) (side="right")."""
    _check_site(site, lattice)
    d = lattice.local_dim
    dim = lattice.dim
    left = d ** (site - 1)
    right = d ** (lattice.n_sites - site)
    if side == "left":
        m = mat.reshape(left, d, right * dim)
        return np.einsum("ab,xby->xay", op, m).reshape(dim, dim)
    if side != "right":
        raise ValueError("side must be 'left' or 'right'")
    m = mat.reshape(dim * left, d, right)
    return np.einsum("xay,ab->xby", m, op).reshape(dim, dim)


def apply_additive(a: AdditiveOperator, vec: np.ndarray) -> np.ndarray:
    """A |vec> summed site by site (scales to the pure-mode cap)."""
    out = np.zeros_like(vec, dtype=np.complex128)
    for site in range(1, a.lattice.n_sites + 1):
        row = a.coeffs[site - 1]
        if not row.any():
            continue
        out += apply_local(a.site_operator(site), site, vec, a.lattice)
    return out


def realize_additive(a: AdditiveOperator) -> np.ndarray:
    """Dense matrix of A = sum_l a(l)."""
    dim = a.lattice.dim
    out = np.zeros((dim, dim), dtype=np.complex128)
    for site in range(1, a.lattice.n_sites + 1):
        if not a.coeffs[site - 1].any():
            continue
        out += embed_local(a.site_operator(site), site, a.lattice)
    return out


def _support_permutation(support: SubsystemSupport) -> tuple[list[int], list[int]]:
    """Axis permutation bringing support sites first, and its inverse."""
    order = [s - 1 for s in support.sites] + [s - 1 for s in support.complement()]
    inverse = np.argsort(order).tolist()
    return order, inverse


def apply_on_support(op_s: np.ndarray, support: SubsystemSupport,
                     vec: np.ndarray) -> np.ndarray:
    """Apply an operator given on the support subspace to a full state vector."""
    lat = support.lattice
    d = lat.local_dim
    ds, dr = support.dim, lat.dim // support.dim
    order, inverse = _support_permutation(support)
    t = vec.reshape((d,) * lat.n_sites).transpose(order).reshape(ds, dr)
    t = (op_s @ t).reshape((d,) * lat.n_sites).transpose(inverse)
    return np.ascontiguousarray(t).reshape(-1)


def embed_on_support(op_s: np.ndarray, support: SubsystemSupport) -> np.ndarray:
    """Dense full-lattice matrix of an operator given on the support subspace."""
    lat = support.lattice
    d = lat.local_dim
    n = lat.n_sites
    dr = lat.dim // support.dim
    op_s = np.asarray(op_s, dtype=np.complex128)
    if op_s.shape != (support.dim, support.dim):
        raise ValueError(f"operator must be {support.dim} x {support.dim}")
    full = np.kron(op_s, np.eye(dr, dtype=np.complex128))
    order, inverse = _support_permutation(support)
    axes = inverse + [n + ax for ax in inverse]
    full = full.reshape((d,) * (2 * n)).transpose(axes)
    return np.ascontiguousarray(full).reshape(lat.dim, lat.dim)


def partial_trace(mat: np.ndarray, keep: SubsystemSupport) -> np.ndarray:
    """Trace out everything outside `keep`."""
    lat = keep.lattice
    d = lat.local_dim
    n = lat.n_sites
    order, _ = _support_permutation(keep)
    axes = order + [n + ax for ax in order]
    t = mat.reshape((d,) * (2 * n)).transpose(axes)
    ds, dr = keep.dim, lat.dim // keep.dim
    t = t.reshape(ds, dr, ds, dr)
    return np.einsum("arbr->ab", t)


def site_partial_traces(mat: np.ndarray, lattice: LatticeConfig) -> np.ndarray:
    """All single-site reductions Tr_{others}(mat), shape (N, d, d)."""
    d = lattice.local_dim
    out = np.empty((lattice.n_sites, d, d), dtype=np.complex128)
    for site in range(1, lattice.n_sites + 1):
        left = d ** (site - 1)
        right = d ** (lattice.n_sites - site)
        t = mat.reshape(left, d, right, left, d, right)
        out[site - 1] = np.einsum("aibajb->ij", t)
    return out


# ---------------------------------------------------------------------------
# Schatten norms and the Schmidt decomposition


def schatten_norm(x: np.ndarray, k: float) -> float:
    """(sum_j |e_j|^k)^(1/k) over eigenvalues (Hermitian x) or singular values.

    k = inf gives the operator norm; k must be >= 1.
    """
    if k < 1:
        raise ValueError("Schatten order k must be >= 1")
    x = np.asarray(x, dtype=np.complex128)
    scale = np.abs(x).max(initial=0.0)
    if scale == 0.0:
        return 0.0
    if np.abs(x - x.conj().T).max() <= 1e-10 * max(1.0, scale):
        vals = np.abs(np.linalg.eigvalsh(x))
    else:
        vals = np.linalg.svd(x, compute_uv=False)
    if math.isinf(k):
        return float(vals.max(initial=0.0))
    if k == 1:
        return float(vals.sum())
    if k == 2:
        return float(np.sqrt(np.sum(vals ** 2)))
    return float(np.sum(vals ** k) ** (1.0 / k))


def schmidt(psi: PureState, support: SubsystemSupport) -> SchmidtDecomposition:
    """Schmidt decomposition of `psi` across (support | complement).

    Singular values below 1e-12 are dropped from the rank.
    """
    lat = psi.lattice
    if support.volume >= lat.n_sites:
        raise ValueError("support must be a proper subset of the lattice")
    d = lat.local_dim
    ds, dr = support.dim, lat.dim // support.dim
    order, _ = _support_permutation(support)
    m = psi.amplitudes.reshape((d,) * lat.n_sites).transpose(order).reshape(ds, dr)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > SCHMIDT_CUTOFF
    rank = int(np.count_nonzero(keep))
    return SchmidtDecomposition(lambdas=s[keep], xi_vectors=u[:, keep].T,
                                phi_vectors=vh[keep, :], rank=rank)


# ---------------------------------------------------------------------------
# standard states


def basis_state(lattice: LatticeConfig, bits) -> PureState:
    """Computational basis state from a bit string like "0101" or a sequence."""
    if isinstance(bits, str):
        bits = [int(b) for b in bits]
    bits = list(bits)
    if len(bits) != lattice.n_sites:
        raise ValueError("one symbol per site required")
    d = lattice.local_dim
    idx = 0
    for b in bits:
        if not 0 <= b < d:
            raise ValueError(f"symbol {b} out of range for local_dim {d}")
        idx = idx * d + b
    amps = np.zeros(lattice.dim, dtype=np.complex128)
    amps[idx] = 1.0
    return PureState(amps, lattice)


def product_state(lattice: LatticeConfig, site_vectors) -> PureState:
    """Tensor product of normalized single-site vectors."""
    if len(site_vectors) != lattice.n_sites:
        raise ValueError("one vector per site required")
    amps = np.array([1.0], dtype=np.complex128)
    for v in site_vectors:
        v = np.asarray(v, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        amps = np.kron(amps, v)
    return PureState(amps, lattice)


def cat_state(lattice: LatticeConfig) -> PureState:
    """(|00...0> + |11...1>) / sqrt(2) (all-(d-1) string for generic d)."""
    amps = np.zeros(lattice.dim, dtype=np.complex128)
    amps[0] = 1.0 / math.sqrt(2.0)
    amps[-1] = 1.0 / math.sqrt(2.0)
    return PureState(amps, lattice)


def plus_state(lattice: LatticeConfig) -> PureState:
    """|+>^N for qubit lattices."""
    if lattice.local_dim != 2:
        raise ValueError("plus_state is defined for qubits")
    v = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return product_state(lattice, [v] * lattice.n_sites)


def tilted_state(lattice: LatticeConfig, alpha: float) -> PureState:
    """N**(-alpha) |1...1> + sqrt(1 - N**(-2 alpha)) |0...0>, 0 < alpha <= 1/2."""
    if lattice.local_dim != 2:
        raise ValueError("tilted_state is defined for qubits")
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    n = lattice.n_sites
    a = n ** (-alpha)
    b = math.sqrt(1.0 - a * a)
    amps = np.zeros(lattice.dim, dtype=np.complex128)
    amps[0] = b
    amps[-1] = a
    return PureState(amps, lattice)


def density_from_pure(psi: PureState) -> DensityState:
    return DensityState(psi.projector(), psi.lattice)


def maximally_mixed(lattice: LatticeConfig) -> DensityState:
    dim = lattice.dim
    return DensityState(np.eye(dim, dtype=np.complex128) / dim, lattice)


def classical_cat_mixture(lattice: LatticeConfig) -> DensityState:
    """Equal incoherent mixture of |0...0><0...0| and |1...1><1...1|."""
    if lattice.local_dim != 2:
        raise ValueError("classical_cat_mixture is defined for qubits")
    dim = lattice.dim
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[0, 0] = 0.5
    mat[-1, -1] = 0.5
    return DensityState(mat, lattice)


def mixture(states, weights=None) -> DensityState:
    """Convex mixture of PureState/DensityState terms."""
    if not states:
        raise ValueError("mixture needs at least one state")
    if weights is None:
        weights = [1.0 / len(states)] * len(states)
    if len(weights) != len(states):
        raise ValueError("one weight per state required")
    lat = states[0].lattice
    mat = np.zeros((lat.dim, lat.dim), dtype=np.complex128)
    for w, s in zip(weights, states):
        term = s.projector() if isinstance(s, PureState) else s.matrix
        mat += w * term
    return DensityState(mat, lat)


def fidelity_pure(a: PureState, b: PureState) -> float:
    """|<a|b>|**2."""
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
