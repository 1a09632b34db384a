"""Dense finite-dimensional state algebra.

Everything downstream (divergences, common informations, covering, the
embezzlement module) consumes these types and operations.  All matrices are
dense complex128, all distances and overlaps follow the root-fidelity
convention (pure-state fidelity = |<psi|phi>|), and subnormalized states are
first-class.  Logarithms at the API surface are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadCut,
    BadSubsystemIndex,
    DimMismatch,
    KrausNotTP,
    NotHermitian,
    NotPSD,
    TraceOutOfRange,
)

HERM_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
# Eigenvalues below SUPPORT_CUTOFF * lambda_max count as zero for support
# projectors and pseudo-inverses; keeps D_max and the Petz order-0 quantity
# stable on rank-deficient states.
SUPPORT_CUTOFF = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def eigh_sorted(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition, eigenvalues ascending."""
    h = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(h)
    return vals, vecs


def support_mask(eigvals: np.ndarray) -> np.ndarray:
    top = float(np.max(eigvals, initial=0.0))
    return eigvals > max(top, 0.0) * SUPPORT_CUTOFF


@dataclass(frozen=True)
class DensityMatrix:
    """Possibly subnormalized PSD operator with a subsystem dimension list."""

    dims: tuple[int, ...]
    mat: np.ndarray
    normalized: bool

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.mat)))

    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        return eigh_sorted(self.mat)

    def is_classical(self, tol: float = 1e-10) -> bool:
        off = self.mat - np.diag(np.diag(self.mat))
        return float(np.max(np.abs(off), initial=0.0)) <= tol

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.mat)).copy()


@dataclass(frozen=True)
class PureState:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def density(self) -> DensityMatrix:
        m = np.outer(self.amplitudes, self.amplitudes.conj())
        return make_state(m, self.dims)


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Nonincreasing nonnegative amplitudes with unit squared sum."""

    amplitudes: np.ndarray

    @property
    def rank(self) -> int:
        top = float(self.amplitudes[0]) if self.amplitudes.size else 0.0
        return int(np.sum(self.amplitudes > top * 1e-9))

    def probs(self) -> np.ndarray:
        return self.amplitudes ** 2


@dataclass(frozen=True)
class CQState:
    """Classical register with one conditional state per symbol."""

    probs: np.ndarray
    conditionals: tuple[DensityMatrix, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.size != len(self.conditionals):
            raise DimMismatch("one conditional per symbol required",
                              symbols=int(p.size), conditionals=len(self.conditionals))
        if np.any(p < -1e-12):
            raise NotPSD("negative symbol probability", value=float(p.min()))
        if p.sum() > 1.0 + 1e-10:
            raise TraceOutOfRange("symbol probabilities exceed 1", sum=float(p.sum()))
        dims = self.conditionals[0].dims
        if any(c.dims != dims for c in self.conditionals):
            raise DimMismatch("conditionals must share dims")

    @property
    def n_symbols(self) -> int:
        return len(self.probs)

    def average(self) -> DensityMatrix:
        acc = sum(p * c.mat for p, c in zip(self.probs, self.conditionals))
        return make_state(acc, self.conditionals[0].dims)

    def assemble(self, classical_first: bool = True) -> DensityMatrix:
        """Block-diagonal joint state; classical register leading by default."""
        nx = self.n_symbols
        d = self.conditionals[0].dim
        big = np.zeros((nx * d, nx * d), dtype=complex)
        for x, (p, c) in enumerate(zip(self.probs, self.conditionals)):
            big[x * d:(x + 1) * d, x * d:(x + 1) * d] = p * c.mat
        dims = (nx,) + self.conditionals[0].dims
        dm = make_state(big, dims)
        if classical_first:
            return dm
        order = list(range(1, len(dims))) + [0]
        return permute_subsystems(dm, order)


@dataclass(frozen=True)
class SeparableDecomposition:
    """Explicit mixture of per-party product states; the separability witness."""

    probs: np.ndarray
    party_conditionals: tuple[tuple[DensityMatrix, ...], ...] = field(default=())

    @property
    def n_parties(self) -> int:
        return len(self.party_conditionals)

    @property
    def n_symbols(self) -> int:
        return len(self.probs)

    def component(self, x: int) -> np.ndarray:
        m = self.party_conditionals[0][x].mat
        for party in self.party_conditionals[1:]:
            m = np.kron(m, party[x].mat)
        return m

    def reconstruct(self) -> DensityMatrix:
        dims = tuple(d for party in self.party_conditionals for d in party[0].dims)
        acc = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
        for x, p in enumerate(self.probs):
            acc += p * self.component(x)
        return make_state(acc, dims)


def make_separable(probs, party_conditionals) -> SeparableDecomposition:
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < -1e-12):
        raise NotPSD("negative mixture weight", weight=float(probs.min()))
    parties = tuple(tuple(party) for party in party_conditionals)
    for party in parties:
        if len(party) != len(probs):
            raise DimMismatch("one conditional per symbol per party required")
    return SeparableDecomposition(_freeze(np.maximum(probs, 0.0)), parties)


def make_state(matrix, dims, *, expect_normalized: bool | None = None) -> DensityMatrix:
    """Validate and build a DensityMatrix; symmetrizes within tolerance only."""
    mat = np.asarray(matrix, dtype=complex)
    dims = tuple(int(d) for d in (dims if np.iterable(dims) else [dims]))
    if any(d <= 0 for d in dims):
        raise DimMismatch("subsystem dimensions must be positive", dims=list(dims))
    side = int(np.prod(dims))
    if mat.shape != (side, side):
        raise DimMismatch("matrix side must equal the product of dims",
                          side=mat.shape[0] if mat.ndim == 2 else None, dims=list(dims))
    herm_gap = float(np.max(np.abs(mat - mat.conj().T), initial=0.0))
    if herm_gap > HERM_TOL:
        raise NotHermitian("matrix is not Hermitian within tolerance", gap=herm_gap)
    mat = 0.5 * (mat + mat.conj().T)
    vals = np.linalg.eigvalsh(mat)
    if vals[0] < -PSD_TOL:
        raise NotPSD("negative eigenvalue beyond tolerance", eigenvalue=float(vals[0]))
    tr = float(np.real(np.trace(mat)))
    if tr > 1.0 + TRACE_TOL or tr < -TRACE_TOL:
        raise TraceOutOfRange("trace must lie in [0, 1]", trace=tr)
    normalized = abs(tr - 1.0) <= TRACE_TOL
    if expect_normalized and not normalized:
        raise TraceOutOfRange("normalized state required", trace=tr)
    return DensityMatrix(dims, _freeze(mat), normalized)


def make_pure(amplitudes, dims) -> PureState:
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    dims = tuple(int(d) for d in dims)
    if amps.size != int(np.prod(dims)):
        raise DimMismatch("amplitude length must equal the product of dims")
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > 1e-10:
        raise TraceOutOfRange("amplitudes must be unit norm", norm=norm)
    return PureState(dims, _freeze(amps))


def make_schmidt(amplitudes) -> SchmidtSpectrum:
    amps = np.asarray(amplitudes, dtype=float).ravel()
    if np.any(amps < -1e-12):
        raise NotPSD("Schmidt amplitudes must be nonnegative")
    amps = np.sort(np.maximum(amps, 0.0))[::-1]
    ssum = float(np.sum(amps ** 2))
    if abs(ssum - 1.0) > 1e-9:
        raise TraceOutOfRange("squared Schmidt amplitudes must sum to 1", sum=ssum)
    return SchmidtSpectrum(_freeze(amps))


def classical_state(probs, dims=None) -> DensityMatrix:
    """Diagonal state from a (possibly multi-register) probability array."""
    p = np.asarray(probs, dtype=float)
    if dims is None:
        dims = p.shape if p.ndim > 1 else (p.size,)
    return make_state(np.diag(p.ravel().astype(complex)), dims)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return make_state(np.kron(a.mat, b.mat), a.dims + b.dims)


def permute_subsystems(rho: DensityMatrix, order) -> DensityMatrix:
    order = list(order)
    n = len(rho.dims)
    if sorted(order) != list(range(n)):
        raise BadSubsystemIndex("order must be a permutation of subsystem indices")
    dims = rho.dims
    t = rho.mat.reshape(dims + dims)
    perm = order + [n + i for i in order]
    new_dims = tuple(dims[i] for i in order)
    side = int(np.prod(new_dims))
    permuted = np.transpose(t, perm).reshape(side, side)
    return make_state(permuted, new_dims)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    keep = sorted(set(int(k) for k in (keep if np.iterable(keep) else [keep])))
    n = len(rho.dims)
    if any(k < 0 or k >= n for k in keep):
        raise BadSubsystemIndex("keep indices out of range", keep=keep, n_subsystems=n)
    dims = rho.dims
    t = rho.mat.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    for off, i in enumerate(traced):
        ax = i - sum(1 for j in traced[:off] if j < i)
        t = np.trace(t, axis1=ax, axis2=ax + (n - off))
    new_dims = tuple(dims[k] for k in keep) or (1,)
    side = int(np.prod(new_dims))
    return make_state(np.asarray(t).reshape(side, side), new_dims)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dims != b.dims:
        raise DimMismatch("trace distance needs equal dims", a=list(a.dims), b=list(b.dims))
    return 0.5 * one_norm(a.mat - b.mat)


def one_norm(mat: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    return float(np.sum(np.abs(vals)))


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Root fidelity ||sqrt(a) sqrt(b)||_1; pure-state overlap convention."""
    if a.dims != b.dims:
        raise DimMismatch("fidelity needs equal dims")
    va, ua = a.eig()
    sq = (ua * np.sqrt(np.maximum(va, 0.0))) @ ua.conj().T
    inner = sq @ b.mat @ sq
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.maximum(vals, 0.0))))


def fidelity_squared(a: DensityMatrix, b: DensityMatrix) -> float:
    return fidelity(a, b) ** 2


def generalized_fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    f = fidelity(a, b)
    da = max(0.0, 1.0 - a.trace)
    db = max(0.0, 1.0 - b.trace)
    if da < 1e-12:
        da = 0.0
    if db < 1e-12:
        db = 0.0
    return min(f + math.sqrt(da * db), 1.0)


def purified_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    fstar = generalized_fidelity(a, b)
    return math.sqrt(max(0.0, 1.0 - fstar * fstar))


def schmidt(psi: PureState, cut) -> SchmidtSpectrum:
    """Schmidt amplitudes across the bipartition (cut | complement)."""
    cut = sorted(set(int(k) for k in (cut if np.iterable(cut) else [cut])))
    n = len(psi.dims)
    if not cut or any(k < 0 or k >= n for k in cut) or len(cut) == n:
        raise BadCut("cut must be a proper nonempty subset of subsystems", cut=cut)
    rest = [i for i in range(n) if i not in cut]
    t = psi.amplitudes.reshape(psi.dims)
    t = np.transpose(t, cut + rest)
    d_left = int(np.prod([psi.dims[i] for i in cut]))
    svals = np.linalg.svd(t.reshape(d_left, -1), compute_uv=False)
    ssum = float(np.sum(svals ** 2))
    return make_schmidt(svals / math.sqrt(ssum))


def purify(rho: DensityMatrix) -> PureState:
    """Canonical eigen-purification on dims + (rank,)."""
    vals, vecs = rho.eig()
    mask = support_mask(vals)
    vals, vecs = vals[mask], vecs[:, mask]
    rank = vals.size
    amps = np.zeros(rho.dim * rank, dtype=complex)
    for i in range(rank):
        amps += math.sqrt(max(vals[i], 0.0)) * np.kron(vecs[:, i], _basis(rank, i))
    amps /= np.linalg.norm(amps)
    return make_pure(amps, rho.dims + (rank,))


def _basis(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def pinch(rho: DensityMatrix, basis_of: DensityMatrix) -> DensityMatrix:
    """Dephase rho into the eigenbasis of basis_of (degeneracies grouped)."""
    if rho.dims != basis_of.dims:
        raise DimMismatch("pinch needs equal dims")
    vals, vecs = basis_of.eig()
    scale = max(float(np.max(np.abs(vals), initial=0.0)), 1.0)
    groups: list[list[int]] = []
    for i in range(vals.size):
        if groups and abs(vals[i] - vals[groups[-1][-1]]) <= 1e-10 * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = np.zeros_like(rho.mat)
    for g in groups:
        proj = vecs[:, g] @ vecs[:, g].conj().T
        out += proj @ rho.mat @ proj
    return make_state(out, rho.dims)


def apply_channel(rho: DensityMatrix, kraus, *, allow_trace_nonincreasing: bool = False) -> DensityMatrix:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d_in = rho.dim
    total = sum(k.conj().T @ k for k in ks)
    gap = total - np.eye(d_in)
    gap_norm = float(np.max(np.abs(gap)))
    if gap_norm > 1e-9:
        if not (allow_trace_nonincreasing and np.linalg.eigvalsh(gap)[-1] <= 1e-9):
            raise KrausNotTP("Kraus operators are not trace preserving", gap=gap_norm)
    out = sum(k @ rho.mat @ k.conj().T for k in ks)
    d_out = ks[0].shape[0]
    return make_state(out, (d_out,))


def apply_channel_local(rho: DensityMatrix, kraus, subsystem: int) -> DensityMatrix:
    """Apply a channel to one subsystem, identities elsewhere."""
    n = len(rho.dims)
    if subsystem < 0 or subsystem >= n:
        raise BadSubsystemIndex("subsystem out of range", subsystem=subsystem)
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d_in = rho.dims[subsystem]
    if ks[0].shape[1] != d_in:
        raise DimMismatch("Kraus input dim must match subsystem dim")
    total = sum(k.conj().T @ k for k in ks)
    if float(np.max(np.abs(total - np.eye(d_in)))) > 1e-9:
        raise KrausNotTP("Kraus operators are not trace preserving")
    d_out = ks[0].shape[0]
    left = int(np.prod(rho.dims[:subsystem])) if subsystem > 0 else 1
    right = int(np.prod(rho.dims[subsystem + 1:])) if subsystem < n - 1 else 1
    out_dims = rho.dims[:subsystem] + (d_out,) + rho.dims[subsystem + 1:]
    acc = np.zeros((left * d_out * right,) * 2, dtype=complex)
    for k in ks:
        big = np.kron(np.kron(np.eye(left), k), np.eye(right))
        acc += big @ rho.mat @ big.conj().T
    return make_state(acc, out_dims)


def perfect_correlation(p) -> DensityMatrix:
    """Two-register diagonal state with mass p(x) on (x, x)."""
    p = np.asarray(p, dtype=float).ravel()
    n = p.size
    joint = np.zeros((n, n))
    joint[np.arange(n), np.arange(n)] = p
    return classical_state(joint, (n, n))


def distinct_eigenvalue_count(rho: DensityMatrix, *, include_zero: bool = False,
                              rel_tol: float = 1e-9) -> int:
    """Number of distinct eigenvalues, grouped within relative tolerance.

    Zero eigenvalues (below the support cutoff) are excluded by default; the
    pinching constant only sees the support of the averaged state.
    """
    vals = np.sort(np.linalg.eigvalsh(rho.mat))
    top = max(float(vals[-1]), 0.0)
    kept = vals[vals > top * SUPPORT_CUTOFF] if not include_zero else vals
    if kept.size == 0:
        return 0
    count = 1
    for i in range(1, kept.size):
        if kept[i] - kept[i - 1] > rel_tol * max(top, 1e-300):
            count += 1
    if include_zero and np.any(vals <= top * SUPPORT_CUTOFF):
        count += 1
    return count


# -- random sampling helpers (seeded; used by searches and tests) ---------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q @ np.diag(phases.conj())


def random_density(dims, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    dims = tuple(int(d) for d in dims)
    d = int(np.prod(dims))
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return make_state(m / np.real(np.trace(m)), dims)


def random_pure(dims, rng: np.random.Generator) -> PureState:
    dims = tuple(int(d) for d in dims)
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return make_pure(v / np.linalg.norm(v), dims)


def random_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random CPTP map via a Stinespring isometry."""
    g = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal((d_out * n_kraus, d_in))
    q, _ = np.linalg.qr(g)
    v = q[:, :d_in]
    return [v[i * d_out:(i + 1) * d_out, :] for i in range(n_kraus)]
