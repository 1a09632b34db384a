"""Wyner common information and its one-shot relatives over Markov extensions.

Classical targets get the full engine: an LP over a candidate set of product
conditionals (exact weight optimization given the candidates), a projected
local-search polish, a hard feasibility repair that mixes in a residual
copy-extension so every returned extension reconstructs the target exactly,
and constructive Caratheodory support reduction.  Quantum separable targets
are searched over reweightings of the provided decomposition and labeled
upper bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .entropies import neyman_pearson_classical, von_neumann
from .errors import ClassicalOnly, InfeasibleTarget, NoFeasibleK, TooLarge
from .mutualinfo import mi
from .solver import SearchConfig, WeightedPointSet, caratheodory_prune, local_search, project_simplex
from .states import (
    DensityMatrix,
    SeparableDecomposition,
    partial_trace,
    tensor,
    trace_distance,
)

RECON_TOL = 1e-6
_SUPP = 1e-12


@dataclass(frozen=True)
class ClassicalExtension:
    """Classical Markov extension: seed q(x) and per-party conditionals."""

    seed: np.ndarray                 # (nx,)
    conds: tuple[np.ndarray, ...]    # per party: (nx, d_i)

    @property
    def n_symbols(self) -> int:
        return self.seed.size

    @property
    def party_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.conds)

    def components(self) -> np.ndarray:
        """(nx, ncells) rows: flattened product conditional per symbol."""
        out = self.conds[0]
        for c in self.conds[1:]:
            out = out[:, :, None] * c[:, None, :]
            out = out.reshape(self.n_symbols, -1)
        return out

    def reconstruction(self) -> np.ndarray:
        return self.seed @ self.components()

    def joint(self) -> np.ndarray:
        """(nx, ncells) joint distribution over (X, cells)."""
        return self.seed[:, None] * self.components()


@dataclass(frozen=True)
class CommonInfoResult:
    value_bits: float
    extension: ClassicalExtension | SeparableDecomposition
    certified: str                 # "exact" | "localSearchUpperBound"
    residual_marginal_error: float
    measure: str


def _flat_target(target) -> tuple[np.ndarray, tuple[int, ...]]:
    t = np.asarray(target, dtype=float)
    if np.any(t < -1e-12):
        raise ClassicalOnly("classical target must be nonnegative")
    return np.maximum(t, 0.0).ravel(), t.shape


def trivial_extension(target: np.ndarray) -> ClassicalExtension:
    """Copy extension: one symbol per support cell, deterministic conditionals."""
    t = np.asarray(target, dtype=float)
    dims = t.shape
    flat = t.ravel()
    cells = np.nonzero(flat > _SUPP)[0]
    seed = flat[cells]
    conds = []
    for axis, d in enumerate(dims):
        c = np.zeros((cells.size, d))
        idx = np.unravel_index(cells, dims)[axis]
        c[np.arange(cells.size), idx] = 1.0
        conds.append(c)
    return ClassicalExtension(seed, tuple(conds))


def product_extension(target: np.ndarray) -> ClassicalExtension:
    t = np.asarray(target, dtype=float)
    total = float(t.sum())
    conds = []
    m = t.ndim
    for axis in range(m):
        marg = t.sum(axis=tuple(i for i in range(m) if i != axis))
        marg = marg / max(marg.sum(), _SUPP)
        conds.append(marg[None, :])
    return ClassicalExtension(np.array([total]), tuple(conds))


def extension_product(a: ClassicalExtension, b: ClassicalExtension) -> ClassicalExtension:
    """Party-wise product extension on two independent copies."""
    seed = np.outer(a.seed, b.seed).ravel()
    conds = []
    for ca, cb in zip(a.conds, b.conds):
        big = (ca[:, None, :, None] * cb[None, :, None, :])
        conds.append(big.reshape(seed.size, -1))
    return ClassicalExtension(seed, tuple(conds))


# -- objectives -----------------------------------------------------------------

def objective_wyner(ext: ClassicalExtension, ref: np.ndarray | None = None) -> float:
    """I(parties : X) of the extension's own joint, in bits."""
    joint = ext.joint()
    recon = joint.sum(axis=0)
    return (_kernels.shannon_bits(recon) + _kernels.shannon_bits(ext.seed)
            - _kernels.shannon_bits(joint.ravel()))


def objective_cmax(ext: ClassicalExtension, ref: np.ndarray | None = None) -> float:
    """One-sided max MI of the extension joint (per-symbol max-ratio form)."""
    joint = ext.joint()
    recon = joint.sum(axis=0) if ref is None else ref
    val = _kernels.i_up_exp_classical(np.ascontiguousarray(joint),
                                      np.ascontiguousarray(recon))
    return math.log2(val) if np.isfinite(val) and val > 0 else math.inf


def objective_c0(ext: ClassicalExtension, ref: np.ndarray | None = None) -> float:
    """-log2 sum_x q(x) * (marginal mass on the support of conditional x)."""
    comps = ext.components()
    recon = ext.reconstruction() if ref is None else ref
    acc = 0.0
    for x in range(ext.n_symbols):
        if ext.seed[x] <= _SUPP:
            continue
        acc += ext.seed[x] * float(np.sum(recon[comps[x] > _SUPP]))
    return -math.log2(acc) if acc > _SUPP else math.inf


def objective_ch(ext: ClassicalExtension, eps: float, ref: np.ndarray | None = None) -> float:
    """Hypothesis-testing MI of the extension joint at type-I budget eps."""
    joint = ext.joint()
    recon = joint.sum(axis=0)
    prod = np.outer(ext.seed, recon).ravel()
    beta, _ = neyman_pearson_classical(joint.ravel(), prod, eps)
    return -math.log2(beta) if beta > 1e-300 else math.inf


# -- candidate grids and the LP weight optimizer ----------------------------------

def _party_candidates(target: np.ndarray, axis: int, grid_points: int) -> np.ndarray:
    d = target.shape[axis]
    cands = [np.eye(d)[i] for i in range(d)]
    m = target.ndim
    marg = target.sum(axis=tuple(i for i in range(m) if i != axis))
    if marg.sum() > _SUPP:
        cands.append(marg / marg.sum())
    other = target.reshape(np.prod([target.shape[i] for i in range(m) if i != axis], dtype=int), -1) \
        if axis == m - 1 else None
    # conditional rows of the target given every joint setting of the others
    moved = np.moveaxis(target, axis, -1).reshape(-1, d)
    for row in moved:
        s = row.sum()
        if s > _SUPP:
            cands.append(row / s)
    if d == 2 and grid_points > 1:
        for a in np.linspace(0.0, 1.0, grid_points):
            cands.append(np.array([a, 1.0 - a]))
    arr = np.unique(np.round(np.array(cands), 12), axis=0)
    return arr


def _tuple_columns(cand_lists: list[np.ndarray], cap: int):
    """All product-conditional tuples (cartesian), capped deterministically."""
    sizes = [c.shape[0] for c in cand_lists]
    total = int(np.prod(sizes))
    if total > cap:
        # thin the largest list until under the cap
        cand_lists = list(cand_lists)
        while int(np.prod([c.shape[0] for c in cand_lists])) > cap:
            k = int(np.argmax([c.shape[0] for c in cand_lists]))
            c = cand_lists[k]
            cand_lists[k] = c[:: 2] if c.shape[0] > 2 else c
            if all(c.shape[0] <= 2 for c in cand_lists):
                break
    combos = list(itertools.product(*[range(c.shape[0]) for c in cand_lists]))
    cols = []
    tuples = []
    for combo in combos:
        vecs = [cand_lists[i][combo[i]] for i in range(len(cand_lists))]
        col = vecs[0]
        for v in vecs[1:]:
            col = np.outer(col, v).ravel()
        cols.append(col)
        tuples.append(vecs)
    return np.array(cols), tuples


def _lp_weights(cols: np.ndarray, cost: np.ndarray, b: np.ndarray):
    keep = np.isfinite(cost)
    if not np.any(keep):
        return None
    res = linprog(cost[keep], A_eq=cols[keep].T, b_eq=b, bounds=(0, None), method="highs")
    if not res.success:
        return None
    w = np.zeros(cols.shape[0])
    w[keep] = res.x
    return w


def _ext_from_weights(weights: np.ndarray, tuples, party_dims, tol: float = 1e-10) -> ClassicalExtension:
    idx = np.nonzero(weights > tol)[0]
    seed = weights[idx]
    conds = []
    for party in range(len(party_dims)):
        conds.append(np.array([tuples[i][party] for i in idx]))
    return ClassicalExtension(seed, tuple(conds))


def repair_extension(ext: ClassicalExtension, target: np.ndarray) -> ClassicalExtension:
    """Exact-feasibility repair: damp the extension and add the residual copy.

    Finds the largest keep-fraction (1-lam) with target - (1-lam) * recon >= 0
    and writes the residual as deterministic copy symbols, so the repaired
    extension reconstructs the target exactly (up to float rounding).
    """
    t = np.asarray(target, dtype=float).ravel()
    recon = ext.reconstruction()
    if recon.sum() <= _SUPP:
        return trivial_extension(np.asarray(target, dtype=float))
    mask = recon > _SUPP
    keep = min(1.0, float(np.min(np.where(mask, t / np.where(mask, recon, 1.0), np.inf))))
    keep = max(0.0, keep)
    residual = np.maximum(t - keep * recon, 0.0)
    if residual.sum() <= 1e-14:
        if keep >= 1.0 - 1e-14:
            return ext
        return ClassicalExtension(ext.seed * keep, ext.conds)
    triv = trivial_extension(residual.reshape(np.asarray(target).shape))
    seed = np.concatenate([ext.seed * keep, triv.seed])
    conds = tuple(np.vstack([ext.conds[i], triv.conds[i]]) for i in range(len(ext.conds)))
    return ClassicalExtension(seed, conds)


def merge_duplicates(ext: ClassicalExtension, tol: float = 1e-9) -> ClassicalExtension:
    comps = np.round(ext.components() / max(tol, 1e-12)) * tol
    seen: dict[bytes, int] = {}
    new_seed = []
    keep_idx = []
    for x in range(ext.n_symbols):
        if ext.seed[x] <= _SUPP:
            continue
        key = comps[x].tobytes()
        if key in seen:
            new_seed[seen[key]] += ext.seed[x]
        else:
            seen[key] = len(new_seed)
            new_seed.append(float(ext.seed[x]))
            keep_idx.append(x)
    conds = tuple(c[keep_idx] for c in ext.conds)
    return ClassicalExtension(np.array(new_seed), conds)


def cardinality_cap(shape: tuple[int, ...]) -> int:
    ncells = int(np.prod(shape))
    return ncells + 4


def _is_perfectly_correlated(t: np.ndarray) -> bool:
    """All mass on the diagonal cells (x, x, ..., x) of equal-dim registers.

    Any exact extension of such a target is a relabeled copy seed, and the
    wyner/cmax/c0 objectives agree on every relabeling, so a feasible
    extension is automatically optimal.
    """
    if t.ndim < 2 or len(set(t.shape)) != 1:
        return False
    mask = np.zeros(t.shape, dtype=bool)
    for x in range(t.shape[0]):
        mask[(x,) * t.ndim] = True
    return bool(np.all(np.abs(t[~mask]) <= 1e-14))


def reduce_cardinality(ext: ClassicalExtension, target: np.ndarray) -> ClassicalExtension:
    """Support reduction preserving the marginal, the conditional-entropy
    averages (joint and per party), and the exponential max-ratio objective."""
    ext = merge_duplicates(ext)
    t_flat, shape = _flat_target(target)
    comps = ext.components()
    recon = ext.reconstruction()
    feats = []
    for x in range(ext.n_symbols):
        row = list(comps[x][:-1])
        row.append(_kernels.shannon_bits(comps[x]))
        for c in ext.conds:
            row.append(_kernels.shannon_bits(c[x]))
        row.append(min(_kernels.max_ratio(comps[x], recon), 1e18))
        feats.append(row)
    pruned = caratheodory_prune(WeightedPointSet(ext.seed, np.array(feats)))
    keep_idx = list(pruned.indices)
    conds = tuple(c[keep_idx] for c in ext.conds)
    return ClassicalExtension(pruned.weights.copy(), conds)


_OBJECTIVES = {
    "wyner": objective_wyner,
    "cmax": objective_cmax,
    "c0": objective_c0,
}


def _lp_cost(measure: str, cols: np.ndarray, tuples, t_flat: np.ndarray, eps: float | None):
    if measure == "wyner":
        return -np.array([sum(_kernels.shannon_bits(v) for v in tup) for tup in tuples])
    if measure == "cmax":
        return np.array([_kernels.max_ratio(col, t_flat) for col in cols])
    if measure == "c0":
        return -np.array([float(np.sum(t_flat[col > _SUPP])) for col in cols])
    if measure == "ch":
        # surrogate: the eps -> 0 projector overlap; exact value evaluated after
        return -np.array([float(np.sum(t_flat[col > _SUPP])) for col in cols])
    raise ValueError(measure)


def _value_of(measure: str, ext: ClassicalExtension, eps: float | None) -> float:
    if measure == "ch":
        return objective_ch(ext, float(eps))
    return _OBJECTIVES[measure](ext)


def _polish(measure: str, ext: ClassicalExtension, target: np.ndarray,
            eps: float | None, cfg: SearchConfig) -> ClassicalExtension:
    """Projected local search over (seed, conditionals) with exact repair."""
    t = np.asarray(target, dtype=float)
    nx = ext.n_symbols
    dims = ext.party_dims
    sizes = [nx] + [nx * d for d in dims]

    def unpack(params) -> ClassicalExtension:
        off = 0
        seed = project_simplex(params[:nx], float(t.sum()))
        off = nx
        conds = []
        for d in dims:
            block = params[off:off + nx * d].reshape(nx, d)
            block = np.array([project_simplex(row, 1.0) for row in block])
            conds.append(block)
            off += nx * d
        return ClassicalExtension(seed, tuple(conds))

    def objective(params):
        cand = repair_extension(unpack(params), t)
        return _value_of(measure, cand, eps)

    def feasible(params):
        return params

    x0 = np.concatenate([ext.seed] + [c.ravel() for c in ext.conds])
    res = local_search(objective, feasible, sum(sizes), cfg, inits=[x0])
    best = repair_extension(unpack(res.params), t)
    if _value_of(measure, best, eps) <= _value_of(measure, repair_extension(ext, t), eps):
        return best
    return repair_extension(ext, t)


def _classical_common_info(target, measure: str, eps: float | None = None,
                           cfg: SearchConfig | None = None,
                           grid_points: int = 41, polish: bool = True) -> CommonInfoResult:
    cfg = cfg or SearchConfig(restarts=2, max_iters=60, seed=11)
    t = np.asarray(target, dtype=float)
    t_flat, shape = _flat_target(t)
    if t_flat.sum() <= _SUPP:
        raise InfeasibleTarget("target has no mass")

    cand_lists = [_party_candidates(t, axis, grid_points) for axis in range(t.ndim)]
    cols, tuples = _tuple_columns(cand_lists, cap=30000)
    cost = _lp_cost(measure, cols, tuples, t_flat, eps)
    weights = _lp_weights(cols, cost, t_flat)

    candidates: list[ClassicalExtension] = [trivial_extension(t), product_extension(t)]
    if weights is not None:
        candidates.append(_ext_from_weights(weights, tuples, shape))

    certified = "localSearchUpperBound"
    binary = all(d == 2 for d in shape)
    if polish and binary and weights is not None and measure in ("wyner", "cmax", "c0"):
        fine_lists = [_party_candidates(t, axis, 2 * grid_points - 1) for axis in range(t.ndim)]
        fcols, ftuples = _tuple_columns(fine_lists, cap=60000)
        fcost = _lp_cost(measure, fcols, ftuples, t_flat, eps)
        fweights = _lp_weights(fcols, fcost, t_flat)
        if fweights is not None:
            candidates.append(_ext_from_weights(fweights, ftuples, shape))
            coarse_val = _value_of(measure, repair_extension(candidates[2], t), eps)
            fine_val = _value_of(measure, repair_extension(candidates[-1], t), eps)
            if abs(coarse_val - fine_val) <= 5e-4:
                certified = "exact"

    best_ext = None
    best_val = math.inf
    for cand in candidates:
        fixed = repair_extension(cand, t)
        val = _value_of(measure, fixed, eps)
        if val < best_val - 1e-12:
            best_val, best_ext = val, fixed
    assert best_ext is not None

    if polish and certified != "exact":
        polished = _polish(measure, best_ext, t, eps, cfg)
        pval = _value_of(measure, polished, eps)
        if pval < best_val - 1e-12:
            best_val, best_ext = pval, polished

    cap = cardinality_cap(shape)
    if best_ext.n_symbols > cap:
        reduced = reduce_cardinality(best_ext, t)
        rval = _value_of(measure, repair_extension(reduced, t), eps)
        if rval <= best_val + 1e-8:
            best_ext = repair_extension(reduced, t)
            best_val = min(best_val, rval)

    resid = float(np.max(np.abs(best_ext.reconstruction() - t_flat)))
    if resid > RECON_TOL:
        raise InfeasibleTarget("no extension reconstructed the target", residual=resid)
    if (measure in ("wyner", "cmax", "c0") and resid <= 1e-12
            and _is_perfectly_correlated(t)):
        certified = "exact"
    return CommonInfoResult(best_val, best_ext, certified, resid, measure)


# -- public operations -------------------------------------------------------------

def wyner_ci(target, cfg: SearchConfig | None = None, grid_points: int = 41) -> CommonInfoResult:
    """Wyner common information (upper bound unless grid-certified)."""
    if isinstance(target, SeparableDecomposition):
        return _quantum_common_info(target, "wyner")
    return _classical_common_info(target, "wyner", cfg=cfg, grid_points=grid_points)


def c_max(target, cfg: SearchConfig | None = None, grid_points: int = 41) -> CommonInfoResult:
    """Max common information over classical-seed extensions."""
    if isinstance(target, SeparableDecomposition):
        return _quantum_common_info(target, "cmax")
    return _classical_common_info(target, "cmax", cfg=cfg, grid_points=grid_points)


def c_tilde_h(target, eps: float, cfg: SearchConfig | None = None) -> CommonInfoResult:
    if isinstance(target, SeparableDecomposition):
        return _quantum_common_info(target, "ch", eps=eps)
    return _classical_common_info(target, "ch", eps=eps, cfg=cfg)


def c_tilde_zero(target, cfg: SearchConfig | None = None) -> CommonInfoResult:
    if isinstance(target, SeparableDecomposition):
        return _quantum_common_info(target, "c0")
    return _classical_common_info(target, "c0", cfg=cfg)


def _quantum_common_info(dec: SeparableDecomposition, measure: str,
                         eps: float | None = None) -> CommonInfoResult:
    """Reweight the provided decomposition by LP; honest upper bound.

    The seed weights are re-optimized over the fixed conditional set subject
    to exact reconstruction of the declared target, then near-duplicate
    symbols merge and the support is pruned.
    """
    target = dec.reconstruct()
    comps = [dec.component(x) for x in range(dec.n_symbols)]
    b = _herm_coords(target.mat)
    cols = np.array([_herm_coords(c) for c in comps])
    if measure == "wyner":
        cost = -np.array([sum(von_neumann(party[x]) for party in dec.party_conditionals)
                          for x in range(dec.n_symbols)])
    elif measure == "cmax":
        cost = np.array([2.0 ** _dm_safe(c, target) for c in comps])
    else:  # c0 / ch surrogate
        cost = -np.array([_proj_overlap(c, target.mat) for c in comps])
    res = linprog(cost, A_eq=cols.T, b_eq=b, bounds=(0, None), method="highs")
    weights = res.x if res.success else np.asarray(dec.probs, dtype=float)
    keep = np.nonzero(weights > 1e-12)[0]
    new_dec = SeparableDecomposition(
        weights[keep],
        tuple(tuple(party[i] for i in keep) for party in dec.party_conditionals))
    value = _quantum_objective(new_dec, target, measure, eps)
    base = _quantum_objective(dec, target, measure, eps)
    if base < value:
        new_dec, value = dec, base
    recon_err = float(np.max(np.abs(new_dec.reconstruct().mat - target.mat)))
    return CommonInfoResult(value, new_dec, "localSearchUpperBound", recon_err, measure)


def _herm_coords(m: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(m.shape[0])
    return np.concatenate([np.real(m[iu]), np.imag(m[iu])])


def _dm_safe(comp: np.ndarray, target: DensityMatrix) -> float:
    from .entropies import d_max_matrix
    return d_max_matrix(comp, target.mat)


def _proj_overlap(comp: np.ndarray, target_mat: np.ndarray) -> float:
    vals, vecs = np.linalg.eigh(0.5 * (comp + comp.conj().T))
    mask = vals > max(float(vals[-1]), 0.0) * 1e-12
    proj = vecs[:, mask] @ vecs[:, mask].conj().T
    return float(np.real(np.trace(proj @ target_mat)))


def _quantum_objective(dec: SeparableDecomposition, target: DensityMatrix,
                       measure: str, eps: float | None) -> float:
    probs = np.asarray(dec.probs, dtype=float)
    if measure == "wyner":
        # I(parties : X) = H(marginal) - sum_x p(x) H(product conditional)
        h_cond = sum(float(p) * sum(von_neumann(party[x]) for party in dec.party_conditionals)
                     for x, p in enumerate(probs) if p > 0)
        return von_neumann(target) - h_cond
    if measure == "cmax":
        acc = 0.0
        for x, p in enumerate(probs):
            if p <= 0:
                continue
            acc += p * 2.0 ** _dm_safe(dec.component(x), target)
        return math.log2(acc) if acc > 0 else math.inf
    if measure == "c0":
        acc = sum(float(p) * _proj_overlap(dec.component(x), target.mat)
                  for x, p in enumerate(probs) if p > 0)
        return -math.log2(acc) if acc > 0 else math.inf
    if measure == "ch":
        # assemble the block-diagonal extension and test against recon (x) seed
        blocks = [p * dec.component(x) for x, p in enumerate(probs)]
        d = blocks[0].shape[0]
        joint = np.zeros((len(blocks) * d, len(blocks) * d), dtype=complex)
        for x, blk in enumerate(blocks):
            joint[x * d:(x + 1) * d, x * d:(x + 1) * d] = blk
        ref = np.kron(np.diag(probs.astype(complex)), target.mat)
        from .entropies import d_hypo
        from .states import make_state
        dims = (len(blocks), d)
        return d_hypo(make_state(joint, dims), make_state(ref, dims), float(eps)).value_bits
    raise ValueError(measure)


# -- Markov structure check ---------------------------------------------------------

def check_markov(rho_axc: DensityMatrix, middle: int = 1, tol: float = 1e-8) -> dict:
    """Verify the short-Markov-chain structure of a classical-middle state.

    Requires the middle register to be classical (block diagonal); true when
    every conditional on the outer registers is a product state within trace
    distance tol.  Reports the conditional mutual information.
    """
    n = len(rho_axc.dims)
    outer = [i for i in range(n) if i != middle]
    dx = rho_axc.dims[middle]
    from .states import make_state, permute_subsystems
    reordered = permute_subsystems(rho_axc, [middle] + outer)
    d_rest = reordered.dim // dx
    mat = reordered.mat
    off_mass = 0.0
    for x in range(dx):
        for y in range(dx):
            if x != y:
                blk = mat[x * d_rest:(x + 1) * d_rest, y * d_rest:(y + 1) * d_rest]
                off_mass = max(off_mass, float(np.max(np.abs(blk), initial=0.0)))
    if off_mass > 1e-8:
        return {"is_markov": False, "cmi_bits": math.nan, "classical_middle": False}
    is_markov = True
    cmi = 0.0
    max_gap = 0.0
    for x in range(dx):
        blk = mat[x * d_rest:(x + 1) * d_rest, x * d_rest:(x + 1) * d_rest]
        p = float(np.real(np.trace(blk)))
        if p <= 1e-14:
            continue
        cond = make_state(blk / p, tuple(rho_axc.dims[i] for i in outer))
        left = partial_trace(cond, [0])
        right = partial_trace(cond, list(range(1, len(cond.dims))))
        gap = trace_distance(cond, tensor(left, right))
        max_gap = max(max_gap, gap)
        if gap > tol:
            is_markov = False
        cmi += p * mi(cond, [0], "vn")
    return {"is_markov": is_markov, "cmi_bits": cmi, "max_product_gap": max_gap,
            "classical_middle": True}


# -- smoothed max common information -------------------------------------------------

def _smooth_ball_point(params: np.ndarray, p_flat: np.ndarray, eps: float) -> np.ndarray:
    """Subnormalized classical state inside the purified-distance ball."""
    deficit = min(max(params[-1], 0.0), eps * eps)
    q = project_simplex(params[:-1], 1.0) * (1.0 - deficit)
    pd = _kernels.purified_distance_classical(q, p_flat)
    if pd <= eps + 1e-12:
        return q
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        mix = mid * q + (1.0 - mid) * p_flat
        if _kernels.purified_distance_classical(mix, p_flat) <= eps:
            lo = mid
        else:
            hi = mid
    return lo * q + (1.0 - lo) * p_flat


def _trim_family(eps: float, n_steps: int = 9) -> list[tuple[str, float]]:
    """Deterministic smoothing candidates: per-row peak mass moved or shaved.

    The peak-ratio cell of each row loses a gamma-fraction of its mass
    (either redistributed along the marginal or dropped); gamma ranges over
    [0, eps^2], so the family grows with eps and the best accepted candidate
    is automatically nonincreasing in eps.
    """
    out = []
    for gamma in np.linspace(0.0, eps * eps, n_steps):
        out.append(("move", gamma))
        out.append(("shave", gamma))
    return out


def _apply_trim(joint: np.ndarray, mode: str, gamma: float) -> np.ndarray:
    sig = joint.copy()
    recon = joint.sum(axis=0)
    for x in range(joint.shape[0]):
        row = sig[x]
        if row.sum() <= _SUPP:
            continue
        safe = np.where(recon > _SUPP, recon, np.inf)
        c_star = int(np.argmax(np.where(row > _SUPP, row / safe, -np.inf)))
        moved = gamma * row[c_star]
        row[c_star] -= moved
        if mode == "move":
            rest = (recon > _SUPP)
            rest[c_star] = False
            w = np.where(rest, recon, 0.0)
            if w.sum() > _SUPP:
                row += moved * w / w.sum()
            else:
                row[c_star] += moved
    return sig


def c_max_smoothed(target, eps: float, variant: str = "ball-first",
                   cfg: SearchConfig | None = None,
                   warm: "CommonInfoResult | None" = None) -> CommonInfoResult:
    """Smoothed max common information, both smoothing orders.

    ball-first searches (nearby subnormalized distribution, extension);
    extension-first searches (extension, nearby extension-state).  Both are
    non-certified upper bounds, nonincreasing in eps (a deterministic trim
    family backs the monotonicity), and collapse to c_max at eps = 0.
    """
    if isinstance(target, SeparableDecomposition):
        raise ClassicalOnly("smoothing is restricted to fully classical targets")
    if variant not in ("ball-first", "extension-first"):
        raise ValueError(variant)
    t = np.asarray(target, dtype=float)
    t_flat, shape = _flat_target(t)
    base = warm if warm is not None and warm.measure == "cmax" else c_max(t, cfg=cfg)
    if eps == 0.0:
        return base
    cfg = cfg or SearchConfig(restarts=3, max_iters=50, seed=23)

    if variant == "ball-first":
        lp_cfg = SearchConfig(restarts=1, max_iters=0, seed=0)

        def inner_value(q_flat: np.ndarray) -> float:
            if q_flat.sum() <= _SUPP:
                return 0.0
            try:
                return _classical_common_info(q_flat.reshape(shape), "cmax",
                                              cfg=lp_cfg, grid_points=9,
                                              polish=False).value_bits
            except InfeasibleTarget:
                return math.inf

        value = base.value_bits
        # deterministic candidates: interpolations toward decorrelated points
        prod = product_extension(t).reconstruction()
        unif = np.full(t_flat.size, t_flat.sum() / t_flat.size)
        for mode, gamma in _trim_family(eps):
            cand = _apply_trim(t_flat.reshape(t_flat.size // shape[-1], shape[-1]),
                               mode, gamma).ravel()
            if _kernels.purified_distance_classical(cand, t_flat) <= eps + 1e-12:
                value = min(value, inner_value(cand))
        for anchor in (prod, unif):
            for gamma in np.linspace(0.0, 1.0, 9):
                cand = (1.0 - gamma) * t_flat + gamma * anchor
                if _kernels.purified_distance_classical(cand, t_flat) <= eps + 1e-12:
                    value = min(value, inner_value(cand))

        def objective(params):
            return inner_value(_smooth_ball_point(params, t_flat, eps))

        def feasible(params):
            out = params.copy()
            out[:-1] = project_simplex(params[:-1], 1.0)
            out[-1] = min(max(params[-1], 0.0), eps * eps)
            return out

        n = t_flat.size
        inits = [np.concatenate([t_flat, [0.0]]),
                 np.concatenate([t_flat, [eps * eps]]),
                 np.concatenate([np.full(n, 1.0 / n), [eps * eps]])]
        res = local_search(objective, feasible, n + 1, cfg, inits=inits)
        value = min(value, res.value)
        return CommonInfoResult(value, base.extension, "localSearchUpperBound",
                                base.residual_marginal_error, "cmax-smooth-ball")

    # extension-first: smooth the assembled extension joint
    ext = base.extension
    joint0 = ext.joint()
    flat0 = joint0.ravel()
    nx = ext.n_symbols
    ncells = t_flat.size

    def i_up_of(sigma_flat: np.ndarray) -> float:
        sig = sigma_flat.reshape(nx, ncells)
        recon = sig.sum(axis=0)
        val = _kernels.i_up_exp_classical(np.ascontiguousarray(sig),
                                          np.ascontiguousarray(recon))
        return math.log2(val) if np.isfinite(val) and val > 0 else math.inf

    value = base.value_bits
    for mode, gamma in _trim_family(eps):
        cand = _apply_trim(joint0, mode, gamma)
        if _kernels.purified_distance_classical(cand.ravel(), flat0) <= eps + 1e-12:
            value = min(value, i_up_of(cand.ravel()))

    def objective(params):
        sigma = _smooth_ball_point(params, flat0, eps)
        return i_up_of(sigma)

    def feasible(params):
        out = params.copy()
        out[:-1] = project_simplex(params[:-1], 1.0)
        out[-1] = min(max(params[-1], 0.0), eps * eps)
        return out

    inits = [np.concatenate([flat0, [0.0]]),
             np.concatenate([flat0, [eps * eps]])]
    res = local_search(objective, feasible, flat0.size + 1, cfg, inits=inits)
    value = min(value, res.value)
    return CommonInfoResult(value, ext, "localSearchUpperBound",
                            base.residual_marginal_error, "cmax-smooth-ext")


# -- correlation of formation --------------------------------------------------------

def formation_search(target, eps: float, uniform: bool = False,
                     cfg: SearchConfig | None = None) -> tuple[float, ClassicalExtension]:
    """Smallest seed support size k whose (uniform if flagged) extension lands
    within trace distance eps of the target; returns (log2 k, witness)."""
    t = np.asarray(target, dtype=float)
    t_flat, shape = _flat_target(t)
    if not (0.0 < eps < 1.0):
        raise NoFeasibleK("eps must lie in (0,1)", eps=eps)
    cfg = cfg or SearchConfig(restarts=16, max_iters=80, seed=5)
    cap = cardinality_cap(shape) + 4
    dims = shape
    cells = np.argsort(-t_flat)

    for k in range(1, cap + 1):
        best_td = math.inf
        best_ext = None

        def unpack(params, k=k):
            if uniform:
                seed = np.full(k, 1.0 / k)
                off = 0
            else:
                seed = project_simplex(params[:k], 1.0)
                off = k
            conds = []
            for d in dims:
                block = params[off:off + k * d].reshape(k, d)
                block = np.array([project_simplex(row, 1.0) for row in block])
                conds.append(block)
                off += k * d
            return ClassicalExtension(seed, tuple(conds))

        def objective(params):
            ext = unpack(params)
            return _kernels.trace_distance_classical(ext.reconstruction(), t_flat)

        n_par = (0 if uniform else k) + k * sum(dims)
        inits = [_formation_init(t, k, cells, uniform)]
        res = local_search(objective, lambda x: x, n_par, cfg, inits=inits)
        ext = unpack(res.params)
        td = res.value
        if td < best_td:
            best_td, best_ext = td, ext
        if best_td <= eps + 1e-12:
            return math.log2(k), best_ext
    raise NoFeasibleK("no extension within the cardinality cap reached the target",
                      cap=cap, eps=eps)


def _formation_init(t: np.ndarray, k: int, cells_sorted: np.ndarray, uniform: bool) -> np.ndarray:
    """Deterministic start: top-k cells as copy symbols."""
    dims = t.shape
    flat = t.ravel()
    take = cells_sorted[:k]
    seed = flat[take]
    seed = seed / max(seed.sum(), _SUPP)
    conds = []
    for axis, d in enumerate(dims):
        c = np.full((k, d), 1e-3)
        idx = np.unravel_index(take, dims)[axis]
        c[np.arange(k), idx] = 1.0
        c = c / c.sum(axis=1, keepdims=True)
        conds.append(c)
    parts = ([] if uniform else [seed]) + [c.ravel() for c in conds]
    return np.concatenate(parts)


def multi_party_monotonicity(target, keep_parties: int,
                             cfg: SearchConfig | None = None) -> dict:
    """Wyner CI of the full m-party target vs the traced-down k-party target."""
    t = np.asarray(target, dtype=float)
    m = t.ndim
    if not (1 <= keep_parties < m):
        raise ClassicalOnly("keep_parties must be in [1, m)")
    reduced = t.sum(axis=tuple(range(keep_parties, m)))
    full_res = wyner_ci(t, cfg=cfg)
    red_res = wyner_ci(reduced, cfg=cfg)
    return {
        "full_bits": full_res.value_bits,
        "reduced_bits": red_res.value_bits,
        "holds": full_res.value_bits >= red_res.value_bits - 2e-3,
        "full": full_res,
        "reduced": red_res,
    }


# -- strong typicality restriction ---------------------------------------------------

def typical_extension(ext: ClassicalExtension, n: int, delta: float,
                      max_sequences: int = 10 ** 6) -> tuple[ClassicalExtension, float]:
    """Restrict the n-fold extension to strongly typical seed sequences and
    conditionally typical outputs; returns (restricted extension, exact TD).

    Seed typicality: |N(x)/n - p(x)| <= delta for every x (zero count where
    p(x) = 0).  Conditional typicality per party given x^n: |N(a, x) -
    q(a|x) N(x)| <= delta * n for every (a, x).
    """
    nx = ext.n_symbols
    if nx ** n > max_sequences:
        raise TooLarge("n-fold seed alphabet too large", size=nx ** n)
    p = ext.seed / max(ext.seed.sum(), _SUPP)
    dims = ext.party_dims

    seqs = list(itertools.product(range(nx), repeat=n))
    typical = []
    for s in seqs:
        counts = np.bincount(s, minlength=nx)
        ok = True
        for x in range(nx):
            if p[x] <= _SUPP and counts[x] > 0:
                ok = False
                break
            if abs(counts[x] / n - p[x]) > delta + 1e-12:
                ok = False
                break
        if ok:
            typical.append(s)
    if not typical:
        raise TooLarge("empty typical set; increase delta", delta=delta)

    # restricted n-fold extension, one symbol per typical sequence
    probs_seq = {s: float(np.prod([p[x] for x in s])) for s in seqs}
    z = sum(probs_seq[s] for s in typical)
    seed_new = np.array([probs_seq[s] / z for s in typical])

    conds_new = []
    td_cond: dict[tuple, float] = {}
    per_seq_cond: list[list[np.ndarray]] = []
    for s in typical:
        per_seq_cond.append([_typical_conditional(ext.conds[i], s, delta, dims[i])
                             for i in range(len(dims))])
    for i in range(len(dims)):
        rows = []
        for j, s in enumerate(typical):
            rows.append(per_seq_cond[j][i])
        conds_new.append(np.array(rows))
    new_ext = ClassicalExtension(seed_new, tuple(conds_new))

    # exact trace distance between the joint extension states, blockwise over x^n
    td = 0.0
    typ_index = {s: j for j, s in enumerate(typical)}
    for s in seqs:
        ps = probs_seq[s]
        if ps <= 0.0:
            continue
        orig = _product_rows([ext.conds[i][list(s)] for i in range(len(dims))])
        if s in typ_index:
            j = typ_index[s]
            newc = _product_rows([[per_seq_cond[j][i]] for i in range(len(dims))],
                                 already_joined=True)
            td += 0.5 * float(np.sum(np.abs(seed_new[j] * newc - ps * orig)))
        else:
            td += 0.5 * ps
    return new_ext, td


def _typical_conditional(cond: np.ndarray, seq, delta: float, d: int) -> np.ndarray:
    """Product conditional over the sequence, restricted to typical outputs."""
    n = len(seq)
    counts = np.bincount(seq, minlength=cond.shape[0])
    full = _product_rows([cond[list(seq)]])
    keep = np.zeros(full.size, dtype=bool)
    for flat_idx in range(full.size):
        if full[flat_idx] <= 0.0:
            continue
        outs = np.unravel_index(flat_idx, (d,) * n)
        joint_counts = np.zeros((d, cond.shape[0]))
        for t_pos in range(n):
            joint_counts[outs[t_pos], seq[t_pos]] += 1
        ok = True
        for x in range(cond.shape[0]):
            if counts[x] == 0:
                continue
            for a in range(d):
                if abs(joint_counts[a, x] - cond[x, a] * counts[x]) > delta * n + 1e-12:
                    ok = False
                    break
            if not ok:
                break
        keep[flat_idx] = ok
    restricted = np.where(keep, full, 0.0)
    z = restricted.sum()
    if z <= 0.0:
        return full
    return restricted / z


def _product_rows(groups, already_joined: bool = False) -> np.ndarray:
    """Flattened tensor product; groups are lists/arrays of per-copy rows."""
    if already_joined:
        out = np.array([1.0])
        for g in groups:
            out = np.outer(out, g[0]).ravel()
        return out
    out = np.array([1.0])
    for rows in groups:
        for row in rows:
            out = np.outer(out, row).ravel()
    return out
