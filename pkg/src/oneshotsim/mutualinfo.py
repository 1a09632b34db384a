"""One-shot mutual informations and their classical-register closed forms.

Flavors: vn (relative-entropy), upup (max divergence against the product of
marginals), up (one-sided optimization, solved as a domination program),
down (two-sided, alternating minimization, reported as a non-certified upper
bound), hypo (hypothesis-testing).  Classical smoothing lives here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .entropies import (
    d_hypo,
    d_info_spectrum,
    d_max,
    rel_entropy,
    renyi,
)
from .errors import AlphaOutOfRange, ClassicalOnly, EpsilonOutOfRange
from .solver import DominationSDP, SearchConfig, local_search, project_simplex, solve_domination
from .states import (
    CQState,
    DensityMatrix,
    eigh_sorted,
    partial_trace,
    permute_subsystems,
    support_mask,
    tensor,
)

FLAVORS = ("vn", "upup", "up", "down", "hypo")


@dataclass(frozen=True)
class MIResult:
    value_bits: float
    flavor: str
    certified: bool = True
    witness: np.ndarray | None = None


@dataclass(frozen=True)
class MIRequest:
    state: DensityMatrix
    cut: tuple[int, ...]
    flavor: str
    epsilon: float | None = None
    alpha: float | None = None
    sdp_tol: float = 1e-8


def _split_marginals(rho: DensityMatrix, cut):
    cut = sorted(set(int(k) for k in (cut if np.iterable(cut) else [cut])))
    n = len(rho.dims)
    rest = [i for i in range(n) if i not in cut]
    reordered = permute_subsystems(rho, cut + rest)
    da = int(np.prod([rho.dims[i] for i in cut]))
    db = int(np.prod([rho.dims[i] for i in rest]))
    rho_a = partial_trace(rho, cut)
    rho_b = partial_trace(rho, rest)
    return reordered, rho_a, rho_b, da, db


def mutual_info(req: MIRequest) -> MIResult:
    rho, rho_a, rho_b, da, db = _split_marginals(req.state, req.cut)
    if req.flavor == "vn":
        return MIResult(rel_entropy(rho, tensor(rho_a, rho_b)), "vn")
    if req.flavor == "upup":
        res = d_max(rho, tensor(rho_a, rho_b))
        return MIResult(res.value_bits, "upup")
    if req.flavor == "up":
        return MIResult(_mi_up(rho, rho_a, da, db, tol=req.sdp_tol), "up")
    if req.flavor == "down":
        return MIResult(_mi_down(rho, rho_a, rho_b, da, db), "down", certified=False)
    if req.flavor == "hypo":
        if req.epsilon is None:
            raise EpsilonOutOfRange("hypo flavor requires epsilon")
        res = d_hypo(rho, tensor(rho_a, rho_b), req.epsilon)
        return MIResult(res.value_bits, "hypo", witness=res.witness)
    raise ValueError(f"unknown flavor {req.flavor!r}")


def mi(state: DensityMatrix, cut, flavor: str, epsilon: float | None = None) -> float:
    return mutual_info(MIRequest(state, tuple(np.atleast_1d(cut)), flavor, epsilon)).value_bits


def _conjugate_by_marginal(rho: DensityMatrix, rho_a: DensityMatrix, da: int, db: int):
    """(rho_A^-1/2 (x) 1) rho (rho_A^-1/2 (x) 1) restricted to supp(rho_A)."""
    vals, vecs = rho_a.eig()
    mask = support_mask(vals)
    v = vecs[:, mask]
    isq = v * (np.maximum(vals[mask], 0.0) ** -0.5)
    # restrict the A factor to its support while conjugating
    lift = np.kron(isq.conj().T, np.eye(db))  # maps A (x) B -> supp(A) (x) B
    x = lift @ rho.mat @ lift.conj().T
    return 0.5 * (x + x.conj().T), int(np.sum(mask))


def _mi_up(rho: DensityMatrix, rho_a: DensityMatrix, da: int, db: int, tol: float = 1e-8) -> float:
    if rho.is_classical():
        joint = np.real(np.diag(rho.mat)).reshape(da, db)
        val = _kernels.i_up_exp_classical(np.ascontiguousarray(joint.T),
                                          np.ascontiguousarray(joint.sum(axis=1)))
        return math.log2(val) if np.isfinite(val) else math.inf
    x, ra = _conjugate_by_marginal(rho, rho_a, da, db)
    res = solve_domination(DominationSDP(x, ra, db), tol=tol)
    return math.log2(res.opt_value) if res.opt_value > 0 else -math.inf


def _mi_down(rho: DensityMatrix, rho_a: DensityMatrix, rho_b: DensityMatrix,
             da: int, db: int, restarts: int = 8, sweeps: int = 6, seed: int = 0) -> float:
    """Alternating domination solves over the two product factors.

    Sweeps run at a loose tolerance; the winning restart is refined once.
    Restarts whose barrier stalls are skipped (the value is an upper bound).
    """
    from .errors import NotConverged

    best = math.inf
    best_tau = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        if r == 0:
            tau = rho_a.mat.copy()
        else:
            g = rng.standard_normal((da, da)) + 1j * rng.standard_normal((da, da))
            m = g @ g.conj().T + 1e-3 * np.eye(da)
            tau = m / np.real(np.trace(m))
        val = math.inf
        try:
            for _s in range(sweeps):
                sig, _lam1 = _min_over_side(rho.mat, tau, da, db, side="b", tol=3e-7)
                tau, lam2 = _min_over_side(rho.mat, sig, da, db, side="a", tol=3e-7)
                new_val = math.log2(lam2) if lam2 > 0 else -math.inf
                if np.isfinite(val) and abs(new_val - val) < 1e-9:
                    val = new_val
                    break
                val = new_val
        except NotConverged:
            continue
        if val < best:
            best, best_tau = val, tau
    if best_tau is not None:
        try:
            sig, _ = _min_over_side(rho.mat, best_tau, da, db, side="b", tol=1e-8)
            _, lam2 = _min_over_side(rho.mat, sig, da, db, side="a", tol=1e-8)
            best = min(best, math.log2(lam2) if lam2 > 0 else -math.inf)
        except NotConverged:
            pass
    return best


def _min_over_side(rho_mat: np.ndarray, fixed: np.ndarray, da: int, db: int,
                   side: str, tol: float = 1e-8):
    """min Tr Y s.t. fixed (x) Y >= rho (side b) or Y (x) fixed >= rho (side a)."""
    vals, vecs = eigh_sorted(fixed)
    mask = support_mask(vals)
    v = vecs[:, mask]
    isq = v * (np.maximum(vals[mask], 0.0) ** -0.5)
    r = int(np.sum(mask))
    if side == "b":
        lift = np.kron(isq.conj().T, np.eye(db))
        x = lift @ rho_mat @ lift.conj().T
        res = solve_domination(DominationSDP(0.5 * (x + x.conj().T), r, db), tol=tol)
        y = res.y
    else:
        dim_other = da
        lift = np.kron(np.eye(dim_other), isq.conj().T)
        x = lift @ rho_mat @ lift.conj().T
        # swap factors so the free side is trailing
        perm = _swap_matrix(dim_other, r)
        x = perm @ x @ perm.conj().T
        res = solve_domination(DominationSDP(0.5 * (x + x.conj().T), r, dim_other), tol=tol)
        y = res.y
    lam = float(np.real(np.trace(y)))
    state = y / lam if lam > 0 else np.eye(y.shape[0], dtype=complex) / y.shape[0]
    return state, lam


def _swap_matrix(d1: int, d2: int) -> np.ndarray:
    s = np.zeros((d1 * d2, d1 * d2))
    for i in range(d1):
        for j in range(d2):
            s[j * d1 + i, i * d2 + j] = 1.0
    return s


def mi_up_cq_closed_form(cq: CQState, cut_b: tuple[int, ...] = ()) -> float:
    """One-sided max MI of A against (B, X) by per-symbol expectation.

    With B trivial this is log2 sum_x p_x 2^{Dmax(rho_A^x || rho_A)}; with a
    nontrivial B the inner per-symbol term minimizes over the B factor via the
    domination program.
    """
    avg = cq.average()
    total = 0.0
    for p, c in zip(cq.probs, cq.conditionals):
        if p <= 0.0:
            continue
        if not cut_b:
            dm = d_max(c, avg).value_bits
        else:
            dm = _i_up_against(c, avg, cut_b)
        if not np.isfinite(dm):
            return math.inf
        total += p * 2.0 ** dm
    return math.log2(total) if total > 0 else -math.inf


def _i_up_against(cond: DensityMatrix, avg: DensityMatrix, cut_b) -> float:
    """min over tau_B of Dmax(cond || avg_A (x) tau_B) as a domination program."""
    cut_b = sorted(set(int(k) for k in cut_b))
    n = len(cond.dims)
    cut_a = [i for i in range(n) if i not in cut_b]
    reordered = permute_subsystems(cond, cut_a + cut_b)
    avg_a = partial_trace(avg, cut_a)
    da = int(np.prod([cond.dims[i] for i in cut_a]))
    db = int(np.prod([cond.dims[i] for i in cut_b]))
    x, ra = _conjugate_by_marginal(reordered, avg_a, da, db)
    res = solve_domination(DominationSDP(x, ra, db), tol=1e-8)
    return math.log2(res.opt_value) if res.opt_value > 0 else -math.inf


def classical_i_up(joint: np.ndarray) -> float:
    """I_up(rest : X) of a classical joint with the LAST axis classical X."""
    j2 = joint.reshape(-1, joint.shape[-1]).T.copy()  # rows indexed by x
    val = _kernels.i_up_exp_classical(np.ascontiguousarray(j2),
                                      np.ascontiguousarray(j2.sum(axis=0)))
    return math.log2(val) if np.isfinite(val) and val > 0 else (math.inf if not np.isfinite(val) else -math.inf)


def mi_classical_smoothed_up(joint: np.ndarray, eps: float,
                             cfg: SearchConfig | None = None) -> float:
    """Smoothed one-sided max MI over classical subnormalized neighbors.

    Parametrization: a normalized distribution plus a trace deficit in
    [0, eps^2]; the purified-distance ball constraint is enforced exactly.
    Non-certified upper bound; equals the unsmoothed value at eps = 0.
    """
    joint = np.asarray(joint, dtype=float)
    if np.any(joint < -1e-12):
        raise ClassicalOnly("joint must be a nonnegative array")
    if not (0.0 <= eps < 1.0):
        raise EpsilonOutOfRange("eps must lie in [0,1)", eps=eps)
    base = classical_i_up(joint)
    if eps == 0.0:
        return base
    cfg = cfg or SearchConfig(restarts=6, max_iters=120, seed=7)
    p_flat = joint.ravel()
    n = p_flat.size
    shape = joint.shape

    def unpack(params):
        deficit = min(max(params[-1], 0.0), eps * eps)
        q = project_simplex(params[:-1], 1.0) * (1.0 - deficit)
        return q

    def objective(params):
        q = unpack(params)
        pd = _kernels.purified_distance_classical(q, p_flat)
        if pd > eps + 1e-12:
            # pull toward the ball: mix with p until inside
            lo, hi = 0.0, 1.0
            for _ in range(40):
                midp = 0.5 * (lo + hi)
                mix = midp * q + (1.0 - midp) * p_flat
                if _kernels.purified_distance_classical(mix, p_flat) <= eps:
                    lo = midp
                else:
                    hi = midp
            q = lo * q + (1.0 - lo) * p_flat
        return classical_i_up(q.reshape(shape))

    def feasible(params):
        out = params.copy()
        out[:-1] = project_simplex(params[:-1], 1.0)
        out[-1] = min(max(params[-1], 0.0), eps * eps)
        return out

    inits = [np.concatenate([p_flat, [0.0]]),
             np.concatenate([p_flat, [eps * eps]]),
             np.concatenate([np.full(n, 1.0 / n), [0.0]])]
    res = local_search(objective, feasible, n + 1, cfg, inits=inits)
    return min(base, res.value)


def renyi_cq_decomposition(cq: CQState, alpha: float, flavor: str = "sandwiched"
                           ) -> tuple[float, float]:
    """Direct vs per-symbol-expectation evaluation of the two-sided Renyi MI.

    Conditionals live on A (subsystem 0) or A (x) B (subsystems 1..); returns
    (direct, expectation) for the flavor that fixes both marginals.  The
    caller asserts agreement.
    """
    if alpha <= 1.0:
        raise AlphaOutOfRange("decomposition stated for alpha > 1", alpha=alpha)
    joint = cq.assemble(classical_first=False)  # conditional systems first, X last
    n = len(joint.dims)
    rho_a = partial_trace(joint, [0])
    rho_bx = partial_trace(joint, list(range(1, n)))
    lhs = renyi(joint, tensor(rho_a, rho_bx), alpha, flavor)
    avg_a = partial_trace(cq.average(), [0])
    acc = 0.0
    for p, c in zip(cq.probs, cq.conditionals):
        if p <= 0.0:
            continue
        b_idx = list(range(1, len(c.dims)))
        ref = tensor(avg_a, partial_trace(c, b_idx)) if b_idx else avg_a
        d = renyi(c, ref, alpha, flavor)
        acc += p * 2.0 ** ((alpha - 1.0) * d)
    rhs = math.log2(acc) / (alpha - 1.0) if acc > 0 else -math.inf
    return lhs, rhs


def check_mi_symmetries(rho: DensityMatrix, eps: float) -> dict:
    """Gap report for the swap symmetries of I_h and the spectrum divergence."""
    if len(rho.dims) != 2:
        raise ClassicalOnly("symmetry check expects a bipartite state")
    rho_a = partial_trace(rho, [0])
    rho_b = partial_trace(rho, [1])
    swapped = permute_subsystems(rho, [1, 0])
    ih_ab = d_hypo(rho, tensor(rho_a, rho_b), eps).value_bits
    ih_ba = d_hypo(swapped, tensor(rho_b, rho_a), eps).value_bits
    ds_ab = d_info_spectrum(rho, tensor(rho_a, rho_b), eps)
    ds_ba = d_info_spectrum(swapped, tensor(rho_b, rho_a), eps)
    return {
        "ih_gap": abs(ih_ab - ih_ba),
        "ds_gap": abs(ds_ab - ds_ba),
        "ih": (ih_ab, ih_ba),
        "ds": (ds_ab, ds_ba),
    }


def check_hypo_expectation_claim(cq: CQState, eps: float) -> dict:
    """Both sides of the per-symbol expectation form of exp(-I_h^eps(A:BX)).

    direct: joint optimal test with the averaged type-I constraint.
    per_symbol: sum_x p(x) beta_x with every per-symbol test forced to meet
    the constraint with equality.  direct <= per_symbol always; the report
    carries both rather than asserting equality.
    """
    joint = cq.assemble(classical_first=False)  # conditional systems first, X last
    n = len(joint.dims)
    rho_a = partial_trace(joint, [0])
    rho_bx = partial_trace(joint, [i for i in range(1, n)])
    direct = d_hypo(joint, tensor(rho_a, rho_bx), eps).value_bits
    direct_exp = 2.0 ** (-direct) if np.isfinite(direct) else 0.0
    avg_a = partial_trace(cq.average(), [0])
    per_symbol = 0.0
    for p, c in zip(cq.probs, cq.conditionals):
        if p <= 0.0:
            continue
        b_idx = list(range(1, len(c.dims)))
        ref = tensor(avg_a, partial_trace(c, b_idx)) if b_idx else avg_a
        beta = 2.0 ** (-d_hypo(c, ref, eps).value_bits)
        per_symbol += p * beta
    return {
        "direct_exp": direct_exp,
        "per_symbol_exp": per_symbol,
        "gap": per_symbol - direct_exp,
    }
