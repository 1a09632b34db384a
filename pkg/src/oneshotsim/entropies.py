"""One-shot and asymptotic divergences and entropies.

All values in bits.  +inf is a regular return value, never an exception.
The hypothesis-testing divergence runs an exact Neyman-Pearson sort on
commuting inputs and a scalar concave dual elsewhere; both are exposed so the
tests can cross-check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import AlphaOutOfRange, DimMismatch, EpsilonOutOfRange
from .solver import DominationSDP, maximize_concave_1d, solve_domination
from .states import (
    CQState,
    DensityMatrix,
    eigh_sorted,
    partial_trace,
    permute_subsystems,
    support_mask,
)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class DivergenceResult:
    value_bits: float
    witness: np.ndarray | None = None
    method: str = "closedForm"


def _support_projector(rho: DensityMatrix) -> np.ndarray:
    vals, vecs = rho.eig()
    mask = support_mask(vals)
    v = vecs[:, mask]
    return v @ v.conj().T


def _pseudo_power(mat: np.ndarray, power: float) -> np.ndarray:
    """mat^power on the support (zero eigenvalues stay zero)."""
    vals, vecs = eigh_sorted(mat)
    mask = support_mask(vals)
    out_vals = np.zeros_like(vals)
    out_vals[mask] = np.maximum(vals[mask], 0.0) ** power
    return (vecs * out_vals) @ vecs.conj().T


def _check_dims(p: DensityMatrix, q: DensityMatrix):
    if p.dims != q.dims:
        raise DimMismatch("divergence arguments need equal dims",
                          p=list(p.dims), q=list(q.dims))


def rel_entropy(p: DensityMatrix, q: DensityMatrix) -> float:
    """Umegaki relative entropy in bits; +inf outside the support condition."""
    _check_dims(p, q)
    vp, up = p.eig()
    vq, uq = q.eig()
    mask_q = support_mask(vq)
    proj_perp = uq[:, ~mask_q]
    if proj_perp.shape[1] and float(np.real(np.trace(proj_perp.conj().T @ p.mat @ proj_perp))) > 1e-11:
        return math.inf
    mask_p = support_mask(vp)
    term1 = float(np.sum(vp[mask_p] * np.log(vp[mask_p])))
    logq = (uq[:, mask_q] * np.log(vq[mask_q])) @ uq[:, mask_q].conj().T
    term2 = float(np.real(np.trace(p.mat @ logq)))
    return (term1 - term2) / LOG2


def d_max(p: DensityMatrix, q: DensityMatrix) -> DivergenceResult:
    """Max divergence log2 ||q^-1/2 p q^-1/2||_inf; witness is the exponent."""
    _check_dims(p, q)
    if p.is_classical() and q.is_classical():
        r = _kernels.max_ratio(p.diagonal(), q.diagonal())
        val = math.inf if not np.isfinite(r) else (math.log2(r) if r > 0 else -math.inf)
        return DivergenceResult(val, np.array([val]), "closedForm")
    vq, uq = q.eig()
    mask = support_mask(vq)
    perp = uq[:, ~mask]
    if perp.shape[1] and float(np.real(np.trace(perp.conj().T @ p.mat @ perp))) > 1e-11:
        return DivergenceResult(math.inf, None, "closedForm")
    q_isqrt = (uq[:, mask] * (np.maximum(vq[mask], 0.0) ** -0.5)) @ uq[:, mask].conj().T
    m = q_isqrt @ p.mat @ q_isqrt
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])
    val = math.log2(lam) if lam > 0 else -math.inf
    return DivergenceResult(val, np.array([val]), "closedForm")


def d_bar_zero(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """-log2 Tr[Pi_rho sigma]; the epsilon -> 0 limit of the testing divergence."""
    _check_dims(rho, sigma)
    overlap = float(np.real(np.trace(_support_projector(rho) @ sigma.mat)))
    if overlap <= 1e-15:
        return math.inf
    return -math.log2(overlap)


def neyman_pearson_classical(p: np.ndarray, q: np.ndarray, eps: float) -> tuple[float, np.ndarray]:
    """Exact minimal type-II error beta and the optimal diagonal test.

    Sorts outcomes by likelihood ratio and fills until the type-I constraint
    Tr[Lambda p] >= 1 - eps is met with a fractional last weight.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ratios = np.where(p > 1e-300, p / np.maximum(q, 1e-300), 0.0)
    ratios = np.where((p > 1e-300) & (q <= 1e-300), math.inf, ratios)
    order = np.argsort(-ratios, kind="stable")
    lam = np.zeros_like(p)
    need = 1.0 - eps
    acc = 0.0
    for i in order:
        if acc >= need - 1e-15:
            break
        if p[i] <= 0.0:
            continue
        take = min(1.0, (need - acc) / p[i])
        lam[i] = take
        acc += take * p[i]
    beta = float(np.sum(lam * q))
    return beta, lam


def _maybe_codiagonalize(rho: DensityMatrix, sigma: DensityMatrix):
    """Common eigenbasis for commuting pairs, else None."""
    if rho.is_classical() and sigma.is_classical():
        return rho.diagonal(), sigma.diagonal(), np.eye(rho.dim, dtype=complex)
    comm = rho.mat @ sigma.mat - sigma.mat @ rho.mat
    scale = max(float(np.max(np.abs(rho.mat))), float(np.max(np.abs(sigma.mat))), 1e-300)
    if float(np.max(np.abs(comm))) > 1e-10 * scale:
        return None
    # generic combination splits shared eigenspaces
    _, vecs = eigh_sorted(rho.mat + math.e * sigma.mat)
    p_diag = np.real(np.diag(vecs.conj().T @ rho.mat @ vecs))
    q_diag = np.real(np.diag(vecs.conj().T @ sigma.mat @ vecs))
    off_p = vecs.conj().T @ rho.mat @ vecs - np.diag(p_diag)
    off_q = vecs.conj().T @ sigma.mat @ vecs - np.diag(q_diag)
    if max(float(np.max(np.abs(off_p))), float(np.max(np.abs(off_q)))) > 1e-8 * scale:
        return None
    return p_diag, q_diag, vecs


def d_hypo(rho: DensityMatrix, sigma: DensityMatrix, eps: float,
           force_dual: bool = False) -> DivergenceResult:
    """Hypothesis-testing divergence -log2 beta(eps).

    Commuting inputs take the exact Neyman-Pearson path; otherwise beta is the
    scalar concave dual max_t [t(1-eps) - Tr(t rho - sigma)_+], bracketed by
    the restricted max ratio of sigma against rho.  force_dual skips the
    commuting fast path (used to cross-check the two routes).
    """
    _check_dims(rho, sigma)
    if not (0.0 <= eps < 1.0):
        raise EpsilonOutOfRange("eps must lie in [0, 1)", eps=eps)
    co = None if force_dual else _maybe_codiagonalize(rho, sigma)
    if co is not None:
        p_diag, q_diag, vecs = co
        beta, lam = neyman_pearson_classical(np.maximum(p_diag, 0.0), np.maximum(q_diag, 0.0), eps)
        witness = (vecs * lam) @ vecs.conj().T
        value = -math.log2(beta) if beta > 1e-300 else math.inf
        return DivergenceResult(value, witness, "neymanPearson")

    proj = _support_projector(rho)
    if eps == 0.0:
        # the optimal zero-error test is exactly the support projector
        beta = max(float(np.real(np.trace(proj @ sigma.mat))), 0.0)
        value = -math.log2(beta) if beta > 1e-300 else math.inf
        return DivergenceResult(value, proj, "closedForm")

    sig_r = proj @ sigma.mat @ proj
    restricted = d_max_matrix(sig_r, rho.mat)
    t0 = 2.0 ** (min(restricted, 60.0) + 4.0) if np.isfinite(restricted) else 2.0 ** 34
    t0 = max(t0, 4.0)

    def dual(t: float) -> float:
        vals = np.linalg.eigvalsh(t * rho.mat - sigma.mat)
        return t * (1.0 - eps) - float(np.sum(vals[vals > 0.0]))

    # rank-deficient small-eps optima sit at t ~ 1/sqrt(eps); map [0, inf)
    # into [0, 1) so the golden section can reach them (boundary capped where
    # the positive-part cancellation stays below the value tolerance)
    def dual_mapped(s: float) -> float:
        return dual(t0 * s / (1.0 - s))

    s_hi = 1.0 - 1.0 / (1.0 + 1e8)
    s_star, beta = maximize_concave_1d(dual_mapped, 0.0, s_hi, tol=1e-14, max_iter=400)
    t_star = t0 * s_star / (1.0 - s_star)
    beta = max(beta, 0.0)
    witness = _reconstruct_test(rho.mat, sigma.mat, t_star, eps)
    value = -math.log2(beta) if beta > 1e-300 else math.inf
    return DivergenceResult(value, witness, "dual1D")


def d_max_matrix(p_mat: np.ndarray, q_mat: np.ndarray) -> float:
    """log2 of the restricted max ratio; helper for dual brackets."""
    vq, uq = eigh_sorted(q_mat)
    mask = support_mask(vq)
    if not np.any(mask):
        return math.inf
    q_isqrt = (uq[:, mask] * (np.maximum(vq[mask], 0.0) ** -0.5)) @ uq[:, mask].conj().T
    m = q_isqrt @ p_mat @ q_isqrt
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])
    return math.log2(lam) if lam > 0 else -math.inf


def _reconstruct_test(rho_mat, sigma_mat, t_star, eps):
    """Optimal test from the dual optimizer: positive part plus boundary fill."""
    vals, vecs = eigh_sorted(t_star * rho_mat - sigma_mat)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    pos = vals > 1e-9 * scale
    zero = np.abs(vals) <= 1e-9 * scale
    lam = np.zeros_like(vals)
    lam[pos] = 1.0
    a = float(np.real(np.trace((vecs[:, pos] @ vecs[:, pos].conj().T) @ rho_mat))) if np.any(pos) else 0.0
    if np.any(zero):
        b = float(np.real(np.trace((vecs[:, zero] @ vecs[:, zero].conj().T) @ rho_mat)))
        if b > 1e-14:
            lam[zero] = min(max((1.0 - eps - a) / b, 0.0), 1.0)
    return (vecs * lam) @ vecs.conj().T


def d_info_spectrum(rho: DensityMatrix, q: DensityMatrix, eps: float) -> float:
    """Information-spectrum divergence sup{gamma : Tr[rho {rho <= 2^gamma q}] <= eps}.

    Exact ratio-breakpoint enumeration for commuting inputs; a 1e3-point grid
    refined by bisection to 1e-8 in gamma otherwise (about 1e-6 bits).
    """
    _check_dims(rho, q)
    if not (0.0 < eps < 1.0):
        raise EpsilonOutOfRange("eps must lie in (0, 1)", eps=eps)
    co = _maybe_codiagonalize(rho, q)
    if co is not None:
        p_diag, q_diag, _ = co
        return _info_spectrum_classical(np.maximum(p_diag, 0.0), np.maximum(q_diag, 0.0), eps)

    def mass(gamma: float) -> float:
        vals, vecs = eigh_sorted((2.0 ** gamma) * q.mat - rho.mat)
        sel = vecs[:, vals >= 0.0]
        return float(np.real(np.trace(sel.conj().T @ rho.mat @ sel)))

    lo = d_max_matrix(q.mat, rho.mat)
    hi = d_max_matrix(rho.mat, q.mat)
    lo = -lo - 2.0 if np.isfinite(lo) else -64.0
    hi = hi + 2.0 if np.isfinite(hi) else 64.0
    grid = np.linspace(lo, hi, 1000)
    feas = [g for g in grid if mass(g) <= eps]
    if not feas:
        return lo
    g_lo = max(feas)
    above = [g for g in grid if g > g_lo]
    g_hi = min(above) if above else hi
    while g_hi - g_lo > 1e-8:
        mid = 0.5 * (g_lo + g_hi)
        if mass(mid) <= eps:
            g_lo = mid
        else:
            g_hi = mid
    return g_lo


def _info_spectrum_classical(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    ratios = np.where(p > 1e-300, p / np.maximum(q, 1e-300), 0.0)
    ratios = np.where((p > 1e-300) & (q <= 1e-300), math.inf, ratios)
    order = np.argsort(ratios, kind="stable")
    acc = 0.0
    for i in order:
        if p[i] <= 0.0:
            continue
        acc += p[i]
        if acc > eps + 1e-15:
            return math.log2(ratios[i]) if np.isfinite(ratios[i]) else math.inf
    return math.inf


def renyi(p: DensityMatrix, q: DensityMatrix, alpha: float, flavor: str = "sandwiched") -> float:
    """Petz or sandwiched Renyi divergence of order alpha, in bits."""
    _check_dims(p, q)
    if not (0.0 < alpha and alpha != 1.0):
        raise AlphaOutOfRange("alpha must lie in (0,1) or (1,inf)", alpha=alpha)
    if flavor not in ("petz", "sandwiched"):
        raise AlphaOutOfRange("flavor must be petz or sandwiched", flavor=flavor)
    if alpha > 1.0:
        vq, uq = q.eig()
        mask = support_mask(vq)
        perp = uq[:, ~mask]
        if perp.shape[1] and float(np.real(np.trace(perp.conj().T @ p.mat @ perp))) > 1e-11:
            return math.inf
    if flavor == "petz":
        log2_tr = _petz_log2_trace(p.mat, q.mat, alpha)
    else:
        expo = (1.0 - alpha) / (2.0 * alpha)
        qp = _pseudo_power(q.mat, expo)
        inner = qp @ p.mat @ qp
        vals = np.maximum(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0)
        log2_tr = _log2_power_sum(vals, alpha)
    if log2_tr == -math.inf:
        return math.inf if alpha > 1.0 else -math.inf
    return log2_tr / (alpha - 1.0)


def _log2_power_sum(vals: np.ndarray, alpha: float) -> float:
    """log2 sum_i vals_i^alpha, computed stably by factoring the peak."""
    vals = vals[vals > 0.0]
    if vals.size == 0:
        return -math.inf
    top = float(np.max(vals))
    return alpha * math.log2(top) + math.log2(float(np.sum((vals / top) ** alpha)))


def _petz_log2_trace(p_mat: np.ndarray, q_mat: np.ndarray, alpha: float) -> float:
    """log2 Tr[P^a Q^(1-a)] via eigenbases and a log-sum-exp over overlaps."""
    vp, up = eigh_sorted(p_mat)
    vq, uq = eigh_sorted(q_mat)
    mp = support_mask(vp)
    mq = support_mask(vq)
    vp, up = vp[mp], up[:, mp]
    vq, uq = vq[mq], uq[:, mq]
    overlaps = np.abs(up.conj().T @ uq) ** 2  # |<p_i|q_j>|^2
    logs = []
    for i in range(vp.size):
        for j in range(vq.size):
            if overlaps[i, j] <= 1e-300:
                continue
            logs.append(alpha * math.log2(vp[i]) + (1.0 - alpha) * math.log2(vq[j])
                        + math.log2(overlaps[i, j]))
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log2(sum(2.0 ** (v - top) for v in logs))


def h0(rho: DensityMatrix) -> float:
    """Hartley entropy: log2 of the numerical rank."""
    vals = np.linalg.eigvalsh(rho.mat)
    return math.log2(max(int(np.sum(support_mask(vals))), 1))


def h_r(rho: DensityMatrix) -> float:
    """-log2 of the smallest nonzero eigenvalue (support-restricted)."""
    vals = np.linalg.eigvalsh(rho.mat)
    kept = vals[support_mask(vals)]
    if kept.size == 0:
        return 0.0
    return -math.log2(float(np.min(kept)))


def von_neumann(rho: DensityMatrix) -> float:
    vals = np.linalg.eigvalsh(rho.mat)
    kept = vals[vals > 1e-15]
    return float(-np.sum(kept * np.log2(kept)))


def _split(rho: DensityMatrix, cut) -> tuple[DensityMatrix, tuple[int, ...], tuple[int, ...]]:
    cut = sorted(set(int(k) for k in (cut if np.iterable(cut) else [cut])))
    n = len(rho.dims)
    rest = [i for i in range(n) if i not in cut]
    if not cut or not rest:
        raise DimMismatch("cut must split the subsystems into two nonempty groups", cut=cut)
    reordered = permute_subsystems(rho, cut + rest)
    return reordered, tuple(cut), tuple(rest)


def cond_von_neumann(rho: DensityMatrix, cut) -> float:
    """H(A|B) with A the cut subsystems: H(AB) - H(B)."""
    _, cut_idx, rest_idx = _split(rho, cut)
    rho_b = partial_trace(rho, rest_idx)
    return von_neumann(rho) - von_neumann(rho_b)


def mutual_information_vn(rho: DensityMatrix, cut) -> float:
    _, cut_idx, rest_idx = _split(rho, cut)
    ha = von_neumann(partial_trace(rho, cut_idx))
    return ha - cond_von_neumann(rho, cut)


def h_min_cond(rho: DensityMatrix, cut, tol: float = 1e-8) -> float:
    """Conditional min-entropy H_min(A|B) via the domination program.

    A = cut subsystems; solves min Tr Y with 1_A (x) Y >= rho and returns
    -log2 of the optimum.  Diagonal states hit the closed-form fast path
    inside the solver.
    """
    reordered, cut_idx, rest_idx = _split(rho, cut)
    da = int(np.prod([rho.dims[i] for i in cut_idx]))
    db = int(np.prod([rho.dims[i] for i in rest_idx]))
    res = solve_domination(DominationSDP(reordered.mat, da, db), tol=tol)
    if res.opt_value <= 0.0:
        return math.inf
    return -math.log2(res.opt_value)


def h_min_cond_cq(cq: CQState) -> float:
    """Classical-conditioning fast path: exp2(-H_min(A|X)) = sum_x p_x ||rho^x||_inf."""
    total = 0.0
    for p, c in zip(cq.probs, cq.conditionals):
        if p <= 0.0:
            continue
        total += p * float(np.linalg.eigvalsh(c.mat)[-1])
    if total <= 0.0:
        return math.inf
    return -math.log2(total)


def binary_entropy(eps: float) -> float:
    if eps <= 0.0 or eps >= 1.0:
        return 0.0
    return float(-eps * math.log2(eps) - (1.0 - eps) * math.log2(1.0 - eps))
