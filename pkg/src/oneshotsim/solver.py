"""Self-contained optimization kernels.

Four pieces: golden-section maximization of a concave scalar function, a
log-det barrier method for operator-domination programs of the form
min Tr Y s.t. 1_A (x) Y >= X, Y >= 0, restart-based projected local search
over box/simplex parameters, and constructive affine Caratheodory pruning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadInterval, DegenerateNullspace, NotConverged

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_concave_1d(f, lo: float, hi: float, tol: float = 1e-10,
                        max_iter: int = 200) -> tuple[float, float]:
    """Golden-section maximization on [lo, hi]; returns (t_star, f_star).

    The reported maximum always dominates both endpoint values, so plateaus
    and boundary optima of piecewise-linear concave objectives are safe.
    """
    if not (hi > lo) or not np.isfinite(lo) or not np.isfinite(hi):
        raise BadInterval("need a finite interval with hi > lo", lo=lo, hi=hi)
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while (b - a) > tol and it < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        it += 1
    cands = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2), (0.5 * (a + b), f(0.5 * (a + b)))]
    return max(cands, key=lambda c: c[1])


@dataclass(frozen=True)
class DominationSDP:
    """min Tr Y  s.t.  1_A (x) Y >= X,  Y >= 0, with X Hermitian on A (x) B."""

    x: np.ndarray
    dim_a: int
    dim_b: int


@dataclass(frozen=True)
class DominationResult:
    opt_value: float
    y: np.ndarray
    dual: np.ndarray
    gap: float
    iterations: int


def _herm_basis(d: int) -> list[np.ndarray]:
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = -1j / math.sqrt(2.0)
            e[j, i] = 1j / math.sqrt(2.0)
            basis.append(e)
    return basis


def _partial_trace_a(m: np.ndarray, da: int, db: int) -> np.ndarray:
    return np.trace(m.reshape(da, db, da, db), axis1=0, axis2=2)


def _is_diagonal(m: np.ndarray, tol: float = 1e-12) -> bool:
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off), initial=0.0)) <= tol * max(1.0, float(np.max(np.abs(m))))


def solve_domination(prob: DominationSDP, tol: float = 1e-8) -> DominationResult:
    """Barrier method on the domination program.

    Returns the best primal iterate with a rescaled-dual certificate; the
    reported relative gap is certified and at most 5 tol.  Diagonal X
    collapses to per-column maxima and is solved in closed form.
    """
    da, db = prob.dim_a, prob.dim_b
    x = np.asarray(prob.x, dtype=complex)
    x = 0.5 * (x + x.conj().T)
    scale = max(float(np.max(np.abs(x))), 1e-300)

    if _is_diagonal(x):
        diag = np.real(np.diag(x)).reshape(da, db)
        y_diag = np.maximum(diag.max(axis=0), 0.0)
        y = np.diag(y_diag.astype(complex))
        dual = _diagonal_dual(diag, y_diag, da, db)
        return DominationResult(float(y_diag.sum()), y, dual, 0.0, 0)

    if float(np.linalg.eigvalsh(x)[-1]) <= tol * scale:
        return DominationResult(0.0, np.zeros((db, db), dtype=complex),
                                np.zeros((da * db, da * db), dtype=complex), 0.0, 0)

    basis = _herm_basis(db)
    n_par = len(basis)
    eye_a = np.eye(da)
    lifted = [np.kron(eye_a, e) for e in basis]

    lam_max = float(np.linalg.eigvalsh(x)[-1])
    y = (max(lam_max, 0.0) + 1.0) * np.eye(db, dtype=complex)
    t = max(1.0, 1.0 / scale)
    total_iters = 0
    d_tot = da * db
    best_primal = math.inf
    best_y = y
    best_dual_val = -math.inf
    best_dual = np.zeros((d_tot, d_tot), dtype=complex)

    for _outer in range(60):
        for _inner in range(60):
            s = np.kron(eye_a, y) - x
            s_inv = np.linalg.inv(s)
            y_inv = np.linalg.inv(y)
            grad_mat = t * np.eye(db) - _partial_trace_a(s_inv, da, db) - y_inv
            grad = np.array([np.real(np.trace(grad_mat @ e)) for e in basis])
            sl = [s_inv @ le for le in lifted]
            yl = [y_inv @ e for e in basis]
            hess = np.empty((n_par, n_par))
            for i in range(n_par):
                for j in range(i, n_par):
                    hij = float(np.real(np.sum(sl[i] * sl[j].T)) + np.real(np.sum(yl[i] * yl[j].T)))
                    hess[i, j] = hess[j, i] = hij
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            decrement = float(-grad @ step)
            delta = sum(step[k] * basis[k] for k in range(n_par))
            # backtracking keeps both barrier arguments positive definite
            alpha = 1.0
            phi0 = _barrier_value(t, y, x, eye_a)
            for _ls in range(50):
                y_new = y + alpha * delta
                phi1 = _barrier_value(t, y_new, x, eye_a)
                if phi1 is not None and phi1 <= phi0 - 0.25 * alpha * max(decrement, 0.0):
                    y = y_new
                    break
                alpha *= 0.5
            total_iters += 1
            if decrement < 1e-12 * max(1.0, t):
                break
        obj = float(np.real(np.trace(y)))
        if obj < best_primal:
            best_primal, best_y = obj, y
        s = np.kron(eye_a, y) - x
        dual = np.linalg.inv(s) / t
        dual = 0.5 * (dual + dual.conj().T)
        # rescale into the dual cone so the reported gap is certified
        red = _partial_trace_a(dual, da, db)
        lam = float(np.linalg.eigvalsh(red)[-1])
        if lam > 1.0:
            dual = dual / lam
        dual_val = float(np.real(np.trace(dual @ x)))
        if dual_val > best_dual_val:
            best_dual_val, best_dual = dual_val, dual
        gap = best_primal - best_dual_val
        if ((d_tot + db) / t <= tol * max(1.0, abs(best_primal))
                and gap <= 5.0 * tol * max(1.0, abs(best_primal))):
            return DominationResult(best_primal, best_y, best_dual, gap, total_iters)
        t *= 10.0
    raise NotConverged("barrier method did not reach the target gap",
                       iterations=total_iters,
                       gap=float(best_primal - best_dual_val))


def _barrier_value(t, y, x, eye_a):
    s = np.kron(eye_a, y) - x
    try:
        ls = np.linalg.cholesky(s)
        ly = np.linalg.cholesky(y)
    except np.linalg.LinAlgError:
        return None
    logdet_s = 2.0 * float(np.sum(np.log(np.real(np.diag(ls)))))
    logdet_y = 2.0 * float(np.sum(np.log(np.real(np.diag(ly)))))
    return t * float(np.real(np.trace(y))) - logdet_s - logdet_y


def _diagonal_dual(diag: np.ndarray, y_diag: np.ndarray, da: int, db: int) -> np.ndarray:
    """Complementary dual for the diagonal fast path: mass on argmax rows."""
    dual = np.zeros(da * db)
    for b in range(db):
        if y_diag[b] <= 0.0:
            continue
        a = int(np.argmax(diag[:, b]))
        dual[a * db + b] = 1.0
    return np.diag(dual.astype(complex))


@dataclass
class SearchConfig:
    restarts: int = 8
    max_iters: int = 200
    step_init: float = 0.25
    step_decay: float = 0.5
    tolerance: float = 1e-9
    seed: int = 0
    grad_step: float = 1e-5

    def derive(self, **kw) -> "SearchConfig":
        params = dict(restarts=self.restarts, max_iters=self.max_iters,
                      step_init=self.step_init, step_decay=self.step_decay,
                      tolerance=self.tolerance, seed=self.seed, grad_step=self.grad_step)
        params.update(kw)
        return SearchConfig(**params)


@dataclass
class SearchResult:
    value: float
    params: np.ndarray
    restart_index: int
    history: list = field(default_factory=list)


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total}."""
    v = np.asarray(v, dtype=float)
    if total <= 0.0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.max(np.nonzero(cond)[0])) + 1 if np.any(cond) else 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def local_search(objective, feasible_project, dim: int, cfg: SearchConfig,
                 inits=None) -> SearchResult:
    """Best-of-restarts projected gradient descent with numeric gradients.

    Deterministic for a fixed seed: restart r uses rng(seed + r).  Extra
    deterministic starting points may be supplied via `inits`; they are
    assigned to the leading restarts.
    """
    best: SearchResult | None = None
    inits = list(inits or [])
    n_runs = max(cfg.restarts, len(inits))
    for r in range(n_runs):
        rng = np.random.default_rng(cfg.seed + r)
        if r < len(inits):
            x = feasible_project(np.asarray(inits[r], dtype=float))
        else:
            x = feasible_project(rng.random(dim))
        fx = objective(x)
        step = cfg.step_init
        for _it in range(cfg.max_iters):
            g = _numeric_gradient(objective, x, feasible_project, cfg.grad_step)
            gn = float(np.linalg.norm(g))
            if not np.isfinite(gn) or gn < cfg.tolerance:
                break
            moved = False
            while step > 1e-12:
                x_new = feasible_project(x - step * g / gn)
                f_new = objective(x_new)
                if f_new < fx - 1e-15:
                    x, fx = x_new, f_new
                    moved = True
                    break
                step *= cfg.step_decay
            if not moved:
                break
        if best is None or fx < best.value - 1e-15:
            best = SearchResult(fx, x, r)
    assert best is not None
    return best


def _numeric_gradient(objective, x, feasible_project, h):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = objective(feasible_project(xp))
        fm = objective(feasible_project(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            fp = objective(xp if np.isfinite(fp) else x)
            fm = objective(xm if np.isfinite(fm) else x)
        g[i] = (fp - fm) / (2.0 * h)
    g[~np.isfinite(g)] = 0.0
    return g


@dataclass(frozen=True)
class WeightedPointSet:
    weights: np.ndarray
    points: np.ndarray  # shape (n, k)
    indices: np.ndarray | None = None  # positions in the pre-prune set


def caratheodory_prune(s: WeightedPointSet, tol: float = 1e-12) -> WeightedPointSet:
    """Reduce support to <= k+1 points preserving all weighted coordinate sums.

    Affine Caratheodory elimination: repeatedly move along a nullspace
    direction of the stacked [points; 1] matrix until a weight hits zero.
    Total weight and every coordinate-wise weighted sum are preserved.
    """
    w = np.asarray(s.weights, dtype=float).copy()
    pts = np.asarray(s.points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    k = pts.shape[1]
    active = np.nonzero(w > tol)[0]
    guard = 0
    while active.size > k + 1:
        guard += 1
        if guard > w.size + k + 8:
            raise DegenerateNullspace("pruning failed to terminate", support=int(active.size))
        a = np.vstack([pts[active].T, np.ones(active.size)])
        _, sv, vt = np.linalg.svd(a)
        gamma = vt[-1]
        if float(np.max(np.abs(gamma))) < 1e-14:
            raise DegenerateNullspace("no usable nullspace direction")
        if not np.any(gamma > tol):
            gamma = -gamma
        ratios = np.where(gamma > tol, w[active] / np.where(gamma > tol, gamma, 1.0), np.inf)
        j = int(np.argmin(ratios))
        t = ratios[j]
        w[active] = w[active] - t * gamma
        w[active[j]] = 0.0
        w = np.maximum(w, 0.0)
        active = np.nonzero(w > tol)[0]
    keep = np.nonzero(w > tol)[0]
    return WeightedPointSet(w[keep], pts[keep], keep)
