"""Command-line surface for every operation, with deterministic envelopes.

Exit codes: 0 success, 2 usage, 3 numeric failure (NotConverged/Infeasible),
4 input validation.  ONESHOT_SEED overrides --seed; ONESHOT_TOL_SDP,
ONESHOT_TOL_EIG, ONESHOT_TOL_SEARCH override tolerances; ONESHOT_BACKEND
selects the kernel backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import aep as aep_mod
from . import commoninfo as ci
from . import covering as cov
from . import embezzle as emb
from . import entropies as ent
from . import mutualinfo as minfo
from .errors import NumericFailure, OneShotError
from .serialize import (
    ResultEnvelope,
    content_digest,
    emit,
    load_state,
    to_json,
)
from .solver import SearchConfig
from .states import CQState, DensityMatrix, classical_state


def _seed_from(args) -> int:
    env = os.environ.get("ONESHOT_SEED")
    if env is not None:
        return int(env)
    return int(getattr(args, "seed", 0) or 0)


def _tol(name: str, default: float) -> float:
    env = os.environ.get(name)
    return float(env) if env is not None else default


def _as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, np.ndarray):
        return classical_state(state)
    if isinstance(state, CQState):
        return state.assemble(classical_first=False)
    raise OneShotError("expected a density/classical/cq state")


def _run_divergence(args) -> dict:
    p = _as_density(load_state(args.p))
    q = _as_density(load_state(args.q))
    kind = args.kind
    if kind == "kl":
        return {"valueBits": ent.rel_entropy(p, q)}
    if kind == "dmax":
        res = ent.d_max(p, q)
        return {"valueBits": res.value_bits, "method": res.method}
    if kind == "dh":
        res = ent.d_hypo(p, q, args.eps)
        return {"valueBits": res.value_bits, "method": res.method}
    if kind == "ds":
        return {"valueBits": ent.d_info_spectrum(p, q, args.eps)}
    if kind == "d0":
        return {"valueBits": ent.d_bar_zero(p, q)}
    if kind == "renyi":
        return {"valueBits": ent.renyi(p, q, args.alpha, args.flavor)}
    raise OneShotError(f"unknown divergence kind {kind!r}")


def _run_mutualinfo(args) -> dict:
    state = load_state(args.infile)
    rho = _as_density(state)
    cut = list(range(args.cut)) if args.cut > 0 else [0]
    value = minfo.mutual_info(minfo.MIRequest(
        rho, tuple(cut), args.flavor, args.eps,
        sdp_tol=_tol("ONESHOT_TOL_SDP", 1e-8)))
    return {"valueBits": value.value_bits, "flavor": value.flavor,
            "certified": value.certified}


def _run_commoninfo(args) -> dict:
    state = load_state(args.infile)
    if isinstance(state, np.ndarray) and args.parties != state.ndim:
        raise OneShotError(f"--parties {args.parties} does not match the "
                           f"{state.ndim}-party joint", parties=args.parties)
    cfg = SearchConfig(restarts=args.restarts, seed=_seed_from(args),
                       tolerance=_tol("ONESHOT_TOL_SEARCH", 1e-9))
    measure = args.measure
    if measure == "wyner":
        res = ci.wyner_ci(state, cfg=cfg)
    elif measure == "cmax":
        res = ci.c_max(state, cfg=cfg)
    elif measure == "cmax-smooth":
        res = ci.c_max_smoothed(state, args.eps, variant=args.variant, cfg=cfg)
    elif measure == "ch":
        res = ci.c_tilde_h(state, args.eps, cfg=cfg)
    elif measure == "c0":
        res = ci.c_tilde_zero(state, cfg=cfg)
    else:
        raise OneShotError(f"unknown measure {measure!r}")
    return {"valueBits": res.value_bits, "certified": res.certified,
            "residualMarginalError": res.residual_marginal_error,
            "extension": to_json(res.extension)}


def _run_softcover(args) -> dict:
    cq = load_state(args.infile)
    if not isinstance(cq, CQState):
        raise OneShotError("softcover expects a cq state")
    exp = cov.CoveringExperiment(cq, args.eps, trials=args.trials, seed=_seed_from(args),
                                 exact_cap=10 ** 9 if args.exact else 10 ** 4)
    rows = []
    if args.sweep:
        for m in (int(v) for v in args.sweep.split(",")):
            mean, stderr = cov.expected_covering_error(exp, m)
            rows.append({"M": m, "mean": mean, "stderr": stderr})
        return {"rows": rows}
    m_min = cov.min_codebook_size(exp)
    consts, rhs = cov.soft_cover_bounds(cq, args.eps, args.eta)
    return {"minCodebookSize": m_min, "empiricalBits": float(np.log2(m_min)),
            "boundBits": rhs, "constants": to_json(consts), "empirical": True}


def _run_dss(args) -> dict:
    state = load_state(args.infile)
    if isinstance(state, np.ndarray):
        dec = cov._decomposition_of_classical(state)
    else:
        dec = state
    e1, e2 = (float(v) for v in args.split.split(","))
    if args.report:
        rep = cov.one_shot_bounds_report(dec, args.eps, e1, e2, seed=_seed_from(args))
        return to_json(rep)
    proto = cov.build_dss_protocol(dec, args.eps, (e1, e2), seed=_seed_from(args))
    return {"bits": proto.bits, "size": proto.size,
            "achievedOneNorm": proto.achieved_one_norm,
            "achievedTD": proto.achieved_td,
            "codebook": list(proto.codebook.symbols)}


def _run_embezzle(args) -> dict:
    if args.op == "fidelity":
        target = load_state(args.target)
        rep = emb.embezzle_fidelity(target, args.n, args.eps)
        return to_json(rep)
    if args.op == "minsize":
        target = load_state(args.target)
        n = emb.min_catalyst_size(target, args.eps)
        return {"n": n, "bits": float(np.log2(n))}
    if args.op == "bounds":
        probs, targets = load_state(args.ensemble)
        res = emb.flagged_embezzle_bounds(probs, targets, args.eps)
        return to_json(res)
    raise OneShotError(f"unknown embezzle op {args.op!r}")


def _run_aep(args) -> dict:
    target = load_state(args.infile)
    eps_list = tuple(float(v) for v in args.eps.split(","))
    scan = aep_mod.AEPScan(target, n_max=args.nmax, eps_list=eps_list,
                           cfg=SearchConfig(restarts=2, max_iters=40, seed=_seed_from(args)))
    rows = aep_mod.run_aep_scan(scan)
    return {"rows": rows}


def _run_state(args) -> dict:
    state = load_state(args.infile)
    rho = _as_density(state)
    vals = np.linalg.eigvalsh(rho.mat)
    return {"dims": list(rho.dims), "trace": rho.trace,
            "normalized": rho.normalized,
            "spectrum": [float(v) for v in vals[::-1]]}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oneshot",
                                 description="one-shot distributed source simulation toolkit")
    ap.add_argument("--out", default=None, help="write the primary output here")
    ap.add_argument("--format", default="json", choices=["json", "jsonl", "csv"])
    ap.add_argument("--timing", action="store_true", help="include wall time in the envelope")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("state", help="validate and describe a state file")
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(fn=_run_state)

    dv = sub.add_parser("divergence", help="divergences between two states")
    dv.add_argument("--kind", required=True,
                    choices=["kl", "dmax", "dh", "ds", "d0", "renyi"])
    dv.add_argument("--p", required=True)
    dv.add_argument("--q", required=True)
    dv.add_argument("--eps", type=float, default=0.0)
    dv.add_argument("--alpha", type=float, default=2.0)
    dv.add_argument("--flavor", default="sandwiched", choices=["petz", "sandwiched"])
    dv.set_defaults(fn=_run_divergence)

    mi_p = sub.add_parser("mutualinfo", help="one-shot mutual informations")
    mi_p.add_argument("--in", dest="infile", required=True)
    mi_p.add_argument("--flavor", required=True, choices=list(minfo.FLAVORS))
    mi_p.add_argument("--cut", type=int, default=1,
                      help="number of leading subsystems on the A side")
    mi_p.add_argument("--eps", type=float, default=None)
    mi_p.set_defaults(fn=_run_mutualinfo)

    cip = sub.add_parser("commoninfo", help="common informations over Markov extensions")
    cip.add_argument("--in", dest="infile", required=True)
    cip.add_argument("--measure", required=True,
                     choices=["wyner", "cmax", "cmax-smooth", "ch", "c0"])
    cip.add_argument("--parties", type=int, default=2)
    cip.add_argument("--eps", type=float, default=0.0)
    cip.add_argument("--variant", default="ball-first",
                     choices=["ball-first", "extension-first"])
    cip.add_argument("--restarts", type=int, default=4)
    cip.add_argument("--seed", type=int, default=0)
    cip.set_defaults(fn=_run_commoninfo)

    sc = sub.add_parser("softcover", help="soft-covering simulation and bounds")
    sc.add_argument("--in", dest="infile", required=True)
    sc.add_argument("--eps", type=float, required=True)
    sc.add_argument("--eta", type=float, default=None)
    sc.add_argument("--trials", type=int, default=2000)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--exact", action="store_true")
    sc.add_argument("--sweep", default=None, help="comma-separated codebook sizes")
    sc.set_defaults(fn=_run_softcover)

    ds = sub.add_parser("dss", help="distributed source simulation protocols")
    ds.add_argument("op", choices=["build", "report"], nargs="?", default="build")
    ds.add_argument("--in", dest="infile", required=True)
    ds.add_argument("--eps", type=float, required=True)
    ds.add_argument("--split", required=True, help="eps1,eps2 budget split")
    ds.add_argument("--seed", type=int, default=0)
    ds.set_defaults(fn=_run_dss)

    eb = sub.add_parser("embezzle", help="embezzlement fidelities and bounds")
    eb.add_argument("op", choices=["fidelity", "minsize", "bounds"])
    eb.add_argument("--target", default=None)
    eb.add_argument("--ensemble", default=None)
    eb.add_argument("--n", type=int, default=1)
    eb.add_argument("--eps", type=float, default=None)
    eb.set_defaults(fn=_run_embezzle)

    ae = sub.add_parser("aep", help="equipartition scans")
    ae.add_argument("scan", nargs="?", default="scan")
    ae.add_argument("--in", dest="infile", required=True)
    ae.add_argument("--nmax", type=int, default=2)
    ae.add_argument("--eps", default="0.05,0.1")
    ae.add_argument("--seed", type=int, default=0)
    ae.set_defaults(fn=_run_aep)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "command", None) == "dss" and args.op == "report":
        args.report = True
    else:
        args.report = False
    t0 = time.monotonic()
    try:
        result = args.fn(args)
    except NumericFailure as exc:
        sys.stderr.write(json.dumps({"error": exc.code, **exc.payload}) + "\n")
        return 3
    except OneShotError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, **exc.payload}) + "\n")
        return 4
    wall = (time.monotonic() - t0) * 1000.0
    digest_inputs = {k: v for k, v in vars(args).items()
                     if k not in ("fn", "out", "format", "timing") and not callable(v)}
    env = ResultEnvelope(
        command=args.command,
        inputs_digest=content_digest({k: str(v) for k, v in digest_inputs.items()}),
        result=result,
        certified=result.get("certified") if isinstance(result, dict) else None,
        wall_time_ms=wall,
    )
    text = emit(env, fmt=args.format, path=args.out, include_timing=args.timing)
    if not args.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
