"""Command-line entry point: ``curvlab <command> ...``.

Exit status is 0 when every check passes, 1 when a verification fails (the
report is still written) and 2 for invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .chain import ChainError, MappingChain, build_generator, check_reversibility, graph_distance
from .coarse import (TransportError, coarse_report, neighbor_pairs, short_time_kernel,
                     wasserstein_p)
from .couplings import (contractivity_report, coupling_lower_bound, product_coupling,
                        validate_coupling_rates)
from .entropic import cd_constant, curvature_estimate, sample_densities, sample_functions, verify_inequality
from .functionals import forms, phi_entropy
from .heatflow import entropy_decay_check, heat_flow, wasserstein_contraction_check
from .models import bernoulli_laplace, curie_weiss, glauber, hardcore, interacting_rw_localized, ising
from .models.base import _jsonable
from .models.glauber import _flip_moves
from .models.random_walks import polynomial_potential, radial_potential, separable_quadratic
from .weights import (m_theta_closed_form, m_theta_numeric, parse_phi, parse_theta, theta_alpha,
                      weight_for_generator)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
MODELS = ("curie-weiss", "ising", "bernoulli-laplace", "hardcore", "irw", "glauber")


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# parsing


def _scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_params(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise InputError(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = _scalar(v.strip())
    return out


def parse_range(text: str) -> list:
    """``a:b:step`` (inclusive) or a comma list."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"range {text!r} must look like start:stop:step")
        a, b, step = map(float, parts)
        if step <= 0:
            raise InputError("range step must be positive")
        if b < a:
            return []
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + k * step, 12) for k in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_p_list(text: str) -> list:
    out = []
    for v in text.split(","):
        v = v.strip().lower()
        if v in ("inf", "infinity"):
            out.append(math.inf)
        elif v:
            p = float(v)
            if p < 1:
                raise InputError("p must be at least 1")
            out.append(int(p) if p.is_integer() else p)
    if not out:
        raise InputError("empty p list")
    return out


def _vector(text: str) -> np.ndarray:
    path = Path(text)
    if path.exists():
        try:
            return np.asarray(json.loads(path.read_text()), dtype=float)
        except (json.JSONDecodeError, ValueError) as exc:
            raise InputError(f"cannot read vector from {text}: {exc}") from exc
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad vector {text!r}") from exc


def named_graph(spec) -> list:
    """Edge list for ``path:n``, ``cycle:n``, ``complete:n``, ``star:n`` or a JSON file."""
    spec = str(spec)
    if ":" in spec and not Path(spec).exists():
        kind, n = spec.split(":", 1)
        n = int(n)
        if kind == "path":
            return [(i, i + 1) for i in range(n - 1)]
        if kind == "cycle":
            return [(i, (i + 1) % n) for i in range(n)]
        if kind == "complete":
            return list(itertools.combinations(range(n), 2))
        if kind == "star":
            return [(0, i) for i in range(1, n)]
        raise InputError(f"unknown graph family {kind!r}")
    try:
        data = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read graph {spec}: {exc}") from exc
    if isinstance(data, dict) and "edges" in data:
        return [tuple(e) for e in data["edges"]]
    return data


def _potential(spec: str, d: int):
    kind, _, rest = spec.partition(":")
    values = [float(v) for v in rest.split(",") if v.strip()] if rest else []
    if kind == "radial-h2":
        return radial_potential(lambda m: m * m, values[0] if values else 1.0)
    if kind == "separable-quad":
        a = values or [1.0]
        return separable_quadratic(np.broadcast_to(np.asarray(a), (d,)) if len(a) == 1 else a)
    if kind == "poly":
        return polynomial_potential(values)
    raise InputError(f"unknown potential {spec!r}")


def build_model(name: str, params: dict):
    """ModelInstance from a model name and a parameter dict."""
    p = dict(params)
    try:
        if name == "curie-weiss":
            return curie_weiss(int(p.get("N", p.get("n", 4))), float(p.get("beta", 0.2)))
        if name == "ising":
            shape = str(p.get("shape", p.get("n", 3)))
            return ising(tuple(int(v) for v in shape.split("x")), float(p.get("beta", 0.1)))
        if name == "bernoulli-laplace":
            return bernoulli_laplace(int(p.get("L", 4)), int(p.get("N", 2)))
        if name == "hardcore":
            return hardcore(named_graph(p.get("graph", "path:3")), float(p.get("beta", 0.4)))
        if name == "irw":
            d = int(p.get("d", 2))
            V = _potential(str(p.get("potential", "separable-quad:0.1")), d)
            V_minus = _potential(str(p["potential_minus"]), d) if "potential_minus" in p else None
            return interacting_rw_localized(d, int(p.get("N", 3)), V, V_minus, float(p.get("lam", 1.0)),
                                            params={"potential": str(p.get("potential", "separable-quad:0.1"))})
        if name == "glauber":
            n = int(p.get("n", 3))
            if "energy" not in p:
                raise InputError("glauber needs energy=<json file with 2^n energies>")
            H = np.asarray(json.loads(Path(str(p["energy"])).read_text()), dtype=float)
            if H.shape != (2**n,):
                raise InputError(f"energy file must hold {2**n} values")
            return glauber(_flip_moves(n), H, float(p.get("beta", 0.1)), "glauber", {"n": n})
    except InputError:
        raise
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid parameters for {name}: {exc}") from exc
    raise InputError(f"unknown model {name!r}; choose from {', '.join(MODELS)}")


def _model_params(args) -> dict:
    params = parse_params(getattr(args, "params", None))
    for key in ("n", "beta", "L", "N", "d", "lam", "shape", "graph", "potential"):
        value = getattr(args, key, None)
        if value is not None:
            params.setdefault(key, value)
    return params


def _load_chain(path: str) -> MappingChain:
    try:
        return MappingChain.load(path)
    except OSError as exc:
        raise InputError(f"cannot read chain file: {exc}") from exc
    except ChainError as exc:
        raise InputError(str(exc)) from exc


def _source(args):
    """(model or None, chain) from --model/--chain."""
    if getattr(args, "chain", None):
        return None, _load_chain(args.chain)
    if getattr(args, "model", None):
        inst = build_model(args.model, _model_params(args))
        return inst, inst.chain
    raise InputError("give --model or --chain")


def _weights(text: str) -> list:
    try:
        return [(s.strip(), parse_theta(s)) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def m_theta_value(theta) -> float:
    """Closed-form M_theta when known, else the lower end of the numeric enclosure."""
    if theta.m_theta is not None:
        return float(theta.m_theta)
    return float(m_theta_numeric(theta)[0])


# --------------------------------------------------------------------------
# report plumbing


@lru_cache(maxsize=1)
def build_id() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"curvlab-{__version__}-{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"curvlab-{__version__}"


def run_config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _meta(args) -> dict:
    cfg = run_config(args)
    return {"build": build_id(), "config": cfg, "config_hash": config_hash(cfg), "seed": cfg.get("seed")}


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def emit_json(report: dict, args):
    report = {"meta": _meta(args), **report}
    _write(json.dumps(_jsonable(report), indent=2, default=_json_default) + "\n", getattr(args, "out", None))


def _json_default(x):
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return str(x)


def emit_csv(header: list, rows: list, args):
    meta = _meta(args)
    buf = io.StringIO()
    buf.write(f"# build={meta['build']} config_hash={meta['config_hash']} seed={meta['seed']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(h)) for h in header])
    _write(buf.getvalue(), getattr(args, "out", None))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _pool_map(fn, items):
    workers = max(1, int(os.environ.get("CURVLAB_THREADS", "1") or 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# checks shared by analyze / verify / curvature


def theorem_check(inst, label: str, theta, samples: int, seed: int, tol: float) -> dict:
    """Sampled B >= K A and coupling bound >= K A for one weight."""
    K = inst.theorem(m_theta_value(theta))
    if not inst.hypotheses_met:
        return {"theta": label, "theorem_K": K, "status": "vacuous", "hypotheses_met": False}
    rng = np.random.default_rng(seed)
    rho = sample_densities(inst.chain, samples, rng)
    psi = sample_functions(inst.chain, samples, rng)
    fv = forms(rho, psi, theta, inst.chain)
    lower = coupling_lower_bound(rho, psi, theta, inst.rates, inst.chain)
    scale = np.abs(fv.B) + abs(K) * np.abs(fv.A)
    ineq_ok = bool(np.all(fv.B - K * fv.A >= -tol * scale))
    cpl_ok = bool(np.all(lower - K * fv.A >= -tol * (np.abs(lower) + abs(K) * np.abs(fv.A))))
    ok_a = fv.A > 0
    return {
        "theta": label,
        "theorem_K": K,
        "hypotheses_met": True,
        "sampled_min_ratio": float(np.min(fv.B[ok_a] / fv.A[ok_a])),
        "coupling_min_ratio": float(np.min(lower[ok_a] / fv.A[ok_a])),
        "inequality_ok": ineq_ok,
        "coupling_ok": cpl_ok,
        "status": "pass" if ineq_ok and cpl_ok else "fail",
    }


# --------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    inst, chain = _source(args)
    weights = _weights(args.theta)
    report: dict = {"n_states": chain.n}
    failures = []
    rev = check_reversibility(chain, args.tol)
    report["reversibility"] = {"ok": rev.ok, "max_violation": rev.max_violation, "worst": rev.worst}
    if not rev.ok:
        failures.append("reversibility")
    if inst is not None:
        report["model"] = inst.summary()
        if not inst.hypotheses_met:
            report["flags"] = ["hypotheses-unmet"]
            failures.append("hypotheses-unmet")
        val = validate_coupling_rates(inst.rates, chain, args.tol)
        report["coupling"] = {"ok": val.ok, "worst_violation": val.worst_violation,
                              "worst_edge": val.worst_edge, "negative_entries": val.negative_entries}
        if not val.ok:
            failures.append("coupling")
        report["theorem"] = [theorem_check(inst, lab, th, args.samples, args.seed, args.tol) for lab, th in weights]
        failures += [f"theorem:{r['theta']}" for r in report["theorem"] if r["status"] == "fail"]
    coupling = inst.rates if inst is not None else product_coupling(chain)
    estimates = {}
    for lab, th in weights:
        est = curvature_estimate(chain, th, seed=args.seed, n_random=args.search, n_tilts=16,
                                 descent_steps=10, coupling=coupling)
        estimates[lab] = {"eig_upper": est.eig_upper, "verified_lower": est.verified_lower}
        if inst is not None and inst.hypotheses_met:
            K = inst.theorem(m_theta_value(th))
            estimates[lab]["theorem_K_le_eig_upper"] = bool(K <= est.eig_upper + 1e-8 * max(1, abs(K)))
            if not estimates[lab]["theorem_K_le_eig_upper"]:
                failures.append(f"estimate:{lab}")
    report["curvature_estimates"] = estimates
    report["cd_constant"] = cd_constant(chain)

    L = build_generator(chain)
    coarse = coarse_report(L, "neighbors", (1, 2, math.inf), "cc")
    report["coarse"] = {"rows": coarse.rows, "infima": {f"{f}:{p}": v for (f, p), v in coarse.infima.items()}}
    k_inf = coarse.infima[("cc", "inf")]
    if inst is not None and inst.coarse_bound is not None and inst.hypotheses_met:
        ok = k_inf >= inst.coarse_bound - 1e-9
        report["coarse"]["bound"] = {"expected_at_least": inst.coarse_bound, "ok": ok}
        if not ok:
            failures.append("coarse-bound")
    if inst is not None:
        cr = contractivity_report(inst.rates, chain, graph_distance(chain))
        report["coupling_expanding_mass"] = float(cr.expanding_mass.max(initial=0.0))
    if k_inf > -math.inf:
        checks = {p: wasserstein_contraction_check(chain, p, max(k_inf, 0.0), times=(0.1, 0.5))
                  for p in (1, 2)}
        report["contraction"] = {str(p): {"ok": c["ok"], "worst_ratio": c["worst_ratio"]} for p, c in checks.items()}
        failures += [f"contraction:{p}" for p, c in checks.items() if not c["ok"]]
    if inst is not None and inst.hypotheses_met:
        K = 2 * inst.theorem(1.0)  # log-mean weight, M = 1
        rng = np.random.default_rng(args.seed)
        rhos = sample_densities(chain, 5, rng)
        decay = [entropy_decay_check(chain, parse_phi("alpha:1"), K, r, (0.1, 0.5, 1.0)) for r in rhos]
        report["entropy_decay"] = {"K": K, "ok": all(c["ok"] for c in decay)}
        if not report["entropy_decay"]["ok"]:
            failures.append("entropy-decay")
    report["failures"] = failures
    report["pass"] = not failures
    emit_json(report, args)
    return EXIT_OK if not failures else EXIT_FAIL


def cmd_verify(args) -> int:
    inst = build_model(args.theorem, _model_params(args))
    rows = [theorem_check(inst, lab, th, args.samples, args.seed, args.tol) for lab, th in _weights(args.theta)]
    for r in rows:
        r["theorem"] = args.theorem
    header = ["theorem", "theta", "hypotheses_met", "theorem_K", "sampled_min_ratio",
              "coupling_min_ratio", "status"]
    emit_csv(header, rows, args)
    return EXIT_FAIL if any(r["status"] == "fail" for r in rows) else EXIT_OK


def _sweep_row(model: str, base: dict, point: dict) -> dict:
    if model == "m-theta":
        alpha = float(point["alpha"])
        lo, hi = m_theta_numeric(theta_alpha(alpha))
        return {**point, "closed_form": m_theta_closed_form(alpha), "numeric_lo": lo, "numeric_hi": hi}
    inst = build_model(model, {**base, **point})
    row = {**point, "n_states": inst.chain.n, "kappa_star": inst.kappa_star,
           "kappa_bar_star": inst.kappa_bar_star, "hypotheses_met": inst.hypotheses_met,
           "K_log": inst.theorem(1.0)}
    for k, v in inst.report.get("formula", {}).items():
        row[f"formula_{k}"] = v
    return row


def cmd_sweep(args) -> int:
    base = _model_params(args)
    axes = []
    for g in args.grid or []:
        if "=" not in g:
            raise InputError(f"grid {g!r} must look like name=start:stop:step")
        k, v = g.split("=", 1)
        values = parse_range(v)
        axes.append([(k.strip(), val) for val in values])
    if not axes or any(not a for a in axes):
        raise InputError("empty grid")
    points = [dict(p) for p in itertools.product(*axes)]
    rows = _pool_map(lambda pt: _sweep_row(args.model, base, pt), points)
    header = list(dict.fromkeys(k for r in rows for k in r))
    emit_csv(header, rows, args)
    return EXIT_OK


def cmd_coarse(args) -> int:
    if args.time == "dc":
        if args.matrix:
            try:
                M = np.asarray(json.loads(Path(args.matrix).read_text()), dtype=float)
            except (OSError, json.JSONDecodeError, ValueError) as exc:
                raise InputError(f"cannot read matrix: {exc}") from exc
            if M.ndim != 2 or M.shape[0] != M.shape[1] or np.any(M < 0) or not np.allclose(M.sum(axis=1), 1):
                raise InputError("--matrix must be a square stochastic matrix")
        else:
            _, chain = _source(args)
            G = build_generator(chain)
            # uniformized jump chain: one step of I + T L
            M = short_time_kernel(G, 1.0 / (-np.diag(G)).max())
    else:
        _, chain = _source(args)
        M = build_generator(chain)
    n = len(M)
    if args.pairs == "neighbors":
        pairs = neighbor_pairs(M)
    elif args.pairs == "all":
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    else:
        try:
            x, y = (int(v) for v in args.pairs.split(","))
        except ValueError as exc:
            raise InputError("--pairs must be all, neighbors or x,y") from exc
        if x == y or not (0 <= x < n and 0 <= y < n):
            raise InputError("pair must name two distinct states")
        pairs = [(x, y)]
    try:
        rep = coarse_report(M, pairs, parse_p_list(args.p), args.time)
    except ChainError as exc:
        raise InputError(str(exc)) from exc
    emit_csv(["x", "y", "p", "flavor", "value", "dual_gap"], rep.rows, args)
    return EXIT_FAIL if any(r["dual_gap"] > args.tol for r in rep.rows) else EXIT_OK


def cmd_flow(args) -> int:
    inst, chain = _source(args)
    try:
        gen = parse_phi(args.phi)
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from exc
    if args.K == "auto":
        if inst is not None:
            K = 2 * inst.theorem(m_theta_value(weight_for_generator(gen)))
        elif gen.alpha == 2.0:
            ev = np.sort(np.linalg.eigvals(-build_generator(chain)).real)
            K = 2 * ev[1]
        else:
            raise InputError("--K auto needs --model or phi alpha:2")
    else:
        K = float(args.K)
    times = parse_range(args.t)
    if not times or min(times) < 0:
        raise InputError("--t must list nonnegative times")
    rng = np.random.default_rng(args.seed)
    if args.rho0 == "random":
        rho0 = sample_densities(chain, 1, rng)[0]
    elif args.rho0.startswith("dirac:"):
        rho0 = np.zeros(chain.n)
        rho0[int(args.rho0.split(":")[1])] = 1.0 / chain.measure[int(args.rho0.split(":")[1])]
    else:
        rho0 = _vector(args.rho0)
    trace = heat_flow(chain, rho0, times, gen)
    h0 = float(phi_entropy(np.asarray(rho0, float), gen, chain))
    rows = []
    ok = True
    for t, h in zip(trace.times, trace.entropies):
        bound = math.exp(-K * t) * h0
        good = h <= bound * (1 + args.tol) + 1e-14
        ok &= bool(good)
        rows.append({"t": float(t), "entropy": float(h), "bound": bound, "ok": good})
    emit_csv(["t", "entropy", "bound", "ok"], rows, args)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_wasserstein(args) -> int:
    mu, nu = _vector(args.mu), _vector(args.nu)
    if args.dist:
        try:
            d = np.asarray(json.loads(Path(args.dist).read_text()), dtype=float)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise InputError(f"cannot read distance matrix: {exc}") from exc
    else:
        _, chain = _source(args)
        d = graph_distance(chain)
    if mu.shape != nu.shape or d.shape != (mu.size, mu.size):
        raise InputError("mu, nu and the distance matrix have inconsistent sizes")
    try:
        res = wasserstein_p(mu, nu, d, float(args.p))
    except TransportError as exc:
        raise InputError(str(exc)) from exc
    emit_json({"value": res.value, "cost": res.cost, "dual_gap": res.dual_gap, "plan": res.plan}, args)
    return EXIT_OK if res.dual_gap <= args.tol else EXIT_FAIL


def cmd_curvature(args) -> int:
    inst, chain = _source(args)
    (label, theta), = _weights(args.theta)[:1] or [(None, None)]
    coupling = inst.rates if inst is not None else product_coupling(chain)
    est = curvature_estimate(chain, theta, seed=args.seed, n_random=args.samples, coupling=coupling)
    if args.K == "auto":
        K = inst.theorem(m_theta_value(theta)) if inst is not None else max(est.verified_lower, 0.0)
    else:
        K = float(args.K)
    check = verify_inequality(chain, theta, K, seed=args.seed, n_samples=args.samples)
    ok = check["ok"] and K <= est.eig_upper + 1e-8 * max(1.0, abs(K))
    report = {
        "theta": label,
        "K": K,
        "constants": inst.summary() if inst is not None else None,
        "estimate": est.to_dict(),
        "inequality": {"ok": check["ok"], "min_margin": check["min_margin"],
                       "witness_rho": check["witness"][0], "witness_psi": check["witness"][1]},
        "pass": bool(ok),
    }
    emit_json(report, args)
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------


def _add_common(p, samples=1000):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None)


def _add_model(p, chain=True):
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--params", default=None, help="comma-separated key=value pairs")
    if chain:
        p.add_argument("--chain", default=None, help="chain JSON file")
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--shape")
    p.add_argument("--graph")
    p.add_argument("--potential")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full report for a model or chain")
    _add_model(p)
    p.add_argument("--theta", default="log,arith")
    p.add_argument("--search", type=int, default=32, help="random densities in the curvature search")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="sampled check of a model theorem")
    p.add_argument("--theorem", required=True, choices=MODELS)
    _add_model(p, chain=False)
    p.add_argument("--theta", default="log,arith,alpha:1.5")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="constants over a parameter grid (CSV)")
    p.add_argument("--model", required=True, choices=MODELS + ("m-theta",))
    p.add_argument("--params", default=None)
    p.add_argument("--grid", action="append", help="name=start:stop:step, repeatable")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("coarse", help="coarse Ricci curvatures (CSV)")
    _add_model(p)
    p.add_argument("--matrix", default=None, help="stochastic matrix JSON for --time dc")
    p.add_argument("--pairs", default="neighbors")
    p.add_argument("--p", default="1,2,inf")
    p.add_argument("--time", choices=("dc", "cc"), default="cc")
    _add_common(p)
    p.set_defaults(func=cmd_coarse)

    p = sub.add_parser("flow", help="entropy along the heat flow against exp(-Kt) (CSV)")
    _add_model(p)
    p.add_argument("--phi", default="alpha:1")
    p.add_argument("--K", default="auto")
    p.add_argument("--t", default="0:2:0.1")
    p.add_argument("--rho0", default="random", help="random, dirac:<state> or a vector")
    _add_common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("wasserstein", help="exact W_p between two vectors")
    _add_model(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--dist", default=None, help="distance matrix JSON")
    p.add_argument("--p", default="1")
    _add_common(p)
    p.set_defaults(func=cmd_wasserstein)

    p = sub.add_parser("curvature", help="curvature estimate and sampled inequality check")
    _add_model(p)
    p.add_argument("--theta", default="log")
    p.add_argument("--K", default="auto")
    _add_common(p, samples=256)
    p.set_defaults(func=cmd_curvature)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"curvlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
