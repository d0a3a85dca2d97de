"""Command-line front end: ingest JSON job descriptions, dispatch the
library operations, emit machine-readable reports.

Every report embeds a run manifest (command, inputs, seed, caps,
tolerances, output path) and is serialized with sorted keys and no
timestamps, so identical manifests produce byte-identical reports.
Rational scalars travel as 'p/q' strings; floats appear only in the
curve experiments.

Exit codes: `validate` and the map checks return 0 (pass) / 1 (fail);
`determine` returns 0 / 1 / 2 for certificate / counterexample /
undecided; malformed inputs exit with 3.
"""

import argparse
import json
import os
import sys
import tempfile

from .scalar import Q, format_scalar, parse_scalar, to_float
from .space import norm_eval, space_from_json
from .linmap import (is_isometric_embedding, is_quotient_map, linear_map,
                     operator_norm)
from .systems import (InverseSystem, compatible_from_tail, dualize,
                      generator_from_tail, project, stage_norms,
                      system_from_json, system_to_json, validate_standard,
                      SubspaceGenerator)
from .determining import (CertifyConfig, DeterminingQuery, RhoSchedule,
                          SearchConfig, anp_diagnostic, dp_diagnostic,
                          eps_determining_certify, eps_determining_search,
                          equivalence_witness, gfda_check,
                          prefix_obstruction_query)
from . import curves as curves_mod

EXIT_BAD_INPUT = 3


# ---------------------------------------------------------------------------
# Plumbing

def _manifest(args):
    return {
        "command": args.command,
        "inputs": [args.input],
        "seed": args.seed,
        "caps": {
            "max_stage": args.max_stage,
            "vertex_dim": os.environ.get("BANACH_LIMITS_CAP_DIM"),
        },
        "tol": args.tol,
        "out": args.out,
    }


def _emit(report, out_path):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path is None:
        sys.stdout.write(text)
        return
    _write_atomic(out_path, text)


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _load_job(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise SystemExit(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise SystemExit(
            f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}")


def _truncate(system, max_stage):
    if max_stage is None or max_stage >= system.max_stage:
        return system
    if max_stage < 1:
        raise ValueError("--max-stage must be at least 1")
    copy = type(system)(system.stage, system.bond, max_stage, system.label)
    if isinstance(system, InverseSystem):
        copy.is_quotient_system = system.is_quotient_system
    return copy


def _load_system(obj, args):
    return _truncate(system_from_json(obj), args.max_stage)


def _vec(values):
    return tuple(parse_scalar(v) for v in values)


def _fmt_vec(v):
    return [format_scalar(x) for x in v]


def _scalar_out(q):
    return {"exact": format_scalar(q), "float": to_float(q)}


def _map_verdict_out(v):
    return {"verdict": v.verdict,
            "witness": _fmt_vec(v.witness) if v.witness else None,
            "certificate_kind": v.certificate_kind,
            "reason": v.reason}


def _counterexample_out(cx):
    if cx is None:
        return None
    return {
        "a": _fmt_vec(cx.a),
        "a_prime": _fmt_vec(cx.a_prime),
        "v": _fmt_vec(cx.v),
        "v_prime": _fmt_vec(cx.v_prime),
        "tail_slacks": [[_scalar_out(s) for s in row]
                        for row in cx.tail_slacks],
        "proximity_slack": _scalar_out(cx.proximity_slack),
        "violation": _scalar_out(cx.violation),
    }


# ---------------------------------------------------------------------------
# Subcommands

def cmd_validate(args, job):
    system = _load_system(job, args)
    verdicts = validate_standard(system)
    passed = all(v.lipschitz_ok and v.quotient_ok is not False
                 for v in verdicts)
    return {
        "system": system.label,
        "stages": system.max_stage,
        "verdicts": [{
            "stage": v.stage,
            "lipschitz_ok": v.lipschitz_ok,
            "quotient_ok": v.quotient_ok,
            "witness": _fmt_vec(v.witness) if v.witness else None,
        } for v in verdicts],
        "passed": passed,
    }, 0 if passed else 1


def _canon_label(label):
    # Biduals are identified with the original space: collapse '**'.
    while label.endswith("**"):
        label = label[:-2]
    return label


def cmd_dualize(args, job):
    system = _load_system(job, args)
    dual = dualize(system)
    payload = system_to_json(dual)
    payload["label"] = _canon_label(payload["label"])
    for sp in payload["spaces"]:
        sp["label"] = _canon_label(sp["label"])
    if args.out:
        _write_atomic(args.out,
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")
        # --out holds the dual system itself; the report goes to stdout.
        args.out = None
        report = {"written": True, "dual_label": dual.label,
                  "stages": dual.max_stage}
    else:
        report = {"dual": payload}
    return report, 0


def cmd_norms(args, job):
    system = _load_system(job["system"], args)
    rows = []
    for tail in job["vectors"]:
        cv = compatible_from_tail(system, _vec(tail))
        rep = stage_norms(cv)
        rows.append({
            "tail": list(tail),
            "stage_norms": [_scalar_out(n) for n in rep.norms],
            "limit_lower_bound": _scalar_out(rep.limit_estimate),
            "limit": _scalar_out(rep.limit) if rep.limit is not None
            else None,
        })
    return {"system": system.label, "stages": system.max_stage,
            "vectors": rows}, 0


def _load_map(job):
    source = space_from_json(job["source"])
    target = space_from_json(job["target"])
    rows = [[parse_scalar(v) for v in row] for row in job["matrix"]]
    return linear_map(source, target, rows)


def cmd_opnorm(args, job):
    T = _load_map(job)
    res = operator_norm(T)
    return {
        "source": T.source.label, "target": T.target.label,
        "value": _scalar_out(res.value),
        "bracket": [_scalar_out(res.lower), _scalar_out(res.upper)],
        "certificate_kind": res.certificate_kind,
        "witness": _fmt_vec(res.witness) if res.witness else None,
    }, 0


def cmd_quotient_check(args, job):
    T = _load_map(job)
    qv = is_quotient_map(T)
    ev = is_isometric_embedding(T)
    return {
        "source": T.source.label, "target": T.target.label,
        "quotient": _map_verdict_out(qv),
        "isometric_embedding": _map_verdict_out(ev),
    }, 0 if qv.verdict else 1


def _parse_query(job, args):
    search = SearchConfig(**job.get("search", {}))
    if args.seed is not None:
        search = SearchConfig(search.starts, search.iters, args.seed,
                              search.max_den)
    certify_kw = dict(job.get("certify", {}))
    if "delta" in certify_kw:
        certify_kw["delta"] = parse_scalar(certify_kw["delta"])
    certify = CertifyConfig(**certify_kw)
    if "canonical" in job:
        if job["canonical"] != "prefix_obstruction":
            raise ValueError(f"unknown canonical query {job['canonical']!r}")
        eps = parse_scalar(job.get("eps", "1/2"))
        rho = (tuple(parse_scalar(r) for r in job["rho"])
               if "rho" in job else None)
        return prefix_obstruction_query(int(job["n"]), eps=eps, rho=rho,
                                        search=search, certify=certify)
    system = _load_system(job["system"], args)
    gen_obj = job["generator"]
    if isinstance(gen_obj, dict) and "tail" in gen_obj:
        gen = generator_from_tail(system,
                                  [_vec(row) for row in gen_obj["tail"]])
    else:
        gen = SubspaceGenerator(system,
                                [[_vec(row) for row in mat]
                                 for mat in gen_obj])
    rho = RhoSchedule(tuple(parse_scalar(r) for r in job["rho"]))
    eval_stage = int(job.get("eval_stage", gen.top_stage))
    return DeterminingQuery(system, gen, rho, parse_scalar(job["eps"]),
                            eval_stage, search=search, certify=certify)


def cmd_determine(args, job):
    q = _parse_query(job, args)
    mode = job.get("mode", "certify")
    report = {"eval_stage": q.eval_stage, "eps": format_scalar(q.eps),
              "rho": [format_scalar(r) for r in q.rho.values],
              "mode": mode}
    if mode == "search":
        res = eps_determining_search(q)
        report["search"] = {
            "kind": res.kind,
            "best_margin": res.best_margin,
            "evaluations": res.evaluations,
            "counterexample": _counterexample_out(res.counterexample),
        }
        return report, 1 if res.kind == "counterexample" else 2
    if mode != "certify":
        raise ValueError(f"unknown mode {mode!r}")
    res = eps_determining_certify(q)
    report["certify"] = _certify_out(res)
    code = {"certificate": 0, "counterexample": 1, "undecided": 2}[res.kind]
    return report, code


def _certify_out(res):
    return {
        "kind": res.kind,
        "statement": res.statement,
        "delta": format_scalar(res.delta),
        "points_checked": res.points_checked,
        "refinements": res.refinements,
        "counterexample": _counterexample_out(res.counterexample),
    }


def cmd_gfda_check(args, job):
    system = _load_system(job["system"], args)
    gen = SubspaceGenerator(system, [[_vec(row) for row in mat]
                                     for mat in job["generator"]])
    query = None
    if "query" in job:
        sub = dict(job["query"])
        sub["system"] = job["system"]
        sub["generator"] = job["generator"]
        query = _parse_query(sub, args)
        if query.system is not system:     # reuse the loaded system
            query = DeterminingQuery(system, gen, query.rho, query.eps,
                                     query.eval_stage, search=query.search,
                                     certify=query.certify)
    rep = gfda_check(system, gen, int(job["stages"]), query)
    return {
        "system": system.label,
        "stage_verdicts": [_map_verdict_out(v) for v in rep.stage_verdicts],
        "certify": _certify_out(rep.certify),
        "passes": rep.passes,
    }, 0 if rep.passes else 1


def _diag_out(d):
    out = {"eval_stage": d.eval_stage, "tol": format_scalar(d.tol),
           "weak_star_convergent": d.weak_star_convergent,
           "norm_converges": d.norm_converges}
    if d.uniformity is not None:
        out["uniformity"] = [_scalar_out(u) for u in d.uniformity]
        out["uniform_within_tol"] = d.uniform_within_tol
        out["blocks"] = list(d.blocks)
    if d.norm_residuals is not None:
        out["norm_residuals"] = [_scalar_out(r) for r in d.norm_residuals]
        out["strong_residuals"] = [_scalar_out(r)
                                   for r in d.strong_residuals]
        out["strong_converges"] = d.strong_converges
    return out


def cmd_anp_dp(args, job):
    system = _load_system(job["system"], args)
    tol = parse_scalar(args.tol if args.tol is not None
                       else job.get("tol", "1/1000000"))
    seq = [compatible_from_tail(system, _vec(tail))
           for tail in job["sequence"]]
    dp = dp_diagnostic(seq, tol)
    anp = anp_diagnostic(seq, tol)
    report = {"system": system.label, "dp": _diag_out(dp),
              "anp": _diag_out(anp)}
    if anp.weak_star_convergent:
        eq = equivalence_witness(seq, tol)
        report["equivalence"] = {
            "agree": eq.agree,
            "stage": eq.stage_i,
            "onset": eq.onset_k,
            "terms": [_scalar_out(t) for t in eq.terms],
            "identity_holds": eq.identity_holds,
        }
    return report, 0


def _load_curve(obj, args):
    if obj == "canonical_l1":
        return curves_mod.canonical_l1_curve()
    if obj == "canonical_c0":
        return curves_mod.canonical_c0_curve()
    system = _load_system(obj["system"], args)
    return curves_mod.CoordinateCurve(
        system, tuple(obj["amplitudes"]), tuple(obj["frequencies"]),
        obj.get("waveform", "sine"), obj.get("lipschitz_bound"),
        obj.get("label", "curve"))


def cmd_curves(args, job):
    curve = _load_curve(job["curve"], args)
    ts = job.get("ts", "canonical")
    if ts == "canonical":
        ts = curves_mod.canonical_grid(int(job.get("grid_points", 100)))
    lo, hi = job.get("m_range", [4, 14])
    M = job.get("stage")
    if args.max_stage is not None:
        M = min(M or args.max_stage, args.max_stage)
    rep = curves_mod.differentiability_scan(curve, ts, range(lo, hi + 1), M)
    if args.out:
        base, _ = os.path.splitext(args.out)
        _write_atomic(base + ".csv", curves_mod.report_to_csv(rep))
    return json.loads(curves_mod.report_to_json(rep)), 0


HANDLERS = {
    "validate": cmd_validate,
    "dualize": cmd_dualize,
    "norms": cmd_norms,
    "opnorm": cmd_opnorm,
    "quotient-check": cmd_quotient_check,
    "determine": cmd_determine,
    "gfda-check": cmd_gfda_check,
    "anp-dp": cmd_anp_dp,
    "curves": cmd_curves,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="banachlim",
        description="Exact computations on finite-stage Banach-space "
                    "inverse/direct systems.")
    parser.add_argument("command", choices=sorted(HANDLERS),
                        help="operation to run")
    parser.add_argument("input", help="JSON job description")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the search seed")
    parser.add_argument("--max-stage", type=int, default=None,
                        help="truncate loaded systems to this many stages")
    parser.add_argument("--tol", default=None,
                        help="tolerance override (exact 'p/q' string)")
    parser.add_argument("--out", default=None,
                        help="write the report here instead of stdout")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    job = _load_job(args.input)
    manifest = _manifest(args)
    try:
        report, code = HANDLERS[args.command](args, job)
    except (ValueError, KeyError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    report["manifest"] = manifest
    _emit(report, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
