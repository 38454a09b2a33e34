"""``seclin`` command-line entry point.

Exit codes: 0 pass, 1 simulation mismatch, 2 validation failure,
3 secrecy failure, 4 infeasible audit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import audit, factorize, simulate
from .field import FieldError
from .linalg import Matrix, ShapeError
from .scheme import (
    Scheme, SchemeError, costs, derive_schedule, parse_field, read_json, scheme_from_dict,
)
from .secrecy import full_report
from .transform import (
    InsecureFactorizationError, SecrecyWarning, SecuredScheme, augmented_tasks, is_secured_doc, reduce_mod,
    secure, secured_from_dict, unsecured,
)

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_INSECURE, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception, code: int):
        self.stage, self.cause, self.code = stage, cause, code
        super().__init__(f"stage {stage} failed: {cause}")


def _clean(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _default_seed() -> int:
    return int(os.environ.get("SECLIN_SEED", "0"))


def _load(path, modulus=None) -> tuple[SecuredScheme, bool]:
    """Load a raw or secured scheme; returns (scheme, has_C)."""
    doc = read_json(path)
    if is_secured_doc(doc):
        ss, has_c = secured_from_dict(doc), True
    else:
        ss, has_c = unsecured(scheme_from_dict(doc)), False
    if modulus:
        ss = reduce_mod(ss, modulus)
    return ss, has_c


def _ensure_secured(ss: SecuredScheme, has_c: bool) -> SecuredScheme:
    return ss if has_c else secure(ss.base)


def _users(spec: str, K: int) -> list[int]:
    if spec == "all":
        return list(range(K))
    k = int(spec)
    if not 1 <= k <= K:
        raise SchemeError(f"user {k} out of range 1..{K}")
    return [k - 1]


# -- subcommands ---------------------------------------------------------------

def check_payload(ss: SecuredScheme, has_c: bool) -> dict:
    s = ss.base
    rep = full_report(s, ss if has_c else None)
    return {
        "N": s.N, "K": s.K, "L": s.L, "field": s.field.tag,
        "costs": costs(s).to_dict(),
        "schedule": derive_schedule(s).to_dict(),
        "secrecy": rep.to_dict(),
        "failures": rep.failures(),
    }, rep


def cmd_check(args) -> int:
    ss, has_c = _load(args.scheme, args.modulus)
    payload, rep = check_payload(ss, has_c)
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        c = payload["costs"]
        print(f"(N, K, L) = ({ss.base.N}, {ss.base.K}, {ss.base.L}) over {ss.field}")
        print(f"δ = {c['delta']}   γ = {c['gamma']}   "
              f"bound 1-(K-1)/N = {payload['secrecy']['global']['delta_bound']}")
        print("user  w_H  Sup(d_k)        rank(D_Red,k)  w_H<=N-K+1  rank(C(Sup,:))")
        for u, sup in zip(rep.per_user, payload["schedule"]["sup_d"]):
            l1 = "n/a" if u.lemma1_ok is None else f"{u.lemma1_rank}/{u.required_rank} {'ok' if u.lemma1_ok else 'FAIL'}"
            print(f"{u.user + 1:>4}  {u.w_H:>3}  {str(sup):<15} {u.dred_rank:>6} {'ok' if u.theorem1_ok else 'FAIL':>6}"
                  f"  {'ok' if u.corollary1_ok else 'FAIL':>10}  {l1}")
        for line in rep.failures():
            print("FAIL:", line)
        print("PASS" if rep.all_ok else "SECRECY CHECK FAILED")
    return EXIT_OK if rep.all_ok else EXIT_INSECURE


def _requests(path):
    doc = read_json(path)
    field = parse_field(doc)
    try:
        F = Matrix(doc["F"], field)
    except KeyError as exc:
        raise SchemeError("requests file needs key 'F'") from exc
    return doc, field, F


def _factorize_from(doc, field, F, form, P_path=None, redundancy=0) -> Scheme:
    if form == "systematic":
        if P_path:
            P = Matrix(read_json(P_path), field)
        elif "P" in doc:
            P = Matrix(doc["P"], field, cols=len(doc["P"][0]) if doc["P"] and doc["P"][0] else 0)
        else:
            P = Matrix.zeros(F.rows, redundancy, field) if redundancy else Matrix([[] for _ in range(F.rows)], field, cols=0)
        E_bot = Matrix(doc["E_bot"], field) if "E_bot" in doc else None
        return factorize.systematic_factorize(F, P, E_bot)
    if form in ("identity", "decentralized"):
        return factorize.identity_scheme(F, "assigned" if form == "identity" else "decentralized")
    raise SchemeError(f"unknown form {form!r}")


def cmd_factorize(args) -> int:
    doc, field, F = _requests(args.requests)
    s = _factorize_from(doc, field, F, args.form, args.P, args.redundancy)
    text = dumps(s.to_dict())
    if args.output:
        Path(args.output).write_text(text)
    if args.json or not args.output:
        sys.stdout.write(text)
    if not args.json:
        rep = full_report(s)
        c = costs(s)
        print(f"wrote {args.output or 'stdout'}: δ = {c.delta}, γ = {c.gamma}, "
              f"secrecy {'ok' if rep.all_ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK


def cmd_secure(args) -> int:
    ss, _ = _load(args.scheme, args.modulus)
    out = secure(ss.base, strict=not args.force)
    text = dumps(out.to_dict())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.json and args.output:
        sys.stdout.write(dumps({"x": out.x, "tasks": [t.to_dict() for t in augmented_tasks(out)]}))
    return EXIT_OK


def cmd_simulate(args) -> int:
    ss, _ = _load(args.scheme, args.modulus)
    if args.secure:
        ss = secure(ss.base)
    seed = args.seed if args.seed is not None else _default_seed()
    res = simulate.run_batch(ss, args.trials, seed, args.sigma_w, args.sigma_c, args.tol)
    if args.csv:
        simulate.write_trial_csv(res, args.csv)
    payload = res.to_dict()
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        print(f"{res.trials} trials, seed {seed}, field {ss.field}, x = {ss.x}")
        for k, r in enumerate(res.success_rate):
            extra = "" if ss.field.is_finite else f"  max |err| = {res.max_abs_error[k]:.3g}"
            print(f"user {k + 1}: success rate {r:.4f}{extra}")
    return EXIT_OK if res.all_correct else EXIT_MISMATCH


def cmd_audit_exact(args) -> int:
    ss, has_c = _load(args.scheme, args.modulus)
    if args.secure and not has_c:
        ss = secure(ss.base)
    rep = audit.gf_report(ss, _users(args.user, ss.base.K), args.max_states)
    payload = rep.to_dict()
    payload["secured"] = ss.x > 0
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        print(f"exhaustive audit over {ss.field}, x = {ss.x}, {ss.field.p ** (ss.base.L + ss.x)} states")
        for u in rep.per_user:
            print(f"user {u.user + 1}: I = {u.exact_leakage:.6g} bits{'  (exact zero)' if u.exact_zero else ''}")
    return EXIT_OK if all(u.exact_zero for u in rep.per_user) else EXIT_INSECURE


def _real_audit(args, exact: bool, bound: bool, eps=None) -> int:
    ss, has_c = _load(args.scheme)
    ss = _ensure_secured(ss, has_c)
    rep = audit.real_report(ss, args.sigma_w, args.sigma_c, _users(args.user, ss.base.K),
                            exact=exact, bound=bound, eps=eps, rule=args.rule)
    if args.json:
        sys.stdout.write(dumps(rep.to_dict()))
    else:
        for u in rep.per_user:
            if u.error:
                print(f"user {u.user + 1}: {u.error}")
                continue
            parts = [f"user {u.user + 1}: w_H = {u.w_H}"]
            if u.S_k:
                parts.append(f"S_k = {[n + 1 for n in u.S_k]}")
            if u.M_k is not None:
                parts.append(f"M_k = {u.M_k:.6g}")
            if bound:
                parts.append(f"bound = {u.bound:.6g} nats")
            if exact:
                parts.append(f"exact = {u.exact_leakage:.6g} nats")
            if u.sigma_c_for_eps is not None:
                parts.append(f"sigma_c(eps) = {u.sigma_c_for_eps:.6g}")
            print(", ".join(parts))
    return EXIT_INSECURE if any(u.error for u in rep.per_user) else EXIT_OK


def cmd_audit_bound(args) -> int:
    return _real_audit(args, exact=False, bound=True)


def cmd_audit_gaussian(args) -> int:
    return _real_audit(args, exact=True, bound=True)


def cmd_epsilon(args) -> int:
    args.sigma_c = 1.0
    ss, has_c = _load(args.scheme)
    ss = _ensure_secured(ss, has_c)
    out = []
    for k in _users(args.user, ss.base.K):
        w = ss.base.weight(k)
        if w < 2:
            out.append({"user": k + 1, "w_H": w, "sigma_c": None, "note": "single response; no leakage"})
            continue
        sc = audit.epsilon_to_sigma(ss, k, args.sigma_w, args.eps, rule=args.rule)
        b = audit.leakage_bound_real(ss, k, args.sigma_w, sc, rule=args.rule)
        out.append({"user": k + 1, "w_H": w, "sigma_c": sc, "sigma_c^2": sc * sc, "M_k": b.M_k, "bound": b.bound})
    payload = {"eps": args.eps, "sigma_w": args.sigma_w, "per_user": out}
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        for u in out:
            if u["sigma_c"] is None:
                print(f"user {u['user']}: {u['note']}")
            else:
                print(f"user {u['user']}: sigma_c >= {u['sigma_c']:.6g} (bound {u['bound']:.6g} nats)")
    return EXIT_OK


# -- pipeline ------------------------------------------------------------------

def run_pipeline(args) -> dict:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else _default_seed()

    def stage(name, fn, code=EXIT_INVALID):
        try:
            return fn()
        except InsecureFactorizationError as exc:
            raise StageError(name, exc, EXIT_INSECURE) from exc
        except audit.EnumerationInfeasible as exc:
            raise StageError(name, exc, EXIT_INFEASIBLE) from exc
        except (SchemeError, FieldError, ShapeError, ValueError) as exc:
            raise StageError(name, exc, code) from exc

    def load_input():
        doc = read_json(args.input)
        if "D" in doc and "E" in doc:
            s = scheme_from_dict(doc)
        else:
            field = parse_field(doc)
            s = _factorize_from(doc, field, Matrix(doc["F"], field), args.form, args.P, args.redundancy)
        if args.modulus:
            s = s.reduce_mod(args.modulus)
        C = None
        if "C" in doc:
            ss = secured_from_dict(doc)
            C = ss.C.reduce_mod(args.modulus) if args.modulus else ss.C
        return s, C

    s, supplied_C = stage("factorize", load_input)
    (out / "scheme.json").write_text(dumps(s.to_dict()))

    check = stage("check", lambda: check_payload(unsecured(s), False)[0])

    def do_secure():
        if supplied_C is not None:
            return SecuredScheme(s, supplied_C).validate()
        return secure(s)

    ss = stage("secure", do_secure, EXIT_INSECURE)
    (out / "secured.json").write_text(dumps(ss.to_dict()))
    check_sec, rep = check_payload(ss, True)
    check["secured_report"] = check_sec["secrecy"]
    check["tasks"] = [t.to_dict() for t in augmented_tasks(ss)]
    (out / "check.json").write_text(dumps(check))

    sim = stage("simulate", lambda: simulate.run_batch(ss, args.trials, seed, args.sigma_w, args.sigma_c, args.tol))
    (out / "simulation.json").write_text(dumps(sim.to_dict()))

    def do_audit():
        if ss.field.is_finite:
            return audit.gf_report(ss, max_states=args.max_states).to_dict()
        res = audit.real_report(ss, args.sigma_w, args.sigma_c, eps=args.eps).to_dict()
        if args.audit_modulus:
            res["gf_audit"] = audit.gf_report(reduce_mod(ss, args.audit_modulus),
                                              max_states=args.max_states).to_dict()
        return res

    aud = stage("audit", do_audit)
    (out / "audit.json").write_text(dumps(aud))

    c = costs(s)
    lines = [
        f"(N, K, L) = ({s.N}, {s.K}, {s.L}) over {s.field}; x = {ss.x} randomness symbols",
        f"δ = {c.delta} (bound {rep.delta_bound}), γ = {c.gamma}",
        f"rank(D_Red,k) = {[u.dred_rank for u in rep.per_user]}",
        f"rank(C(Sup(d_k),:)) = {[u.lemma1_rank for u in rep.per_user]} (need {[u.required_rank for u in rep.per_user]})",
        f"secrecy checks: {'PASS' if rep.all_ok else 'FAIL'}",
        f"simulation: {sim.trials} trials, success rates {list(sim.success_rate)}",
    ]
    for u in aud["per_user"]:
        desc = [f"user {u['user']}"]
        if "exact_leakage" in u:
            desc.append(f"leakage {_clean(u['exact_leakage'])} {u['unit']}")
        if "bound" in u:
            desc.append(f"bound {_clean(u['bound'])} nats, M_k {_clean(u.get('M_k'))}")
        if "sigma_c_for_eps" in u:
            desc.append(f"sigma_c(eps) {_clean(u['sigma_c_for_eps'])}")
        lines.append(": ".join([desc[0], ", ".join(desc[1:])]))
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return {"summary": lines, "ok": rep.all_ok and sim.all_correct}


def cmd_pipeline(args) -> int:
    try:
        res = run_pipeline(args)
    except StageError as exc:
        print(f"pipeline aborted at stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return exc.code
    if args.json:
        sys.stdout.write(dumps(res))
    else:
        print("\n".join(res["summary"]))
    return EXIT_OK if res["ok"] else EXIT_INSECURE


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seclin", description="Secure linearly separable distributed computing toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=fn)
        return p

    p = add("check", cmd_check, "validate a scheme and run all secrecy checks")
    p.add_argument("scheme")
    p.add_argument("--modulus", type=int)

    p = add("factorize", cmd_factorize, "build a scheme from a request matrix")
    p.add_argument("requests")
    p.add_argument("--form", choices=["systematic", "identity", "decentralized"], default="systematic")
    p.add_argument("--P", help="JSON file holding the K x (N-K) parity block")
    p.add_argument("--redundancy", type=int, default=0, help="N-K with a zero P when no P is given")
    p.add_argument("-o", "--output")

    p = add("secure", cmd_secure, "append a Null(D) basis as randomness coefficients")
    p.add_argument("scheme")
    p.add_argument("-o", "--output")
    p.add_argument("--modulus", type=int)
    p.add_argument("--force", action="store_true", help="secure even if the reduced-rank check fails")

    p = add("simulate", cmd_simulate, "run protocol trials")
    p.add_argument("scheme")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma-w", type=float, default=1.0)
    p.add_argument("--sigma-c", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=simulate.DEFAULT_TOL)
    p.add_argument("--csv", help="write per-trial rows here")
    p.add_argument("--modulus", type=int)
    p.add_argument("--secure", action="store_true", help="secure a raw scheme before simulating")

    p = add("audit-exact", cmd_audit_exact, "exhaustive mutual information over GF(p)")
    p.add_argument("scheme")
    p.add_argument("--user", default="all")
    p.add_argument("--modulus", type=int)
    p.add_argument("--secure", action="store_true", help="secure a raw scheme before auditing")
    p.add_argument("--max-states", type=int, default=audit.MAX_STATES)

    for name, fn, help_ in (("audit-bound", cmd_audit_bound, "real-field leakage bound"),
                            ("audit-gaussian", cmd_audit_gaussian, "exact Gaussian leakage and bound")):
        p = add(name, fn, help_)
        p.add_argument("scheme")
        p.add_argument("--sigma-w", type=float, default=1.0)
        p.add_argument("--sigma-c", type=float, default=1.0)
        p.add_argument("--user", default="all")
        p.add_argument("--rule", choices=["drop-redundant", "greedy"], default="drop-redundant")

    p = add("epsilon", cmd_epsilon, "randomness level that meets a leakage target")
    p.add_argument("scheme")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--sigma-w", type=float, default=1.0)
    p.add_argument("--user", default="all")
    p.add_argument("--rule", choices=["drop-redundant", "greedy"], default="drop-redundant")

    p = add("pipeline", cmd_pipeline, "factorize, check, secure, simulate and audit into a bundle")
    p.add_argument("input", help="scheme file, or requests file with F only")
    p.add_argument("-o", "--output", required=True, help="bundle directory")
    p.add_argument("--form", choices=["systematic", "identity", "decentralized"], default="systematic")
    p.add_argument("--P")
    p.add_argument("--redundancy", type=int, default=0)
    p.add_argument("--modulus", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma-w", type=float, default=1.0)
    p.add_argument("--sigma-c", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=simulate.DEFAULT_TOL)
    p.add_argument("--eps", type=float)
    p.add_argument("--audit-modulus", type=int, help="also run the exhaustive audit mod p")
    p.add_argument("--max-states", type=int, default=audit.MAX_STATES)
    return ap


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", SecrecyWarning)
            warnings.showwarning = _show_warning
            return args.func(args)
    except InsecureFactorizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSECURE
    except audit.EnumerationInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except audit.LemmaViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSECURE
    except (SchemeError, FieldError, ShapeError, audit.AuditError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
