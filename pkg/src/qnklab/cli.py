"""Command-line workbench.

Every command is fully determined by its flags and seeds: rerunning an
invocation reproduces its output files byte for byte.  Exit status is 0 on
success, 1 when a verification the command exists to perform fails, and 2
on usage, parse or input-validation errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .commutators import (
    ResidualReport,
    count_non_identity,
    extend_sets,
    group_commutator,
    verify_constant_commutator,
    verify_propositions,
)
from .config import residual_tolerance
from .linalg import frobenius
from .families import (
    IdentificationKey,
    KeyParams,
    build_keyed_set,
    build_scheme1_family,
    build_scheme2_family,
)
from .jsonio import (
    FormatError,
    density_from_json,
    dump,
    family_from_json,
    family_to_json,
    load,
    transcript_to_json,
)
from .linalg import DensityMatrix
from .protocol import KNOWLEDGE_LEVELS, run_keyed_session, run_mim_attack
from .security import (
    averaged_cipher_states,
    check_indistinguishability,
    check_key_security,
    check_operator_security,
    cipher_average_operators,
)


def _build_family(scheme: int, dim: int, n_a: int, n_b: int, seed: int):
    if dim == 0:
        dim = 2 if scheme == 1 else 8
    if scheme == 1:
        return build_scheme1_family(n_a, n_b, dim, seed)
    if dim != 8:
        raise ValueError("scheme 2 runs on the three-qubit message space (dim 8)")
    return build_scheme2_family(n_a, n_b, seed)


def _key_from_args(args, required: bool) -> IdentificationKey | None:
    if args.key is None:
        if required:
            raise ValueError("this command needs --key")
        return None
    params = KeyParams(master_seed=args.key_seed)
    if args.i is not None:
        return IdentificationKey(args.key, args.i, params)
    return IdentificationKey.derive(args.key, params)


def cmd_gen_family(args) -> int:
    family = _build_family(args.scheme, args.dim, args.n_a, args.n_b, args.seed)
    dump(family_to_json(family), args.out)
    print(f"wrote family (scheme {family.scheme}, dim {family.dim}) to {args.out}")
    return 0


def cmd_run_session(args) -> int:
    family = family_from_json(load(args.family))
    key = _key_from_args(args, required=False)
    if args.message == "random":
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 23]))
        message = DensityMatrix.random_pure(family.dim, rng)
    else:
        message = density_from_json(load(args.message))
    transcript = run_keyed_session(family, message, args.seed, key=key, variant=args.variant)
    dump(transcript_to_json(transcript), args.out)
    print(
        f"session complete: scheme {transcript.scheme}, "
        f"correctness distance {transcript.correctness_distance:.3e}; wrote {args.out}"
    )
    return 0


def cmd_verify_identities(args) -> int:
    family = _build_family(args.scheme, args.dim, args.n_a, args.n_b, args.seed)
    reports: list[ResidualReport] = []
    constant = verify_constant_commutator(family.s_a, family.s_b)
    reports.append(constant.report)
    if constant.report.passed:
        for which in (1, 2, 3):
            reports.append(verify_propositions(family.s_a, family.s_b, which))
        ext_a, ext_b = extend_sets(family.s_a, family.s_b)
        eye = np.eye(family.dim**2)
        worst = max(
            frobenius(group_commutator(a, b) - eye) for a in ext_a for b in ext_b
        )
        reports.append(
            ResidualReport("extension-commutation", len(ext_a) * len(ext_b), worst,
                           worst < residual_tolerance())
        )
        out = {
            "reports": [r.to_json() for r in reports],
            "extension_sizes": {
                "A": count_non_identity(ext_a),
                "B": count_non_identity(ext_b),
            },
            "pass": all(r.passed for r in reports),
        }
    else:
        out = {"reports": [r.to_json() for r in reports], "pass": False}

    if args.out:
        dump(out, args.out)
    for r in reports:
        print(f"{r.kind}: max residual {r.max_residual:.3e} over {r.indices_checked} "
              f"index tuples -> {'pass' if r.passed else 'FAIL'}")
    return 0 if out["pass"] else 1


def cmd_attack(args) -> int:
    family = family_from_json(load(args.family))
    key = _key_from_args(args, required=args.knowledge in ("full-family-no-key", "insider"))
    report = run_mim_attack(
        family,
        sessions=args.sessions,
        seed=args.seed,
        key=key,
        knowledge=args.knowledge,
        variant=args.variant,
        detection_threshold=args.threshold,
    )
    dump(report.to_json(), args.out)
    if report.sessions:
        print(
            f"{report.sessions} sessions, knowledge={report.knowledge}: "
            f"mean attacker distance {report.mean_attacker_distance:.4f}, "
            f"mean detection {report.mean_detection:.4f}"
        )
    else:
        print("no sessions requested; empty report written")
    return 0


def cmd_analyze(args) -> int:
    family = family_from_json(load(args.family))
    params = KeyParams(master_seed=args.key_seed)
    if args.keys:
        keys = [IdentificationKey.derive(int(k), params, which_i=args.i_index)
                for k in args.keys.split(",")]
        keyed = [build_keyed_set(key, family, variant=args.variant) for key in keys]
    else:
        keyed = [family]

    averages = cipher_average_operators(keyed)
    reference = DensityMatrix.pure(np.eye(family.dim)[:, 0])
    ciphers = averaged_cipher_states(averages, reference)
    state_result = check_indistinguishability(ciphers, args.eps)
    operator_result = check_operator_security(keyed, args.eps)
    verdicts = [state_result.def1, state_result.def2,
                operator_result.def3, operator_result.sufficient]
    if len(keyed) > 1:
        verdicts.append(check_key_security(keyed, args.eps))

    out = {
        "epsilon": args.eps,
        "keys": args.keys,
        "verdicts": [v.to_json() for v in verdicts],
    }
    dump(out, args.report)
    for v in verdicts:
        worst = max(v.measured.values()) if v.measured else 0.0
        print(f"{v.criterion}: worst measured {worst:.4f} vs eps {v.epsilon} "
              f"-> {'pass' if v.passed else 'FAIL'}")
    return 0


def cmd_report(args) -> int:
    data = load(args.input)
    if "verdicts" in data:
        print(f"security report (epsilon {data.get('epsilon')})")
        for v in data["verdicts"]:
            print(f"  {v['criterion']:10s} pass={v['pass']}")
            for name, value in sorted(v["measured"].items()):
                print(f"    {name:28s} {value:.6f}")
    elif "reports" in data:
        print("identity verification report")
        for r in data["reports"]:
            print(f"  {r['kind']:24s} residual {r['max_residual']:.3e} "
                  f"({r['indices_checked']} tuples) pass={r['pass']}")
    elif "knowledge" in data:
        print(f"attack report: knowledge={data['knowledge']} sessions={data['sessions']}")
        print(f"  mean attacker distance {data['mean_attacker_distance']}")
        print(f"  mean detection         {data['mean_detection']}")
        print(f"  detected fraction      {data['detected_fraction']} "
              f"(threshold {data['detection_threshold']})")
    elif "cipher1" in data:
        print(f"transcript: scheme={data['scheme']} dim={data['dim']} "
              f"l1={data['l1']} l2={data['l2']} key_id={data['key_id']}")
        print(f"  correctness distance {data['correctness_distance']:.3e}")
    elif "S_A" in data:
        print(f"family: scheme={data['scheme']} dim={data['dim']} seed={data['seed']} "
              f"|S_A|={len(data['S_A'])} |S_B|={len(data['S_B'])}")
    else:
        raise FormatError("unrecognized report file shape")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnklab",
        description="three-pass no-key protocol workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_family_flags(p, dim_default):
        p.add_argument("--scheme", type=int, choices=(1, 2), required=True)
        p.add_argument("--dim", type=int, default=dim_default)
        p.add_argument("--nA", dest="n_a", type=int, default=3)
        p.add_argument("--nB", dest="n_b", type=int, default=3)
        p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("gen-family", help="build an operator family and write it to JSON")
    add_family_flags(p, dim_default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_family)

    p = sub.add_parser("run-session", help="run one three-pass session from a family file")
    p.add_argument("--family", required=True)
    p.add_argument("--key", type=int, default=None)
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--key-seed", type=int, default=0)
    p.add_argument("--variant", choices=("plain", "pair", "triple"), default="plain")
    p.add_argument("--message", default="random", help="'random' or a density-matrix JSON file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_session)

    p = sub.add_parser("verify-identities", help="check the commutator identities numerically")
    add_family_flags(p, dim_default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("attack", help="simulate a man-in-the-middle sweep")
    p.add_argument("--family", required=True)
    p.add_argument("--knowledge", choices=KNOWLEDGE_LEVELS, default="none")
    p.add_argument("--sessions", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--key", type=int, default=None)
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--key-seed", type=int, default=0)
    p.add_argument("--variant", choices=("plain", "pair", "triple"), default="plain")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze", help="evaluate the security definitions on a family")
    p.add_argument("--family", required=True)
    p.add_argument("--keys", default=None, help="comma-separated key integers")
    p.add_argument("--i-index", type=int, default=0)
    p.add_argument("--key-seed", type=int, default=0)
    p.add_argument("--variant", choices=("plain", "pair", "triple"), default="plain")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render a JSON artifact as text")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
