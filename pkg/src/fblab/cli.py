"""Batch front end: bounds for a joint file, i.i.d. sweeps, protocol runs, self-test.

Exit codes: 0 success, 2 input error, 3 size guard, 4 failed assertion.
Numbers are written as decimal strings; no binary floats reach the output.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import mpmath

from . import __version__, scenarios
from ._numeric import BACKENDS, GuardError, InputError, exact, fmt, to_backend
from .dists import JointDist, load
from .gf2 import BitMatrix, solve_affine
from .iid import CSV_HEADER, sweep
from .linear_pa import (
    ToeplitzFamily,
    best_lhl_eta,
    extend_to_invertible,
    family_delta_stats,
    protocol_descriptor,
    within_expected_bound,
)
from .pabounds import (
    QZ_POLICIES,
    PAInstance,
    achievability_k,
    converse_k,
    egamma_converse_eps,
    equivalence_suite,
    floor_int,
    lambda_bar_min,
)
from .parallel import rng
from .selftest import run_selftest
from .simcompress import (
    DERAND_LEVELS,
    EXTENDED_HAMMING_8_4,
    ERASED,
    ChannelInstance,
    DistortionSpec,
    build_protocol,
    bsc_test_channel,
    erasure_distortion,
    erasure_quantize_dual_code,
    erasure_test_channel,
    hamming_distortion,
    lossy_from_simulation,
    rd_erasure_quantization,
    rd_hamming,
    simulation_distance,
)

EXIT_OK, EXIT_INPUT, EXIT_GUARD, EXIT_ASSERT = 0, 2, 3, 4
MAX_EGAMMA_POINTS = 64


class AssertionFailure(Exception):
    """One or more recorded checks failed."""


def jsonable(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (Fraction, mpmath.mpf, float)):
        return fmt(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def dump_json(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


# -- bounds -------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    if not args.input:
        raise InputError("bounds needs --input <joint file>")
    joint = load(args.input)
    if not isinstance(joint, JointDist):
        raise InputError("bounds needs a 'joint' file, not a 'dist' file")
    if args.eps is None:
        raise InputError("bounds needs --eps")
    eps = exact(args.eps)
    if not 0 < eps < 1:
        raise InputError("--eps must lie in (0, 1)")
    exact_inst = PAInstance(joint, eps)
    if args.backend == "hiprec":
        work = PAInstance(JointDist(tuple(tuple(to_backend(v, "hiprec") for v in r) for r in joint.table)),
                          to_backend(eps, "hiprec"))
    else:
        work = exact_inst
    conv = converse_k(work)
    ach = achievability_k(work, args.qz)
    lam = lambda_bar_min(work)
    curve = []
    top = min(floor_int(conv.value) + 1, MAX_EGAMMA_POINTS)
    for K in range(1, top + 1):
        curve.append({"K": K, "epsilon": egamma_converse_eps(work, K)})
    eq = equivalence_suite(exact_inst)
    report = {
        "command": "bounds",
        "input": str(args.input),
        "backend": args.backend,
        "epsilon": eps,
        "shape": list(joint.shape),
        "converseK": {"value": conv.value, **conv.witness},
        "achievabilityK": {"value": ach.value, "qz_policy": args.qz if isinstance(args.qz, str) else "explicit",
                           **{k: v for k, v in ach.witness.items()}},
        "lambda_bar": lam.lam,
        "h_min_bar": lam.h_min,
        "egamma_converse_eps": curve,
        "equivalences": eq.checks,
        "ordering": {"achievability_le_converse": ach.value <= conv.value},
    }
    emit(dump_json(report), args.out)
    if not (eq.passed and ach.value <= conv.value):
        raise AssertionFailure("bounds checks failed")
    return EXIT_OK


# -- sweep --------------------------------------------------------------------------


def parse_n_list(text: str) -> list[int]:
    """Comma list of integers or ``start:stop:step`` ranges (stop inclusive)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                if len(bits) == 2:
                    bits.append(1)
                a, b, s = bits
                if s <= 0:
                    raise ValueError
                out.extend(range(a, b + 1, s))
            else:
                out.append(int(part))
        except ValueError:
            raise InputError(f"bad blocklength list entry {part!r}") from None
    if not out:
        raise InputError("empty blocklength list")
    if any(n < 1 for n in out):
        raise InputError("blocklengths must be positive")
    return out


def sweep_lines(p, eps, ns: Iterable[int], workers=None) -> Iterable[str]:
    yield CSV_HEADER
    lo = {}
    hi = {}
    names = ("converse_rate", "achievability_rate", "normal_approx_rate")
    count = 0
    for row in sweep(p, eps, ns, workers=workers):
        vals = (row.converse_rate, row.achievability_rate, row.normal_approx_rate)
        for name, v in zip(names, vals):
            lo[name] = v if name not in lo else min(lo[name], v)
            hi[name] = v if name not in hi else max(hi[name], v)
        count += 1
        yield ",".join([str(row.n)] + [fmt(v) for v in vals])
    summary = "; ".join(f"{n} min={fmt(lo[n], 12)} max={fmt(hi[n], 12)}" for n in names)
    yield f"# summary: rows={count}; {summary}"


def cmd_sweep(args) -> int:
    if args.p is None or args.eps is None:
        raise InputError("sweep needs --p and --eps")
    p, eps = exact(args.p), exact(args.eps)
    if not 0 < p < Fraction(1, 2):
        raise InputError("--p must lie in (0, 1/2)")
    if not 0 < eps < 1:
        raise InputError("--eps must lie in (0, 1)")
    if args.n_list:
        ns = parse_n_list(args.n_list)
    elif args.n is not None:
        ns = parse_n_list(str(args.n))
    else:
        raise InputError("sweep needs --n or --n-list")
    fh = open(args.out, "w", newline="\n") if args.out else sys.stdout
    try:
        for line in sweep_lines(p, eps, ns):
            fh.write(line + "\n")
            fh.flush()
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# -- protocol -----------------------------------------------------------------------


def load_scenario(ref: str) -> dict:
    p = Path(ref)
    if not p.is_file():
        try:
            p = scenarios.path(ref)
        except FileNotFoundError:
            raise InputError(f"no scenario file or bundled scenario named {ref!r}") from None
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: line {exc.lineno}: {exc.msg}") from None


def _channel(cfg: dict) -> ChannelInstance:
    src = cfg.get("source") or {}
    kind = src.get("kind")
    if kind == "bsc":
        return bsc_test_channel(exact(src["dbar"]))
    if kind == "erasure":
        return erasure_test_channel(exact(src["e"]), exact(src["dbar"]))
    if kind == "custom":
        return ChannelInstance([exact(v) for v in src["px"]], tuple(tuple(exact(v) for v in r) for r in src["W"]))
    raise InputError(f"unknown source kind {kind!r}; expected bsc, erasure or custom")


def _distortion(cfg: dict) -> DistortionSpec:
    d = cfg.get("distortion", "hamming")
    if d == "hamming":
        base = hamming_distortion()
    elif d == "erasure":
        base = erasure_distortion()
    elif isinstance(d, list):
        base = DistortionSpec(tuple(tuple(r) for r in d))
    else:
        raise InputError(f"unknown distortion {d!r}")
    dstar = cfg.get("dstar")
    return DistortionSpec(base.table, exact(dstar) if dstar is not None else None)


def _derand_levels(derand: str | None, cfg: dict) -> list[str]:
    if derand:
        return {"none": ["none"], "bestv": ["none", "bestv"], "bestvt": ["none", "bestv", "bestvt"]}[derand]
    levels = cfg.get("derand", list(DERAND_LEVELS))
    for lvl in levels:
        if lvl not in DERAND_LEVELS:
            raise InputError(f"unknown derandomization level {lvl!r}")
    return levels


def _quantization_demo(qcfg: dict, seed_override) -> dict:
    if qcfg.get("generator") != "extended_hamming_8_4":
        raise InputError("only the bundled extended_hamming_8_4 generator is available for quantization")
    G = EXTENDED_HAMMING_8_4
    n = G.cols
    blocks = int(qcfg.get("blocks", 16))
    n_erased = int(qcfg.get("erasures", 4))
    if not 0 <= n_erased <= n:
        raise InputError("erasure count outside [0, n]")
    seed = seed_override if seed_override is not None else int(qcfg.get("seed", 0))
    GT = G.transpose()
    rows, agree, total_mismatch = [], True, 0
    for i in range(blocks):
        g = rng(seed, i)
        bits = [int(b) for b in g.integers(0, 2, size=n)]
        for pos in g.permutation(n)[:n_erased]:
            bits[int(pos)] = ERASED
        res = erasure_quantize_dual_code(bits, G)
        known = [j for j, s in enumerate(bits) if s != ERASED]
        sub = BitMatrix.from_ints([GT.row_ints()[j] for j in known], G.rows)
        target = sum(1 << r for r, j in enumerate(known) if bits[j] == 1)
        solvable = solve_affine(sub, target) is not None
        agree &= (res.distortion == 0) == solvable
        total_mismatch += res.distortion
        rows.append({
            "source": "".join("?" if s == ERASED else str(s) for s in bits),
            "index": res.index,
            "reconstruction": "".join(str(b) for b in res.reconstruction),
            "mismatches": res.distortion,
            "exact_cover": solvable,
        })
    return {
        "blocks": rows,
        "mean_distortion": Fraction(total_mismatch, blocks * n),
        "zero_distortion_iff_solvable": agree,
    }


def run_protocol(cfg: dict, seed=None, n=None, k=None, derand=None) -> dict:
    inst = _channel(cfg)
    n = int(n if n is not None else cfg.get("n", 0))
    k = int(k if k is not None else cfg.get("k", 0))
    if n < 1 or not 1 <= k <= n:
        raise InputError(f"need n >= 1 and 1 <= k <= n, got n={n}, k={k}")
    hcfg = cfg.get("hash", {"mode": "exhaustive"})
    mode = hcfg.get("mode", "exhaustive")
    hseed = seed if seed is not None else int(hcfg.get("seed", 0))
    joint = inst.joint()
    stats = family_delta_stats(joint, n, k, mode=mode, count=int(hcfg.get("count", 1000)), seed=hseed)
    H = ToeplitzFamily(n, k).member(stats.argmin)
    ext = extend_to_invertible(H)
    proto = build_protocol(inst, ext)
    sim = simulation_distance(proto)
    dspec = _distortion(cfg)
    lossy = lossy_from_simulation(proto, dspec, _derand_levels(derand, cfg))
    checks = {
        "extension_certified": all(ext.certify().values()),
        "simulation_le_pa_delta": sim <= stats.minimum,
        **lossy.checks,
    }
    report = {
        "command": "protocol",
        "scenario": cfg.get("name"),
        "n": n,
        "k": k,
        "family": {
            "mode": mode,
            "members": stats.count,
            "mean_delta": stats.mean,
            "min_delta": stats.minimum,
            "std_error": stats.std_error,
            "seed": hseed if mode == "sampled" else None,
        },
        "chosen": protocol_descriptor(ext, member=stats.argmin, seed=hseed if mode == "sampled" else None),
        "pa_delta": stats.minimum,
        "simulation_distance": sim,
        "rate": lossy.rate,
        "lossy": {
            "dbar": lossy.dbar,
            "randomized": lossy.randomized,
            "best_v": None if lossy.best_v is None else {"v": lossy.best_v[0], "distortion": lossy.best_v[1]},
            "best_vt": None if lossy.best_vt is None else {"v": lossy.best_vt[0], "distortion": lossy.best_vt[1]},
            "excess": lossy.excess,
            "flags": list(lossy.flags),
        },
    }
    src = cfg.get("source", {})
    if src.get("kind") == "bsc":
        report["rate_distortion_reference"] = rd_hamming(exact(src["dbar"])).rate
    elif src.get("kind") == "erasure":
        report["rate_distortion_reference"] = rd_erasure_quantization(exact(src["e"]), exact(src["dbar"])).rate
    if cfg.get("lhl_check") and mode == "exhaustive":
        lhl = best_lhl_eta(joint, n, k)
        ok_all = all(within_expected_bound(stats.mean, e, 1 << k, b) for e, b in lhl["candidates"])
        report["leftover_hash"] = {"eta": lhl["eta"], "beta": lhl["beta"], "bound": lhl["bound"],
                                   "family_mean": stats.mean}
        checks["family_mean_within_bound"] = within_expected_bound(stats.mean, lhl["eta"], 1 << k, lhl["beta"])
        checks["family_mean_within_bound_every_eta"] = ok_all
    if "quantization" in cfg:
        q = _quantization_demo(cfg["quantization"], seed)
        report["quantization"] = q
        checks["quantization_matches_solvability"] = q["zero_distortion_iff_solvable"]
    report["checks"] = checks
    return report


def cmd_protocol(args) -> int:
    if not args.input:
        raise InputError(f"protocol needs --input <scenario>; bundled: {', '.join(scenarios.available())}")
    cfg = load_scenario(args.input)
    report = run_protocol(cfg, seed=args.seed, n=args.n, k=args.k, derand=args.derand)
    emit(dump_json(report), args.out)
    if not all(report["checks"].values()):
        raise AssertionFailure("protocol checks failed")
    return EXIT_OK


# -- selftest -----------------------------------------------------------------------


def cmd_selftest(args) -> int:
    seed = args.seed if args.seed is not None else 0
    res = run_selftest(count=100, seed=seed)
    report = {name: {"passed": t.passed, "failed": len(t.failed), "first_failures": t.failed[:5]}
              for name, t in res.items()}
    report["rd_references"] = {
        "hamming_0": rd_hamming(0).rate == 1,
        "hamming_half": rd_hamming(Fraction(1, 2)).rate == 0,
    }
    emit(dump_json({"command": "selftest", "seed": seed, "results": report}), args.out)
    if not all(t.ok for t in res.values()) or not all(report["rd_references"].values()):
        raise AssertionFailure("selftest failures")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fblab", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=("bounds", "sweep", "protocol", "selftest"))
    ap.add_argument("--selftest", action="store_true", help="run the property suite (same as the selftest command)")
    ap.add_argument("--input", help="joint file (bounds) or scenario JSON / bundled name (protocol)")
    ap.add_argument("--p", help="crossover probability, e.g. 0.11 or 11/100")
    ap.add_argument("--eps", help="security parameter, e.g. 1e-10")
    ap.add_argument("--n", type=int, help="blocklength")
    ap.add_argument("--n-list", help="comma list or start:stop:step ranges, e.g. 100:5000:100")
    ap.add_argument("--k", type=int, help="hash output bits")
    ap.add_argument("--seed", type=int, help="PRNG seed")
    ap.add_argument("--qz", default="marginal", choices=QZ_POLICIES, help="Q_Z policy for the achievability bound")
    ap.add_argument("--derand", choices=DERAND_LEVELS, help="derandomization level for protocol runs")
    ap.add_argument("--backend", default="rational", choices=BACKENDS)
    ap.add_argument("--out", help="write output to this path instead of stdout")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


COMMANDS = {"bounds": cmd_bounds, "sweep": cmd_sweep, "protocol": cmd_protocol, "selftest": cmd_selftest}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cmd = "selftest" if args.selftest else args.command
    if cmd is None:
        ap.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cmd](args)
    except InputError as exc:
        print(f"fblab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GuardError as exc:
        print(f"fblab: size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (AssertionFailure, AssertionError) as exc:
        print(f"fblab: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
