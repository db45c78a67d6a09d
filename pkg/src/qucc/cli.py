"""``qucc info|run|scan``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from math import comb
from typing import Optional

from .determinant import ContractViolation, enumerate_excitations, hartree_fock
from .engine import UccEngine
from .fci import fci_solve, track_hf_state
from .integrals import FcidumpError, IntegralSet, hf_energy, read_fcidump, with_core_energy
from .manifest import METHODS, ManifestError, load_manifest
from .mp2 import mp2_amplitudes, mp2_energy
from .solver import SEED_ORDERS, QuccConfig, promote_and_iterate, ucc_energy

CSV_COLUMNS = ("label", "geometry_parameter", "method", "L", "energy_hartree", "e_minus_fci",
               "promoted_singles", "wall_seconds", "error")
TRACK_ROOTS = 4


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("QUCC_THREADS", "1")))
    except ValueError:
        return 1


def _finite(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _load(path: str, nuclear_repulsion: Optional[float] = None) -> IntegralSet:
    ints = read_fcidump(path)
    if nuclear_repulsion is not None:
        ints = with_core_energy(ints, nuclear_repulsion)
    return ints


def _config(args, n_large: int) -> QuccConfig:
    return QuccConfig(
        n_large=n_large,
        fd_validation=getattr(args, "fd_check", False),
        promote_singles=args.promote_singles == "on",
        seed_order=args.seed_order,
        threads=args.threads,
    )


def _fci_benchmark(ints: IntegralSet, track: bool, threads: int):
    """(benchmark energy, root index, solution)."""
    n_roots = 1
    if track:
        dim = comb(ints.n_spatial, ints.n_alpha) * comb(ints.n_spatial, ints.n_beta)
        n_roots = min(TRACK_ROOTS, dim)
    sol = fci_solve(ints, n_roots=n_roots, threads=threads)
    idx = track_hf_state(sol) if track else 0
    return float(sol.energies[idx]), idx, sol


def info_report(ints: IntegralSet) -> str:
    ref = hartree_fock(ints.n_spatial, ints.n_alpha, ints.n_beta)
    excs = enumerate_excitations(ref, ints.n_spatial)
    n1 = sum(1 for e in excs if e.rank == 1)
    n2 = len(excs) - n1
    one, two = ints.unique_counts()
    dim = comb(ints.n_spatial, ints.n_alpha) * comb(ints.n_spatial, ints.n_beta)
    return "\n".join([
        f"M={ints.n_spatial} n_e={ints.n_electrons} S_z={ints.ms2 / 2:g}",
        f"fci_dimension={dim}",
        f"singles={n1} doubles={n2} total={n1 + n2}",
        f"one-body<={one} two-body<={two}",
    ])


def run_method(ints: IntegralSet, method: str, n_large: Optional[int], args,
               engine: Optional[UccEngine] = None, ranked=None) -> dict:
    ref = hartree_fock(ints.n_spatial, ints.n_alpha, ints.n_beta)
    e_ref = hf_energy(ints, ref)
    if method == "hf":
        return {"method": "hf", "energy": e_ref, "e_reference": e_ref}
    if method == "mp2":
        corr = mp2_energy(ints, ref)
        return {"method": "mp2", "energy": e_ref + corr, "e_reference": e_ref,
                "e_mp2_correlation": corr}
    if method == "fci":
        energy, idx, sol = _fci_benchmark(ints, args.track_hf, args.threads)
        return {"method": "fci", "energy": energy, "e_reference": e_ref, "root": idx,
                "energies": [float(x) for x in sol.energies],
                "hf_overlaps": [float(x) for x in sol.hf_overlaps],
                "dimension": sol.dimension, "solver": sol.method,
                "max_residual": float(max(sol.residuals))}
    if n_large is None:
        raise ContractViolation(f"method {method} needs --large L")
    if ranked is None:
        ranked = mp2_amplitudes(ints, ref)
    if engine is None:
        engine = UccEngine(ints, ref, threads=args.threads)
    cfg = _config(args, n_large)
    if method == "ucc":
        energy, factors = ucc_energy(ints, ref, ranked, cfg, engine)
        index_of = {e.excitation: e.canonical_index for e in ranked}
        return {"method": "ucc", "energy": energy, "e_reference": e_ref,
                "e_ucc_large": energy, "n_large": len(factors),
                "large_angles": [(index_of[f.excitation], f.angle) for f in factors]}
    if method == "qucc":
        res = promote_and_iterate(ints, ref, ranked, cfg, engine)
        out = {"method": "qucc", "energy": res.e_qucc}
        out.update(res.to_dict(ints.n_spatial))
        return out
    raise ContractViolation(f"unknown method {method!r}")


def cmd_info(args) -> int:
    print(info_report(_load(args.fcidump, args.nuclear_repulsion)))
    return 0


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    try:
        ints = _load(args.fcidump, args.nuclear_repulsion)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            record = run_method(ints, args.method, args.large, args)
        record["fcidump"] = args.fcidump
        if caught:
            record["warnings"] = [str(w.message) for w in caught]
    except Exception as exc:  # every failure becomes a JSON error object
        err = {"error": {"type": type(exc).__name__, "message": str(exc)},
               "fcidump": args.fcidump, "method": args.method}
        print(json.dumps(_finite(err)))
        return 1
    if not args.no_timing:
        record["wall_seconds"] = time.perf_counter() - t0
    print(json.dumps(_finite(record), indent=2))
    return 0


def _scan_entry(entry, requests, args, track: bool):
    """All rows of one manifest entry, in request order."""
    rows = []
    try:
        ints = _load(str(entry.fcidump_path), entry.nuclear_repulsion)
        t0 = time.perf_counter()
        e_fci, _, _ = _fci_benchmark(ints, track, args.threads)
        fci_time = time.perf_counter() - t0
        ref = hartree_fock(ints.n_spatial, ints.n_alpha, ints.n_beta)
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [_row(entry, m, n, None, None, None, None, args, msg) for m, n in requests]
    engine = ranked = None
    for method, n_large in requests:
        t0 = time.perf_counter()
        if method == "fci":
            rows.append(_row(entry, method, n_large, e_fci, e_fci, None, fci_time, args))
            continue
        try:
            if method in ("ucc", "qucc") and engine is None:
                engine = UccEngine(ints, ref, threads=args.threads)
                ranked = mp2_amplitudes(ints, ref)
            rec = run_method(ints, method, n_large, args, engine, ranked)
            promoted = len(rec["promoted_singles"]) if method == "qucc" else None
            rows.append(_row(entry, method, n_large, rec["energy"], e_fci, promoted,
                             time.perf_counter() - t0, args))
        except Exception as exc:
            rows.append(_row(entry, method, n_large, None, e_fci, None,
                             time.perf_counter() - t0, args, f"{type(exc).__name__}: {exc}"))
    return rows


def _row(entry, method, n_large, energy, e_fci, promoted, seconds, args, error=""):
    def num(x):
        return "" if x is None else format(x, ".15e")
    return {
        "label": entry.label,
        "geometry_parameter": repr(entry.geometry_parameter),
        "method": method,
        "L": "" if n_large is None else str(n_large),
        "energy_hartree": num(energy),
        "e_minus_fci": num(None if energy is None or e_fci is None else energy - e_fci),
        "promoted_singles": "" if promoted is None else str(promoted),
        "wall_seconds": "" if args.no_timing or seconds is None else f"{seconds:.3f}",
        "error": error,
    }


def scan_csv(manifest, args) -> str:
    track = args.track_hf or manifest.track_hf
    requests = {}
    for entry, method, n_large in manifest.rows():
        requests.setdefault(entry.label, []).append((method, n_large))
    jobs = max(1, args.jobs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if jobs == 1:
            results = [_scan_entry(e, requests[e.label], args, track) for e in manifest.entries]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_scan_entry, e, requests[e.label], args, track)
                           for e in manifest.entries]
                results = [f.result() for f in futures]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rows in results:
        writer.writerows(rows)
    return buf.getvalue()


def cmd_scan(args) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (ManifestError, OSError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 1
    text = scan_csv(manifest, args)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_pipeline_flags(p):
    p.add_argument("--promote-singles", choices=("on", "off"), default="on")
    p.add_argument("--seed-order", choices=SEED_ORDERS, default="largest-first")
    p.add_argument("--threads", type=int, default=default_threads(), metavar="K",
                   help="worker threads for H application (default $QUCC_THREADS or 1)")
    p.add_argument("--track-hf", action="store_true",
                   help="benchmark against the FCI root with the largest HF overlap")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qucc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="summarize an FCIDUMP file")
    p.add_argument("fcidump")
    p.add_argument("--nuclear-repulsion", type=float, default=None)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("run", help="single-point calculation, JSON on stdout")
    p.add_argument("fcidump")
    p.add_argument("--method", choices=METHODS, default="qucc")
    p.add_argument("--nuclear-repulsion", type=float, default=None)
    p.add_argument("--large", "-L", type=int, default=None, metavar="L",
                   help="number of exactly treated factors")
    p.add_argument("--fd-check", action="store_true",
                   help="compare the gradient with central finite differences")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", help="run a manifest, CSV on stdout or --output")
    p.add_argument("manifest")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--jobs", type=int, default=1, help="manifest entries run concurrently")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        args.threads = 1
    try:
        return args.func(args)
    except (FcidumpError, OSError) as exc:
        print(f"qucc: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
