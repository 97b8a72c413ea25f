"""Command-line front end.

``diophlab <command> CONFIG [--jobs N] [--seed U64] [--out DIR] [--format F]``.
Exit status: 0 when the run certifies or passes, 2 when it produces a
witnessed failure or a negative verdict, 1 on errors.
"""
from __future__ import annotations

import argparse
import sys

from .config import COMMANDS, load_config, parse_scalar
from .errors import DiophlabError
from .reports import ReportSink

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


def _sets(cfg):
    return cfg.generator("p"), cfg.generator("q")


def _stamp_certificate(text, sink):
    head, _, rest = text.partition("\n")
    return f"{head}\n# config_hash {sink.config_hash} seed {sink.seed}\n{rest}"


def cmd_check_uniform(cfg, sink, jobs):
    from .uniformity import check_uniform, check_uniform_inhom

    P, Q = _sets(cfg)
    t0, T = cfg.window()
    A = cfg.matrix()
    if cfg.command == "check-uniform-inhom":
        res = check_uniform_inhom(A, cfg.shift(), cfg.psi(), P, Q, t0, T)
    else:
        res = check_uniform(A, cfg.psi(), P, Q, t0, T)
    sink.text(_stamp_certificate(res.to_text(), sink), ".cert")
    sink.json(res.to_json())
    sink.csv(["t", "p", "q", "remainder"],
             [(str(c.t), list(map(str, c.p)), list(map(str, c.q)), str(c.remainder)) for c in res.checkpoints])
    print(f"{res.verdict}: window [{t0}, {T}], {len(res.checkpoints)} checkpoints")
    return EXIT_OK if res.verdict == "certified" else EXIT_NEGATIVE


def cmd_dirichlet_margin(cfg, sink, jobs):
    from .uniformity import dirichlet_margin

    P, Q = _sets(cfg)
    t0, T = cfg.window()
    b = cfg.shift() if cfg.has("problem", "b") else None
    res = dirichlet_margin(cfg.matrix(), P, Q, t0, T, b)
    sink.json({"margin": res["margin"], "argmax_t": str(res["argmax_t"]), "checkpoints": res["checkpoints"],
               "window": [str(t0), str(T)]})
    print(f"margin {res['margin']:.6f} at t = {res['argmax_t']}")
    return EXIT_OK


def cmd_build_witness(cfg, sink, jobs):
    from .uniformity import build_uniform_witness, enumerate_subspaces

    P, Q = _sets(cfg)
    t0, T = cfg.window()
    avoid = enumerate_subspaces(cfg.m, cfg.n, int(cfg.scalar("avoid", 0)))
    res = build_uniform_witness(cfg.psi(), P, Q, t0, T, avoid=avoid, seed=cfg.seed)
    sink.json(res.to_json())
    if res.verdict != "certified":
        print(f"obstructed at stage {res.stage}: {res.reason}")
        return EXIT_NEGATIVE
    sink.json({"final_box": res.final_box.to_json(), "verified": res.verify_stages()}, ".box.json")
    print(f"certified: {len(res.stages)} stages, final radius {float(res.stages[-1].radius):.3e}")
    return EXIT_OK


def _restrict(cfg):
    from .density import subcoll_filter

    if not cfg.has("scan", "restrict"):
        return None
    kind, a, b = cfg.get("scan", "restrict").split()
    return subcoll_filter(parse_scalar(a), parse_scalar(b), closed=kind.endswith("closed"))


def cmd_density_scan(cfg, sink, jobs):
    from .density import cell_grid, coverage_scan

    P, Q = _sets(cfg)
    box = cfg.box()
    h = cfg.scalar("h")
    rep = coverage_scan(P, Q, box, float(h), cfg.scalar("bound"), pair_filter=_restrict(cfg), jobs=jobs)
    sink.json(rep.to_json())
    _, centers = cell_grid(box, float(h))
    sink.csv(["cell", "center", "covered", "distance"],
             [(i, centers[i].tolist(), int(rep.covered[i]), float(rep.distances[i]))
              for i in range(rep.n_cells)])
    if box.m * box.n == 2:
        sink.svg(rep.grid(), title=f"coverage h={h}", lo=(float(box.lo[0]), float(box.lo[1])),
                 hi=(float(box.hi[0]), float(box.hi[1])))
    print(f"covered fraction {rep.fraction:.6f} ({rep.n_cells} cells, {rep.subspaces} subspaces)")
    return EXIT_OK if rep.fraction == 1.0 else EXIT_NEGATIVE


def cmd_total_density_probe(cfg, sink, jobs):
    from .density import total_density_probe

    P, Q = _sets(cfg)
    W = cfg.box()
    region = cfg.box("region") if cfg.has("scan", "region") else None
    anchor = (cfg.vector("scan", "anchor_p"), cfg.vector("scan", "anchor_q"))
    pr = total_density_probe(P, Q, anchor, W, float(cfg.scalar("h")), cfg.scalar("bound"), region=region,
                             min_cells=int(cfg.scalar("min_cells", 2)), jobs=jobs)
    sink.json(pr.to_json())
    if W.m * W.n == 2:
        r = pr.region
        sink.svg(pr.covered.reshape(pr.counts), title="total density probe",
                 lo=(float(r.lo[0]), float(r.lo[1])), hi=(float(r.hi[0]), float(r.hi[1])))
    print(f"{pr.collected} subspaces meet the anchor; covered sub-box: {'yes' if pr.found else 'none'}")
    return EXIT_OK if pr.found else EXIT_NEGATIVE


def cmd_logdense_test(cfg, sink, jobs):
    from .logdensity import logdense_test

    P = cfg.generator("p")
    gr = cfg.scalar("grid_ratio")
    rep = logdense_test(P, cfg.vector("scan", "phi"), float(cfg.scalar("eps")), float(cfg.scalar("c_min")),
                        float(cfg.scalar("c_max")), None if gr is None else float(gr))
    sink.json({"direction": rep.direction, "aperture": rep.aperture, "window": rep.window,
               "onset": rep.onset, "passed": rep.passed, "ratio_tail_max": rep.ratio_tail_max,
               "grid_points": len(rep.grid), "misses": len(rep.misses())})
    sink.csv(["C", "hit", "nearest_norm", "ratio_tail_max"], rep.to_rows())
    print(f"{'pass' if rep.passed else 'fail'}: onset {rep.onset}, {len(rep.misses())} misses")
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_caratheodory(cfg, sink, jobs):
    from .convex import HullCertificate, caratheodory_reduce, generalized_caratheodory, origin_in_hull

    S = cfg.directions()
    res = origin_in_hull(S)
    if not isinstance(res, HullCertificate):
        sink.json({"verdict": "separated", "alpha": list(res.alpha), "delta": res.delta})
        print(f"origin is separated: delta = {res.delta:.6g}")
        return EXIT_NEGATIVE
    mode = cfg.get("scan", "mode", "generalized")
    if mode == "generalized":
        sub = generalized_caratheodory(S, S.vectors)
    else:
        sub, _ = caratheodory_reduce(S)
    sink.text(sub.to_text(), ".dirs")
    sink.json({"verdict": "in_hull", "mode": mode, "size": len(sub), "input_size": len(S),
               "subset": [list(map(str, v)) for v in sub.vectors]})
    print(f"{mode} reduction: {len(S)} -> {len(sub)} directions")
    return EXIT_OK


def cmd_ch_condition(cfg, sink, jobs):
    from .convex import check_ch_condition

    ok, bad, _ = check_ch_condition(cfg.directions("theta1"), cfg.directions("theta2"))
    sink.json({"ok": ok, "violating": None if bad is None else list(map(str, bad))})
    print("condition holds" if ok else f"condition fails at {bad}")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_empty_box(cfg, sink, jobs):
    from .convex import empty_open_box
    from .density import box_hits, halfspace_pairs
    from .errors import NoSeparator

    S = cfg.directions()
    v = cfg.vector("sets", "normal")
    try:
        eb = empty_open_box(S, v, float(cfg.scalar("shrink", 0.05)))
    except NoSeparator as e:
        sink.json({"verdict": "no_separator", "reason": str(e)})
        print("origin is in the convex hull: no empty box")
        return EXIT_NEGATIVE
    bound = int(cfg.scalar("audit_bound", 100))
    hits, ex = box_hits(eb.box, halfspace_pairs(v, S.points, bound))
    doc = eb.to_json()
    doc.update({"audit_bound": bound, "hits": hits, "examples": ex})
    sink.json(doc)
    print(f"empty box with C = {eb.C:.6g}; audit hits {hits}")
    return EXIT_OK if hits == 0 else EXIT_NEGATIVE


def cmd_counterexample(cfg, sink, jobs):
    from .errors import AnnulusViolation
    from .logdensity import gap_counterexample

    B, rho, delta = cfg.vector("scan", "gap")
    kw = {}
    if cfg.has("scan", "phi"):
        kw["phi"] = cfg.vector("scan", "phi")
    if cfg.has("scan", "eps"):
        kw["eps"] = float(cfg.scalar("eps"))
    try:
        ce = gap_counterexample(cfg.generator("p"), B, rho, delta, int(cfg.scalar("audit_bound", 10 ** 4)),
                                n=cfg.n, k=cfg.k, **kw)
    except AnnulusViolation as e:
        sink.json({"verdict": "annulus_violation", "index": e.index, "offending": list(map(str, e.offending))})
        print(f"P meets annulus {e.index} at {e.offending}")
        return EXIT_NEGATIVE
    sink.json(ce.to_json())
    print(f"box audited against {ce.pairs_checked} pairs: {ce.hits} hits")
    return EXIT_OK if ce.hits == 0 else EXIT_NEGATIVE


def cmd_jacobian_probe(cfg, sink, jobs):
    from .geometry import jacobian_probe

    res = jacobian_probe(cfg.m, cfg.n, cfg.k, int(cfg.scalar("trials", 100)), cfg.seed,
                         float(cfg.scalar("step", 1e-6)))
    sink.json({"max_rel_error": res["max_rel_error"], "nonzero_fraction": res["nonzero_fraction"],
               "trials": len(res["analytic"])})
    sink.csv(["trial", "analytic", "numeric"],
             [(i, float(a), float(b)) for i, (a, b) in enumerate(zip(res["analytic"], res["numeric"]))])
    print(f"max relative error {res['max_rel_error']:.3e}")
    return EXIT_OK if res["max_rel_error"] <= 1e-4 else EXIT_NEGATIVE


def cmd_project(cfg, sink, jobs):
    from .geometry import project

    tp = project(cfg.vector("scan", "anchor_p"), cfg.vector("scan", "anchor_q"))
    sink.json({"x": list(tp.x), "theta": list(tp.theta)})
    print(f"x = {list(tp.x)}, theta = {list(tp.theta)}")
    return EXIT_OK


HANDLERS = {
    "check-uniform": cmd_check_uniform,
    "check-uniform-inhom": cmd_check_uniform,
    "dirichlet-margin": cmd_dirichlet_margin,
    "build-witness": cmd_build_witness,
    "density-scan": cmd_density_scan,
    "total-density-probe": cmd_total_density_probe,
    "logdense-test": cmd_logdense_test,
    "caratheodory": cmd_caratheodory,
    "ch-condition": cmd_ch_condition,
    "empty-box": cmd_empty_box,
    "counterexample": cmd_counterexample,
    "jacobian-probe": cmd_jacobian_probe,
    "project": cmd_project,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="diophlab", description="Windowed Diophantine approximation lab.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config_path", nargs="?", metavar="CONFIG")
    ap.add_argument("--config", dest="config_flag", metavar="PATH")
    ap.add_argument("--jobs", type=int, default=1, metavar="N")
    ap.add_argument("--seed", type=int, default=None, metavar="U64")
    ap.add_argument("--out", default=None, metavar="DIR")
    ap.add_argument("--format", action="append", default=None, choices=("json", "csv", "svg"))
    return ap


def run(cfg, jobs=1, out=None, formats=None):
    """Dispatch a validated :class:`RunConfig`; returns the exit status."""
    fmts = formats or cfg.formats()
    sink = ReportSink(out or cfg.output_dir(), cfg.get("output", "prefix", cfg.command), fmts,
                      cfg.digest(), cfg.seed)
    return HANDLERS[cfg.command](cfg, sink, max(1, jobs))


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    path = args.config_flag or args.config_path
    if path is None:
        ap.error("a config file is required")
    try:
        cfg = load_config(path, args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise DiophlabError("seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
            cfg.sections["problem"]["seed"] = str(args.seed)
        return run(cfg, args.jobs, args.out, args.format)
    except (DiophlabError, ValueError, OSError, NotImplementedError) as e:
        print(f"diophlab: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
