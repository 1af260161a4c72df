"""wlmp command line: generate, match, sweep, embed, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import channel, embedding, experiments, geometry, matching, plotting

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING_PAIRS = 3
EXIT_UNKNOWN_LABEL = 4
EXIT_SIZE_MISMATCH = 5
EXIT_AMBIGUOUS_ANCHOR = 6
EXIT_BAD_INPUT = 7


class CliError(Exception):
    def __init__(self, code: int, kind: str, msg: str):
        super().__init__(msg)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


def _eigenvectors(text: str):
    if text == "auto":
        return "auto"
    try:
        idx = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or comma-separated indices like 1,4") from None
    if not idx or min(idx) < 1:
        raise argparse.ArgumentTypeError("eigenvector indices start at 1")
    return idx


def _snr_list(text: str):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated SNR values") from None
    if any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("SNR must be positive")
    return vals


def _anchor(text: str):
    node, sep, pos = text.partition("=")
    if not sep or not node or not pos:
        raise argparse.ArgumentTypeError("expected NODE=POSITION")
    return node, pos


def _write(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _model(args) -> channel.PropagationModel:
    return channel.PropagationModel(args.ref_power, args.ref_distance, args.exponent)


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    ps = geometry.generate_layout(args.kind, args.count, seed=args.seed, shift=args.shift)
    text = geometry.layout_to_json(ps) if args.format == "json" else geometry.layout_to_csv(ps)
    _write(args.out, text)
    if args.measurements:
        rng = np.random.default_rng(args.seed)
        truth = geometry.GroundTruth.random(ps.size, rng)
        perm = np.array(truth.permutation)
        d = geometry.pairwise_distances(ps)[np.ix_(perm, perm)]
        if args.snr is not None:
            d = channel.noisy_distance_matrix(d, _model(args), channel.NoiseSpec(args.snr, rng.integers(2**63)))
        labels = [f"n{i}" for i in range(ps.size)]
        rssi = channel.rssi_matrix(d, _model(args))
        Path(args.measurements).write_text(channel.measurements_to_csv(labels, rssi), encoding="utf-8")
        if args.truth:
            rows = ["node_label,position_label"] + [f"{labels[i]},{ps.labels[p]}" for i, p in enumerate(perm)]
            Path(args.truth).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return 0


def _load_truth(path, node_labels, pos_labels) -> geometry.GroundTruth:
    node_idx = {lab: i for i, lab in enumerate(node_labels)}
    pos_idx = {lab: i for i, lab in enumerate(pos_labels)}
    perm = [None] * len(node_labels)
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        if not line.strip():
            continue
        n, p = (t.strip() for t in line.split(","))
        if n not in node_idx or p not in pos_idx:
            raise CliError(EXIT_UNKNOWN_LABEL, "unknown-label", f"truth file names unknown label in {line!r}")
        perm[node_idx[n]] = pos_idx[p]
    if any(p is None for p in perm):
        raise CliError(EXIT_SIZE_MISMATCH, "size-mismatch", "truth file does not cover every node")
    return geometry.GroundTruth(tuple(perm))


def cmd_match(args) -> int:
    ps = geometry.load_layout(args.positions)
    try:
        labels, rssi = channel.load_measurements(args.measurements)
    except channel.MissingPairsError as exc:
        raise CliError(EXIT_MISSING_PAIRS, "missing-pairs", str(exc)) from None
    if len(labels) != ps.size:
        raise CliError(EXIT_SIZE_MISMATCH, "size-mismatch", f"{len(labels)} nodes measured but {ps.size} positions")
    node_d = channel.distances_from_rssi_matrix(rssi, _model(args))
    pos_d = geometry.pairwise_distances(ps)

    if args.eigenvectors == "auto":
        sel = embedding.auto_eigenvectors(pos_d, ps.dim)
        chosen = sel.indices
    else:
        sel, chosen = None, args.eigenvectors
        if max(chosen) > ps.size - 1:
            raise CliError(EXIT_BAD_INPUT, "bad-eigenvectors", f"eigenvector index {max(chosen)} exceeds {ps.size - 1}")
    p = embedding.embed(pos_d, chosen)
    n = embedding.embed(node_d, chosen)

    if args.anchor:
        node_lab, pos_lab = args.anchor
        if node_lab not in labels or pos_lab not in ps.labels:
            raise CliError(EXIT_UNKNOWN_LABEL, "unknown-label", f"anchor {node_lab}={pos_lab} names an unknown label")
        try:
            a = matching.match_with_anchor(n, p, labels.index(node_lab), ps.labels.index(pos_lab))
        except matching.AmbiguousAnchorError as exc:
            raise CliError(EXIT_AMBIGUOUS_ANCHOR, "ambiguous-anchor", str(exc)) from None
    else:
        a = matching.match_with_orientation_search(n, p)

    rows = ["node_label,position_label,pair_cost"]
    rows += [f"{labels[i]},{ps.labels[j]},{float(a.pair_costs[i])!r}" for i, j in enumerate(a.pairs)]
    summary = {
        "total_cost": a.total_cost,
        "orientation": list(a.orientation),
        "ambiguous": a.ambiguous,
        "eigenvectors": list(chosen),
    }
    if sel is not None and not sel.resolved:
        summary["unresolved_pairs"] = [[ps.labels[i], ps.labels[j]] for i, j in sel.unresolved_pairs]
    if args.truth:
        truth = _load_truth(args.truth, labels, ps.labels)
        summary["accuracy"] = experiments.accuracy(a, truth)
    prefix = args.out
    Path(f"{prefix}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    Path(f"{prefix}.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    print(json.dumps(summary))
    return 0


def cmd_sweep(args) -> int:
    model = _model(args)
    if args.preset:
        try:
            r = experiments.recipe(args.preset)
        except KeyError as exc:
            raise CliError(EXIT_BAD_INPUT, "unknown-preset", exc.args[0]) from None
    else:
        if not args.kind:
            raise CliError(EXIT_USAGE, "usage", "sweep needs --preset or --kind")
        curve = experiments.Curve(args.kind, args.kind, args.eigenvectors, args.count, args.shift, args.layout_seed, args.alignment)
        r = experiments.Recipe(args.kind, (curve,))
    results = experiments.run_recipe(r, args.seed, args.realizations, args.snr, args.jobs, model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        stem = r.name if len(results) == 1 else f"{r.name}_{res.label}"
        (out / f"{stem}.csv").write_text(res.to_csv(), encoding="utf-8")
        if args.detail:
            (out / f"{stem}_trials.csv").write_text(res.trials_csv(), encoding="utf-8")
    if args.plot:
        (out / f"{r.name}.svg").write_text(plotting.sweep_svg(results, r.name), encoding="utf-8")
    for res in results:
        print(f"{res.label}: " + " ".join(f"{p.snr:.3g}:{p.mean:.3f}" for p in res.points))
    return 0


def cmd_embed(args) -> int:
    if args.measurements:
        _, rssi = channel.load_measurements(args.source)
        d = channel.distances_from_rssi_matrix(rssi, _model(args))
    else:
        d = geometry.pairwise_distances(geometry.load_layout(args.source))
    dec = embedding.spectrum(d)
    k = args.count + 1 if args.count else None
    if args.format == "json":
        kk = dec.size if k is None else min(k, dec.size)
        text = json.dumps(
            {"eigenvalues": dec.eigenvalues[:kk].tolist(), "eigenvectors": dec.eigenvectors[:, :kk].T.tolist()}
        ) + "\n"
    else:
        text = embedding.dump_csv(dec, k)
    _write(args.out, text)
    return 0


def cmd_inspect(args) -> int:
    ps = geometry.load_layout(args.positions)
    d = geometry.pairwise_distances(ps)
    sel = embedding.auto_eigenvectors(d, ps.dim, args.kmax, args.resolution)
    dec = embedding.spectrum(d)
    report = {
        "positions": ps.size,
        "dim": ps.dim,
        "eigenvalues": dec.eigenvalues[1 : (args.kmax or ps.dim + 4) + 1].tolist(),
        "selected": list(sel.indices),
        "resolved": sel.resolved,
        "min_separation": sel.min_separation,
        "threshold": sel.threshold,
        "unresolved_pairs": [[ps.labels[i], ps.labels[j]] for i, j in sel.unresolved_pairs],
    }
    if args.format == "json":
        print(json.dumps(report))
    else:
        for key, val in report.items():
            print(f"{key},{json.dumps(val)}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wlmp", description="Match wireless nodes to blueprint positions with diffusion maps.")
    chan = _Parser(add_help=False)
    chan.add_argument("--ref-power", type=float, default=channel.PropagationModel.ref_power, help="RSSI at the reference distance (dBm)")
    chan.add_argument("--ref-distance", type=float, default=channel.PropagationModel.ref_distance)
    chan.add_argument("--exponent", type=float, default=channel.PropagationModel.path_loss_exponent)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[chan], help="write a built-in layout")
    g.add_argument("--kind", required=True, choices=geometry.LAYOUT_KINDS)
    g.add_argument("--count", type=int)
    g.add_argument("--shift", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out", "-o")
    g.add_argument("--measurements", help="also write simulated RSSI for shuffled nodes here")
    g.add_argument("--truth", help="node->position ground truth for --measurements")
    g.add_argument("--snr", type=float, help="noise level for --measurements (default: noiseless)")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("match", parents=[chan], help="assign measured nodes to positions")
    m.add_argument("positions")
    m.add_argument("measurements")
    m.add_argument("--eigenvectors", type=_eigenvectors, default="auto")
    m.add_argument("--anchor", type=_anchor, help="NODE=POSITION of one node with known position")
    m.add_argument("--truth", help="ground truth CSV; adds accuracy to the summary")
    m.add_argument("--out", "-o", default="assignment", help="output prefix for .csv and .json")
    m.set_defaults(func=cmd_match)

    s = sub.add_parser("sweep", parents=[chan], help="accuracy-vs-SNR Monte-Carlo sweep")
    s.add_argument("--preset", help=f"one of {', '.join(experiments.figure_recipes())}")
    s.add_argument("--kind", choices=geometry.LAYOUT_KINDS)
    s.add_argument("--count", type=int)
    s.add_argument("--shift", type=float, default=0.0)
    s.add_argument("--layout-seed", type=int, default=0)
    s.add_argument("--eigenvectors", type=_eigenvectors, default="auto")
    s.add_argument("--alignment", choices=("search", "anchor"))
    s.add_argument("--snr", type=_snr_list, help="comma-separated SNR grid")
    s.add_argument("--realizations", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--plot", action="store_true", help="also write an SVG plot")
    s.add_argument("--detail", action="store_true", help="also write per-trial CSVs")
    s.add_argument("--out", "-o", default="sweep")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("embed", parents=[chan], help="dump the Laplacian eigen-decomposition")
    e.add_argument("source", help="layout file, or RSSI CSV with --measurements")
    e.add_argument("--measurements", action="store_true")
    e.add_argument("--count", type=int, help="number of non-trivial eigenvectors to dump")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out", "-o")
    e.set_defaults(func=cmd_embed)

    i = sub.add_parser("inspect", help="eigenvector resolution diagnostics for a blueprint")
    i.add_argument("positions")
    i.add_argument("--kmax", type=int)
    i.add_argument("--resolution", type=float, default=0.1)
    i.add_argument("--format", choices=("csv", "json"), default="csv")
    i.set_defaults(func=cmd_inspect)
    return parser


def _fail(code: int, kind: str, msg: str) -> int:
    msg = " ".join(str(msg).split())
    print(f"wlmp: error[{kind}]: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    level = os.environ.get("WLMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        return _fail(exc.code, exc.kind, exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "realizations", 2) < 2:
        return _fail(EXIT_USAGE, "usage", "--realizations must be at least 2")
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, exc.kind, exc)
    except channel.UnknownLabelError as exc:
        return _fail(EXIT_UNKNOWN_LABEL, "unknown-label", exc)
    except channel.MissingPairsError as exc:
        return _fail(EXIT_MISSING_PAIRS, "missing-pairs", exc)
    except (geometry.LayoutError, channel.MeasurementError, embedding.DisconnectedGraphError) as exc:
        return _fail(EXIT_BAD_INPUT, "bad-input", exc)
    except OSError as exc:
        return _fail(EXIT_ERROR, "io", exc)
    except ValueError as exc:
        return _fail(EXIT_ERROR, "error", exc)


if __name__ == "__main__":
    sys.exit(main())
