"""Command-line interface.

Each subcommand reads and writes the text formats in :mod:`scoreconf.formats`.
On failure a single JSON line ``{"error": <code>, "message": ...}`` goes to
stderr and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import decision, evaluate, formats, oracle, synth
from .core import RejectionKey, index_embeddings
from .errors import ScoreConfError, UnknownIdError
from .estimate import estimate_uncertainty
from .scoring import cosine_similarity, score_uncertainty

EXIT_ERROR = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _emit_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")


def _print_json(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def cmd_synth(args) -> None:
    cfg = synth.SynthConfig(
        n_subjects=args.subjects,
        images_per_subject=args.images_per_subject,
        dimension=args.dim,
        intra_class_spread=args.spread,
        sigma_low=args.sigma_low,
        sigma_high=args.sigma_high,
        quality_coupling=args.quality_coupling,
        cross_quality_fraction=args.cross_quality_fraction,
        rng_seed=args.seed,
        sigma_drives_mean=args.sigma_drives_mean,
    )
    if args.samples_out:
        embeddings, sample_sets = synth.generate_with_samples(cfg, args.num_samples)
        formats.write_sample_sets(args.samples_out, sample_sets)
    else:
        embeddings = synth.generate(cfg)
    formats.write_embedding_set(args.output, embeddings)


def cmd_estimate(args) -> None:
    sample_sets = formats.read_sample_sets(args.samples)
    embeddings = [
        estimate_uncertainty(s, normalize_samples=args.normalize_samples) for s in sample_sets
    ]
    formats.write_embedding_set(args.output, embeddings)


def cmd_pairs(args) -> None:
    embeddings = formats.read_embedding_set(args.set)
    cfg = evaluate.EvalConfig(
        imposters_per_image=args.imposters_per_image,
        rng_seed=args.seed,
        dedup_imposters=args.dedup,
    )
    formats.write_pairs(args.output, evaluate.build_pairs(embeddings, cfg))


def _load_scored(args):
    by_id = index_embeddings(formats.read_embedding_set(args.set))
    pairs = formats.read_pairs(args.pairs)
    for p in pairs:
        for pid in (p.probe_id, p.reference_id):
            if pid not in by_id:
                raise UnknownIdError(f"pair references unknown image id {pid!r}")
    return by_id, pairs


def cmd_calibrate(args) -> None:
    by_id, pairs = _load_scored(args)
    scored = [
        (cosine_similarity(by_id[p.probe_id], by_id[p.reference_id]), p.label) for p in pairs
    ]
    calib = evaluate.calibrate_threshold(scored, args.fmr_target)
    formats.write_calibration(args.output, calib)


def cmd_score(args) -> None:
    by_id, pairs = _load_scored(args)
    calib = formats.read_calibration(args.calib)
    alpha = decision.resolve_alpha(args.alpha)
    params = decision.ConfidenceParams(alpha=alpha, threshold=calib.threshold, clamp=args.clamp)
    results = decision.score_pairs(by_id, pairs, params)
    formats.write_results(args.output, results, alpha=alpha, clamp=args.clamp)


def cmd_erc(args) -> None:
    results, meta = formats.read_results(args.results)
    keys = list(RejectionKey) if args.key == "all" else [RejectionKey(args.key)]
    cfg = evaluate.EvalConfig(erc_steps=args.steps, max_reject=args.max_reject)
    threshold = float(meta["threshold"])
    curves = [evaluate.erc(results, k, cfg, threshold) for k in keys]
    formats.write_erc_curves(args.output, curves)
    _print_json(
        {
            c.rejection_key.value: {
                "auc": evaluate.erc_auc(c) if len(c.points) >= 2 else None,
                "fnmr_at_0": c.points[0].fnmr if c.points else None,
                "exhausted_at": c.exhausted_at,
            }
            for c in curves
        }
    )


def cmd_heatmap(args) -> None:
    results, _ = formats.read_results(args.results)
    conf_range = (0.0, 1.0) if args.measure == "decision" else None
    heat = decision.confidence_heatmap_data(
        results,
        bins=(args.bins, args.bins),
        score_range=(args.score_min, args.score_max),
        confidence_range=conf_range,
        measure=args.measure,
    )
    formats.write_heatmap(args.output, heat)


def cmd_oracle(args) -> None:
    by_id = index_embeddings(formats.read_embedding_set(args.set))
    for pid in (args.probe, args.reference):
        if pid not in by_id:
            raise UnknownIdError(f"unknown image id {pid!r}")
    x, y = by_id[args.probe], by_id[args.reference]
    params = decision.ConfidenceParams(alpha=decision.resolve_alpha(args.alpha), threshold=args.threshold, clamp=False)
    _print_json(
        {
            "score": cosine_similarity(x, y),
            "score_uncertainty": score_uncertainty(x, y),
            "mc_score_std": oracle.mc_score_std(x, y, args.n, args.seed, args.renormalize),
            "one_minus_confidence": 1.0 - decision.decision_confidence(x, y, params),
            "mc_decision_std": oracle.mc_decision_confidence_std(
                x, y, params.alpha, params.threshold, args.n, args.seed, args.renormalize
            ),
        }
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="scoreconf",
        description="Score uncertainty and decision confidence for probabilistic embeddings.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic embedding set")
    p.add_argument("--subjects", type=int, default=200)
    p.add_argument("--images-per-subject", type=int, default=5)
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--spread", type=float, default=synth.SynthConfig.intra_class_spread,
                   help="intra-class angular spread (radians, approx.)")
    p.add_argument("--sigma-low", type=float, default=synth.SynthConfig.sigma_low)
    p.add_argument("--sigma-high", type=float, default=synth.SynthConfig.sigma_high)
    p.add_argument("--quality-coupling", type=float, default=-0.9)
    p.add_argument("--cross-quality-fraction", type=float, default=0.0)
    p.add_argument("--sigma-drives-mean", action="store_true",
                   help="displace each mean by noise drawn from its own sigma")
    p.add_argument("--samples-out", help="also write stochastic samples to this file")
    p.add_argument("--num-samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="estimate sigma from stochastic samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--no-normalize-samples", dest="normalize_samples", action="store_false")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("pairs", help="build genuine and random imposter pairs")
    p.add_argument("--set", required=True)
    p.add_argument("--imposters-per-image", type=int, default=evaluate.DEFAULT_IMPOSTERS_PER_IMAGE)
    p.add_argument("--dedup", action="store_true", help="drop imposter pairs drawn from both sides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("calibrate", help="threshold at a fixed false match rate")
    p.add_argument("--set", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--fmr-target", type=float, default=evaluate.DEFAULT_FMR_TARGET)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("score", help="score pairs with uncertainty and confidence")
    p.add_argument("--set", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--alpha", default=str(decision.DEFAULT_ALPHA),
                   help="sigmoid sharpness or preset: " + ", ".join(sorted(decision.ALPHA_PRESETS)))
    p.add_argument("--no-clamp", dest="clamp", action="store_false",
                   help="keep decision confidences outside [0, 1]")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("erc", help="error-vs-reject curve(s)")
    p.add_argument("--results", required=True)
    p.add_argument("--key", required=True, choices=[k.value for k in RejectionKey] + ["all"])
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--max-reject", type=float, default=0.95)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_erc)

    p = sub.add_parser("heatmap", help="2-D histogram of score vs confidence")
    p.add_argument("--results", required=True)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--measure", choices=["decision", "intuitive"], default="decision")
    p.add_argument("--score-min", type=float, default=-1.0)
    p.add_argument("--score-max", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_heatmap)

    # no help text keeps it out of the command listing
    p = sub.add_parser("oracle")
    p.add_argument("--set", required=True)
    p.add_argument("--probe", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", default=str(decision.DEFAULT_ALPHA))
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _emit_error("Usage", str(exc))
        return EXIT_USAGE
    try:
        args.func(args)
    except ScoreConfError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_ERROR
    except OSError as exc:
        _emit_error("IO", f"{exc.filename}: {exc.strerror}")
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
