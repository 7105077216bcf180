"""``gazekit`` command line.

Exit status: 0 on success, 1 on invalid input data, 2 on usage errors.
Every output lands under ``--out``: either a directory, or a report file
path whose parent directory then receives the companion files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from gazekit import __version__, plotting, reporting
from gazekit.catpredict import build_marginalized_maps, duration_count_correlation, loso_evaluate
from gazekit.congruency import ioc_report
from gazekit.dataset import (
    DataError,
    StimulusGeometry,
    dumps_annotations,
    dumps_dataset,
    load_annotations,
    load_dataset,
)
from gazekit.fixmap import category_map, raw_map, render_map, sketch_map
from gazekit.partmodel import PartEvalConfig, PartHmm, decode_dtw, evaluate_part_prediction, featurize, train_hmm
from gazekit.partmodel.evaluation import AGGREGATIONS, DECODERS, augment, labeled_sequences
from gazekit.partseq import UNASSIGNED, assign_dataset, assign_parts, similarity_report
from gazekit.rng import Rng
from gazekit.synth import desk_scale_spec, labels_to_jsonl, synthesize_dataset

log = logging.getLogger("gazekit")

REPORT_SUFFIXES = {".json": "json", ".csv": "csv", ".txt": "text"}


class UsageError(Exception):
    pass


# --- argument helpers ---------------------------------------------------------

def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _add_geometry(p):
    g = p.add_argument_group("stimulus geometry")
    g.add_argument("--width", type=int, default=1024, help="stimulus width in pixels")
    g.add_argument("--height", type=int, default=1024, help="stimulus height in pixels")
    g.add_argument("--px-per-deg", type=float, default=36.0, help="pixels per degree of visual angle")


def _add_output(p, report=True, figures=False):
    p.add_argument("--out", default=".", help="output directory, or a report file path (.json/.csv/.txt)")
    if report:
        p.add_argument("--format", choices=reporting.FORMATS, default=None,
                       help="report format (default: from --out suffix, else json)")
    if figures:
        p.add_argument("--no-figures", action="store_true", help="skip the PNG figure next to the report")
    p.add_argument("--threads", type=int, default=1, help="worker threads (1 = serial)")


def _add_seed(p):
    p.add_argument("--seed", type=_seed, required=True, help="seed for every random draw (required)")


def _add_regime(p, name="--regime", default="both"):
    p.add_argument(name, choices=("primed", "unprimed", "both"), default=default, help="regime filter")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="gazekit", description="Eye-fixation analytics for freehand sketches.", formatter_class=fmt
    )
    parser.add_argument("--version", action="version", version=f"gazekit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)

    p = add("ingest-check", "validate a fixation file (and optional annotations) and summarize it")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--annotations", help="part annotation JSON file")
    _add_geometry(p)
    _add_output(p)

    p = add("synth", "generate a synthetic dataset with ground-truth part labels")
    _add_seed(p)
    p.add_argument("--categories", type=int, default=13, help="number of categories")
    p.add_argument("--sketches", type=int, default=24, help="sketches per category")
    p.add_argument("--subjects", type=int, default=4, help="subjects per sketch")
    p.add_argument("--groups", type=int, default=1, help="viewer groups per category")
    p.add_argument("--parts", type=int, default=4, help="parts per category")
    p.add_argument("--length-min", type=int, default=5, help="shortest fixation sequence")
    p.add_argument("--length-max", type=int, default=13, help="longest fixation sequence")
    p.add_argument("--cluster-scale", type=float, default=0.125, help="cluster sd as a fraction of the layout cell")
    p.add_argument("--regimes", default="primed", help="comma-separated regimes to simulate")
    _add_geometry(p)
    p.add_argument("--out", default=".", help="output directory")

    p = add("fixmap", "build and render the fixation map of one sketch")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--sketch", required=True, help="sketch_id to map")
    p.add_argument("--sigma", type=float, default=36.0, help="Gaussian kernel sigma in pixels")
    p.add_argument("--use-duration", type=_bool, default=True, help="weight fixations by duration")
    p.add_argument("--raw", action="store_true", help="skip standardization")
    p.add_argument("--render", help="image file name inside --out (default <sketch>.pgm/.ppm)")
    p.add_argument("--style", choices=("gray", "heat"), default="gray", help="PGM gray or PPM heat image")
    _add_regime(p)
    _add_geometry(p)
    p.add_argument("--out", default=".", help="output directory")

    p = add("catmap", "build category-level (optionally marginalized) maps and render them")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--sigma", type=float, default=36.0, help="Gaussian kernel sigma in pixels")
    p.add_argument("--use-duration", type=_bool, default=True, help="weight fixations by duration")
    p.add_argument("--marginalize", action="store_true", help="subtract the mean over categories")
    p.add_argument("--style", choices=("gray", "heat"), default="gray", help="PGM gray or PPM heat image")
    _add_regime(p)
    _add_geometry(p)
    _add_output(p, figures=True)

    p = add("ioc", "inter-observer congruency (shuffled AUC) per sketch and category")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    _add_seed(p)
    p.add_argument("--sigma", type=float, default=36.0, help="Gaussian kernel sigma in pixels")
    p.add_argument("--n-random", type=int, default=100, help="random sequences per held-out subject")
    _add_regime(p)
    _add_geometry(p)
    _add_output(p, figures=True)

    p = add("predict-category", "leave-one-subject-out category prediction from fixation maps")
    p.add_argument("--train", required=True, help="fixation JSON Lines file")
    _add_regime(p, "--train-regime")
    _add_regime(p, "--test-regime")
    p.add_argument("--use-duration", type=_bool, default=True, help="weight fixations by duration")
    p.add_argument("--sigma", type=float, default=36.0, help="Gaussian kernel sigma in pixels")
    _add_geometry(p)
    _add_output(p, figures=True)

    p = add("part-assign", "assign each fixation to an annotated part")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--annotations", required=True, help="part annotation JSON file")
    p.add_argument("--drop-unassigned", action="store_true", help="remove UNASSIGNED fixations")
    _add_geometry(p)
    _add_output(p)

    p = add("part-similarity", "median pairwise part-sequence similarity and z-scores per category")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--annotations", required=True, help="part annotation JSON file")
    _add_seed(p)
    p.add_argument("--n-random", type=int, default=100, help="random sequences per pair")
    p.add_argument("--drop-unassigned", action="store_true", help="remove UNASSIGNED fixations")
    _add_regime(p, default="primed")
    _add_geometry(p)
    _add_output(p, figures=True)

    p = add("train-hmm", "train one part-label HMM per category")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--annotations", required=True, help="part annotation JSON file")
    _add_seed(p)
    p.add_argument("--category", help="train only this category")
    p.add_argument("--augment", type=int, default=50, help="augmented copies per training sequence (0 = none)")
    p.add_argument("--max-dev-deg", type=float, default=1.0, help="augmentation radius in degrees")
    p.add_argument("--smoothing", type=float, default=1.0, help="additive smoothing of label counts")
    p.add_argument("--keep-unassigned", action="store_true", help="keep UNASSIGNED as a hidden state")
    _add_geometry(p)
    _add_output(p)

    p = add("predict-parts", "predict part labels of fixation sequences")
    p.add_argument("--input", required=True, help="fixation JSON Lines file with sequences to label")
    p.add_argument("--decoder", choices=DECODERS, default="pmap", help="decoding method")
    p.add_argument("--model", help="HMM model file (pmap, viterbi, random)")
    p.add_argument("--train", help="training fixation file (dtw)")
    p.add_argument("--annotations", help="annotations for --train and for scoring predictions")
    p.add_argument("--category", help="only label sequences of this category")
    p.add_argument("--seed", type=_seed, help="seed (required for the random decoder)")
    _add_geometry(p)
    _add_output(p)

    p = add("evaluate-parts", "evaluate part-label decoders over random train/test splits")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    p.add_argument("--annotations", required=True, help="part annotation JSON file")
    _add_seed(p)
    p.add_argument("--train-frac", type=float, default=0.6, help="training fraction per category")
    p.add_argument("--trials", type=int, default=10, help="random splits")
    p.add_argument("--augment", type=int, default=50, help="augmented copies per training sequence")
    p.add_argument("--max-dev-deg", type=float, default=1.0, help="augmentation radius in degrees")
    p.add_argument("--smoothing", type=float, default=1.0, help="additive smoothing of label counts")
    p.add_argument("--decoders", default=",".join(DECODERS), help="comma-separated decoders")
    p.add_argument("--aggregation", choices=AGGREGATIONS, default="median-mean",
                   help="per-sequence accuracies: median within trial then mean over trials, or the reverse")
    p.add_argument("--keep-unassigned", action="store_true", help="keep UNASSIGNED as a hidden state")
    _add_regime(p, default="primed")
    _add_geometry(p)
    _add_output(p, figures=True)

    p = add("correlate-duration", "correlation of mean fixation duration and count across categories")
    p.add_argument("--input", required=True, help="fixation JSON Lines file")
    _add_regime(p)
    _add_geometry(p)
    _add_output(p)
    return parser


# --- output plumbing ------------------------------------------------------------

class Output:
    """Resolves ``--out`` into a directory plus a report path.

    A directory gets ``<command>.json`` (canonical) and a derived table,
    ``<command>.txt`` by default or ``<command>.csv`` with ``--format csv``.
    A file path gets exactly that one report, in the format its suffix names
    unless ``--format`` overrides it. Companion files (figures, images,
    label dumps) are named after the report stem in the same directory.
    """

    def __init__(self, args, command: str):
        out = Path(args.out)
        fmt = getattr(args, "format", None)
        if out.suffix.lower() in REPORT_SUFFIXES:
            self.dir = out.parent
            self.reports = [(out, fmt or REPORT_SUFFIXES[out.suffix.lower()])]
        else:
            self.dir = out
            derived = fmt if fmt in ("csv", "text") else "text"
            ext = {"csv": ".csv", "text": ".txt"}[derived]
            self.reports = [(out / f"{command}.json", "json"), (out / f"{command}{ext}", derived)]
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stem = self.reports[0][0].stem
        self.figures = not getattr(args, "no_figures", True)

    def path(self, name: str) -> Path:
        p = (self.dir / name).resolve()
        root = self.dir.resolve()
        if root != p.parent and root not in p.parents:
            raise UsageError(f"{name!r} would be written outside --out")
        return p

    def figure(self, suffix: str = "") -> Path | None:
        return self.path(f"{self.stem}{suffix}.png") if self.figures else None

    def write(self, doc: dict) -> None:
        for path, fmt in self.reports:
            reporting.write_report(doc, path, fmt)


def _geometry(args) -> StimulusGeometry:
    try:
        return StimulusGeometry(args.width, args.height, args.px_per_deg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, *skip) -> dict:
    drop = {"command", "out", "format", "seed", "verbose", "threads", "no_figures"} | set(skip)
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


def _f(x) -> float | None:
    return None if x is None or not np.isfinite(x) else float(x)


# --- subcommands --------------------------------------------------------------

def cmd_ingest_check(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo)
    body = {
        "n_sessions": len(ds),
        "n_fixations": sum(len(s) for s in ds.sessions),
        "n_subjects": len(ds.subjects),
        "n_sketches": len(ds.by_sketch()),
        "max_sequence_length": ds.max_sequence_length,
        "regimes": {r: sum(s.regime == r for s in ds.sessions) for r in ("primed", "unprimed")},
    }
    rows = [
        {"category": c, "sketches": len({s.sketch_id for s in v}), "sessions": len(v),
         "fixations": sum(len(s) for s in v)}
        for c, v in sorted(ds.by_category().items())
    ]
    if args.annotations:
        ann = load_annotations(args.annotations)
        missing = sorted({s.sketch_id for s in ds.sessions} - set(ann))
        body["annotated_sketches"] = len(ann)
        body["sketches_without_annotation"] = missing
    out = Output(args, "ingest-check")
    out.write(reporting.document("ingest-check", None, _config(args), body, rows))


def cmd_synth(args):
    geo = _geometry(args)
    regimes = tuple(r.strip() for r in args.regimes.split(",") if r.strip())
    if not regimes or any(r not in ("primed", "unprimed") for r in regimes):
        raise UsageError(f"--regimes must list primed and/or unprimed, got {args.regimes!r}")
    rng = Rng(args.seed)
    try:
        spec = desk_scale_spec(
            geo, rng.derive("spec"), n_categories=args.categories, n_parts=args.parts,
            sketches_per_category=args.sketches, subjects_per_sketch=args.subjects,
            cluster_scale=args.cluster_scale, subject_groups=args.groups,
            length_range=(args.length_min, args.length_max), regimes=regimes,
        )
        result = synthesize_dataset(spec, rng.derive("data"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fixations.jsonl").write_text(dumps_dataset(result.dataset), encoding="utf-8")
    (out / "annotations.json").write_text(dumps_annotations(result.annotations), encoding="utf-8")
    (out / "labels.jsonl").write_text(labels_to_jsonl(result.labels), encoding="utf-8")
    doc = reporting.document(
        "synth", args.seed, _config(args),
        {"n_sessions": len(result.dataset), "files": ["fixations.jsonl", "annotations.json", "labels.jsonl"]},
    )
    (out / "synth.json").write_text(reporting.to_json(doc), encoding="utf-8")


def cmd_fixmap(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo).filter(args.regime)
    sessions = ds.by_sketch().get(args.sketch)
    if not sessions:
        raise DataError(f"no viewing sessions for sketch {args.sketch!r}")
    fixations = [f for s in sorted(sessions, key=lambda s: s.subject_id) for f in s.fixations]
    build = raw_map if args.raw else sketch_map
    fmap = build(fixations, geo, args.sigma, args.use_duration, (args.sketch,))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    o = Output(argparse.Namespace(out=str(out)), "fixmap")
    name = args.render or f"{args.sketch}.{'pgm' if args.style == 'gray' else 'ppm'}"
    render_map(fmap, o.path(name), args.style)


def cmd_catmap(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo).filter(args.regime)
    ds.require_nonempty()
    out = Output(args, "catmap")
    if args.marginalize:
        maps = build_marginalized_maps(ds, args.sigma, args.use_duration)
    else:
        per_cat = {}
        for sketch_id, sessions in sorted(ds.by_sketch().items()):
            fx = [f for s in sorted(sessions, key=lambda s: s.subject_id) for f in s.fixations]
            per_cat.setdefault(sessions[0].category, []).append(sketch_map(fx, geo, args.sigma, args.use_duration, (sketch_id,)))
        maps = {c: category_map(v) for c, v in sorted(per_cat.items())}
    ext = "pgm" if args.style == "gray" else "ppm"
    rows = []
    for c, m in sorted(maps.items()):
        name = f"{out.stem}_{c}.{ext}"
        render_map(m, out.path(name), args.style)
        rows.append({"category": c, "image": name, "min": float(m.grid.min()), "max": float(m.grid.max()),
                     "n_sketches": len(set(m.provenance)) if not args.marginalize else None})
    fig = out.figure()
    if fig:
        plotting.map_panel({c: m.grid for c, m in maps.items()}, fig)
    out.write(reporting.document("catmap", None, _config(args), {"kind": next(iter(maps.values())).kind}, rows))


def cmd_ioc(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo)
    rep = ioc_report(ds, args.regime, args.sigma, Rng(args.seed), args.n_random, args.threads)
    out = Output(args, "ioc")
    rows = [
        {"category": c, "median_ioc": rep.per_category_median[c],
         "random_median_ioc": rep.per_category_random_median[c]}
        for c in rep.per_category_median
    ]
    fig = out.figure()
    if fig:
        plotting.ioc_figure(rep.per_category_median, rep.per_category_random_median, fig)
    out.write(reporting.document("ioc", args.seed, _config(args), rep.to_dict(), rows))


def cmd_predict_category(args):
    geo = _geometry(args)
    ds = load_dataset(args.train, geo)
    rep = loso_evaluate(ds, args.test_regime, args.use_duration, args.sigma, args.train_regime, args.threads)
    out = Output(args, "predict-category")
    rows = [{"category": c, "accuracy": a, "chance": rep.chance_level} for c, a in rep.per_category_accuracy.items()]
    fig = out.figure()
    if fig:
        plotting.accuracy_figure(rep.per_category_accuracy, rep.chance_level, fig,
                                 f"median = {rep.overall_median:.3f}")
    out.write(reporting.document("predict-category", None, _config(args), rep.to_dict(), rows))


def cmd_part_assign(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo)
    ann = load_annotations(args.annotations)
    missing = sorted({s.sketch_id for s in ds.sessions} - set(ann))
    if missing:
        raise DataError(f"no annotation for sketch(es): {', '.join(missing[:5])}")
    seqs = assign_dataset(ds, ann, args.drop_unassigned)
    out = Output(args, "part-assign")
    labels_path = out.path(f"{out.stem}.labels.jsonl")
    labels_path.write_text("".join(json.dumps(s.to_dict()) + "\n" for s in seqs), encoding="utf-8")
    rows = []
    for cat in sorted({s.category for s in seqs}):
        group = [s for s in seqs if s.category == cat]
        n = sum(len(s) for s in group)
        un = sum(l == UNASSIGNED for s in group for l in s.labels)
        rows.append({"category": cat, "sequences": len(group), "fixations": n, "unassigned": un})
    out.write(reporting.document("part-assign", None, _config(args), {"labels_file": labels_path.name}, rows))


def cmd_part_similarity(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo).filter(args.regime)
    ds.require_nonempty()
    ann = load_annotations(args.annotations)
    rep = similarity_report(ds, ann, Rng(args.seed), args.n_random, args.drop_unassigned, args.threads)
    out = Output(args, "part-similarity")
    rows = [
        {"category": c, "median_similarity": rep.per_category_median_similarity[c],
         "median_zscore": _f(rep.per_category_median_zscore[c]), "pairs": rep.n_pairs[c]}
        for c in rep.per_category_median_similarity
    ]
    fig = out.figure()
    if fig and rows:
        plotting.similarity_figure(rep.per_category_median_similarity, rep.per_category_median_zscore, fig)
    out.write(reporting.document("part-similarity", args.seed, _config(args), rep.to_dict(), rows))


def cmd_train_hmm(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo)
    ds.require_nonempty()
    ann = load_annotations(args.annotations)
    seqs, vocab = labeled_sequences(ds, ann, drop_unassigned=not args.keep_unassigned)
    cats = sorted(seqs)
    if args.category:
        if args.category not in seqs:
            raise DataError(f"no labelled sequences for category {args.category!r}")
        cats = [args.category]
    rng = Rng(args.seed)
    out = Output(args, "train-hmm")
    rows = []
    for cat in cats:
        train = list(seqs[cat])
        if args.augment > 0:
            arng = rng.derive("augment", cat)
            for s in seqs[cat]:
                train.extend(augment(s, arng, args.augment, args.max_dev_deg, geo))
        hmm = train_hmm(train, vocab[cat], args.smoothing, ds.max_sequence_length, geo, category=cat)
        name = f"hmm_{cat}.json"
        hmm.save(out.path(name))
        rows.append({"category": cat, "model": name, "states": len(hmm.states),
                     "training_sequences": len(train), "flags": ";".join(hmm.flags)})
    out.write(reporting.document("train-hmm", args.seed, _config(args), {}, rows))


def cmd_predict_parts(args):
    geo = _geometry(args)
    if args.decoder == "random" and args.seed is None:
        raise UsageError("the random decoder needs --seed")
    if args.decoder in ("pmap", "viterbi", "random") and not args.model:
        raise UsageError(f"the {args.decoder} decoder needs --model")
    if args.decoder == "dtw" and not (args.train and args.annotations):
        raise UsageError("the dtw decoder needs --train and --annotations")
    ds = load_dataset(args.input, geo)
    model = PartHmm.load(args.model) if args.model else None
    category = args.category or (model.category if model else None)
    sessions = [s for s in ds.sessions if not category or s.category == category]
    if not sessions:
        raise DataError("no sequences to label")
    ann = load_annotations(args.annotations) if args.annotations else None

    if model:
        n_max = model.n_max
        if max(len(s) for s in sessions) > n_max:
            raise DataError(f"a sequence is longer than the model's N_F={n_max}")
    else:
        train_ds = load_dataset(args.train, geo)
        n_max = max(train_ds.max_sequence_length, ds.max_sequence_length)
        pool = []
        for s in sorted(train_ds.sessions, key=lambda s: (s.category, s.sketch_id, s.subject_id)):
            if category and s.category != category:
                continue
            seq = assign_parts(s, ann.get(s.sketch_id), geo).dropping_unassigned()
            if len(seq):
                pool.append((featurize(s, n_max, geo, seq.source_indices), list(seq.labels)))
        if not pool:
            raise DataError("no labelled training sequences for dtw")
    rng = Rng(args.seed) if args.seed is not None else None

    out = Output(args, "predict-parts")
    preds, rows = [], []
    for s in sorted(sessions, key=lambda s: (s.sketch_id, s.subject_id)):
        feats = featurize(s, n_max, geo)
        if args.decoder == "pmap":
            labels = model.decode_pmap(feats)
        elif args.decoder == "viterbi":
            labels = model.decode_viterbi(feats)
        elif args.decoder == "dtw":
            labels = decode_dtw(feats, pool)
        else:
            r = rng.derive("random-decoder", s.sketch_id, s.subject_id)
            labels = [model.states[k] for k in r.integers(0, len(model.states), len(s))]
        rec = {"sketch_id": s.sketch_id, "subject_id": s.subject_id, "category": s.category, "labels": labels}
        row = {"sketch_id": s.sketch_id, "subject_id": s.subject_id, "length": len(s)}
        if ann and s.sketch_id in ann:
            truth = assign_parts(s, ann[s.sketch_id], geo).labels
            # fixations outside every part have no reference label and are not scored
            hits = [a == b for a, b in zip(labels, truth) if b != UNASSIGNED]
            if hits:
                row["accuracy"] = float(np.mean(hits))
        preds.append(rec)
        rows.append(row)
    pred_path = out.path(f"{out.stem}.labels.jsonl")
    pred_path.write_text("".join(json.dumps(p) + "\n" for p in preds), encoding="utf-8")
    accs = [r["accuracy"] for r in rows if "accuracy" in r]
    body = {"decoder": args.decoder, "labels_file": pred_path.name,
            "mean_accuracy": float(np.mean(accs)) if accs else None}
    out.write(reporting.document("predict-parts", args.seed, _config(args), body, rows))


def cmd_evaluate_parts(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo).filter(args.regime)
    ds.require_nonempty()
    ann = load_annotations(args.annotations)
    decoders = tuple(d.strip() for d in args.decoders.split(",") if d.strip())
    bad = [d for d in decoders if d not in DECODERS]
    if bad or not decoders:
        raise UsageError(f"unknown decoder(s) {bad}; choose from {', '.join(DECODERS)}")
    cfg = PartEvalConfig(
        train_frac=args.train_frac, trials=args.trials, k_augment=args.augment,
        max_dev_deg=args.max_dev_deg, smoothing=args.smoothing,
        drop_unassigned=not args.keep_unassigned, decoders=decoders, aggregation=args.aggregation,
    )
    rep = evaluate_part_prediction(ds, ann, Rng(args.seed), cfg, args.threads)
    out = Output(args, "evaluate-parts")
    rows = [{"category": c, **v} for c, v in rep.per_category.items()]
    fig = out.figure()
    if fig and rows:
        plotting.decoder_figure(rep.per_category, decoders, fig)
    out.write(reporting.document("evaluate-parts", args.seed, _config(args), rep.to_dict(), rows))


def cmd_correlate_duration(args):
    geo = _geometry(args)
    ds = load_dataset(args.input, geo)
    r = duration_count_correlation(ds, args.regime)
    out = Output(args, "correlate-duration")
    body = {"regime": args.regime, "correlation": r}
    out.write(reporting.document("correlate-duration", None, _config(args), body, [{"regime": args.regime, "pearson_r": r}]))


COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "synth": cmd_synth,
    "fixmap": cmd_fixmap,
    "catmap": cmd_catmap,
    "ioc": cmd_ioc,
    "predict-category": cmd_predict_category,
    "part-assign": cmd_part_assign,
    "part-similarity": cmd_part_similarity,
    "train-hmm": cmd_train_hmm,
    "predict-parts": cmd_predict_parts,
    "evaluate-parts": cmd_evaluate_parts,
    "correlate-duration": cmd_correlate_duration,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gazekit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, KeyError, OSError) as exc:
        print(f"gazekit {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
