"""Command-line surface: synth, train, predict, evaluate, crossval, zeroshot.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import data_io, evaluation, synth, zeroshot
from .errors import DataError, NumericalError
from .model import Hyperparameters, KernelSpec, discriminant, l2_normalize
from .solver import TrainData, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _add_hyper_flags(p: argparse.ArgumentParser):
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--cap-c", dest="cap_c", type=float, default=1.0)
    p.add_argument("--kernel", choices=["gaussian", "linear"], default="gaussian")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="gaussian bandwidth; default: median heuristic")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--normalize", action="store_true",
                   help="L2-normalize feature vectors before training")
    p.add_argument("--verbose", action="store_true")


def _hyper_from_args(args) -> Hyperparameters:
    return Hyperparameters(
        gamma=args.gamma,
        lam=args.lam,
        C=args.cap_c,
        kernel=KernelSpec(kind=args.kernel, bandwidth=args.bandwidth),
        max_iter=args.max_iter,
        tol=args.tol,
        normalize=args.normalize,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crossmodal")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True, help="JSON file of generator settings")
    p.add_argument("--out", required=True, help="training dataset path")
    p.add_argument("--seed", type=int, default=None, help="overrides config seed")
    p.add_argument("--test-out", default=None, help="held-out test images path")

    p = sub.add_parser("train", help="train a binary model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_hyper_flags(p)

    p = sub.add_parser("predict", help="score images with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="compare predictions against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)

    p = sub.add_parser("crossval", help="twofold cross-validated grid search")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", choices=["default"], default="default")
    p.add_argument("--seed", type=int, default=0)
    _add_hyper_flags(p)

    p = sub.add_parser("zeroshot", help="train a shared transfer matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--unseen", required=True, help="comma-separated class ids")
    p.add_argument("--out", required=True)
    _add_hyper_flags(p)

    return parser


def _cmd_synth(args) -> int:
    with open(args.config) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed config {args.config}: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = synth.SynthConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad synth config: {exc}") from exc
    ds = synth.generate(cfg)
    data_io.write_dataset(
        data_io.Corpora(texts=ds.texts, images=ds.images, pairs=ds.pairs), args.out
    )
    if args.test_out:
        data_io.write_dataset(data_io.Corpora(images=ds.test_images), args.test_out)
    return EXIT_OK


def _cmd_train(args) -> int:
    corpora = data_io.parse_dataset(args.data)
    hyper = _hyper_from_args(args)
    data = TrainData(
        source_texts=corpora.texts,
        train_images=corpora.images,
        pairs=corpora.pairs,
    )
    model, report = train(data, hyper, verbose=args.verbose)
    data_io.write_model(model, args.out)
    print(
        f"converged {report.converged}\n"
        f"iterations {report.iterations}\n"
        f"final_objective {report.final_objective!r}\n"
        f"final_rank {report.final_rank}"
    )
    return EXIT_OK


def _cmd_predict(args) -> int:
    model, mode, unseen = data_io.read_model(args.model)
    corpora = data_io.parse_dataset(args.images)
    lines = []
    if mode == "zeroshot":
        if not unseen:
            raise DataError("zero-shot model lists no unseen classes")
        class_texts = {
            c: zeroshot.one_vs_rest_texts(model.source_texts, c) for c in unseen
        }
        for ex in corpora.images:
            z = l2_normalize(ex.features) if model.normalize else ex.features
            scores = {
                c: zeroshot.score_unseen(model.S, class_texts[c], z) for c in unseen
            }
            lines.append(json.dumps({"id": ex.id, "scores": scores}))
    else:
        for ex in corpora.images:
            score = discriminant(model, ex.features)
            label = 1 if score > 0 else -1
            lines.append(json.dumps({"id": ex.id, "score": score, "label": label}))
    data_io.atomic_write_text(args.out, "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def _read_predictions(path: str) -> list[dict]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed prediction: {exc}") from exc
    return records


def _cmd_evaluate(args) -> int:
    preds = _read_predictions(args.pred)
    truth_corpora = data_io.parse_dataset(args.truth)
    truth_by_id = {ex.id: ex.label for ex in truth_corpora.images}
    if not preds:
        raise DataError("no predictions to evaluate")
    missing = [r.get("id") for r in preds if r.get("id") not in truth_by_id]
    if missing:
        raise DataError(f"no truth for predicted ids {missing[:3]}")

    if "scores" in preds[0]:
        # Zero-shot predictions: per-class AUC/AP against class-labeled truth.
        classes = sorted(preds[0]["scores"])
        per_class = {}
        aps = []
        for c in classes:
            scores = np.array([r["scores"][c] for r in preds])
            truth = np.array([1 if truth_by_id[r["id"]] == c else -1 for r in preds])
            per_class[f"auc_{c}"] = evaluation.auc(scores, truth)
            ap = evaluation.average_precision(scores, truth)
            per_class[f"ap_{c}"] = ap
            aps.append(ap)
        hard_preds = [max(r["scores"], key=lambda c: r["scores"][c]) for r in preds]
        truths = [truth_by_id[r["id"]] for r in preds]
        report = evaluation.EvalReport(
            error_rate=evaluation.error_rate(np.array(hard_preds), np.array(truths)),
            ap=evaluation.mean_ap(aps),
            auc=float(np.mean([per_class[f"auc_{c}"] for c in classes])),
            per_class=per_class,
        )
    else:
        scores = np.array([r["score"] for r in preds])
        labels = np.array([r["label"] for r in preds])
        truth = np.array([int(truth_by_id[r["id"]]) for r in preds])
        report = evaluation.EvalReport(
            error_rate=evaluation.error_rate(labels, truth),
            ap=evaluation.average_precision(scores, truth),
            auc=evaluation.auc(scores, truth),
        )
    print(report.as_text())
    return EXIT_OK


def _cmd_crossval(args) -> int:
    corpora = data_io.parse_dataset(args.data)
    data = TrainData(
        source_texts=corpora.texts,
        train_images=corpora.images,
        pairs=corpora.pairs,
    )
    base = _hyper_from_args(args)
    best = evaluation.crossval_select(data, base=base, seed=args.seed)
    print(f"lambda {best.lam}\ngamma {best.gamma}\nC {best.C}")
    return EXIT_OK


def _cmd_zeroshot(args) -> int:
    corpora = data_io.parse_dataset(args.data)
    unseen = frozenset(c for c in args.unseen.split(",") if c)
    if not unseen:
        raise UsageError("--unseen must name at least one class")
    all_classes = {ex.label for ex in corpora.texts if isinstance(ex.label, str)}
    all_classes |= {ex.label for ex in corpora.images if isinstance(ex.label, str)}
    unknown = unseen - all_classes
    if unknown:
        raise DataError(f"unseen classes not present in data: {sorted(unknown)}")
    ds = zeroshot.ZeroShotDataset(
        seen_classes=frozenset(all_classes - unseen),
        unseen_classes=unseen,
        source_texts=corpora.texts,
        train_images=corpora.images,
        pairs=corpora.pairs,
    )
    hyper = _hyper_from_args(args)
    model, report = zeroshot.train_zeroshot(ds, hyper, verbose=args.verbose)
    data_io.write_model(model, args.out, mode="zeroshot", unseen_classes=sorted(unseen))
    print(
        f"converged {report.converged}\n"
        f"iterations {report.iterations}\n"
        f"final_objective {report.final_objective!r}\n"
        f"final_rank {report.final_rank}"
    )
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "crossval": _cmd_crossval,
    "zeroshot": _cmd_zeroshot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
