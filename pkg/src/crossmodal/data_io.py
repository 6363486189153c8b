"""Line-delimited JSON dataset files and the JSON model file.

Dataset records are self-describing objects with a `kind` of text, image, or
pair. Floats round-trip exactly because json prints shortest-round-trip
decimals.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .model import (
    CooccurrencePair,
    CorpusExample,
    Hyperparameters,
    KernelSpec,
    TrainedModel,
)

MODEL_FORMAT_VERSION = 1


@dataclass
class Corpora:
    texts: list[CorpusExample] = field(default_factory=list)
    images: list[CorpusExample] = field(default_factory=list)
    pairs: list[CooccurrencePair] = field(default_factory=list)


def atomic_write_text(path: str, content: str) -> None:
    """Write via a temp file and rename, so failures leave no partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _example_record(kind: str, ex: CorpusExample) -> dict:
    rec = {"kind": kind, "id": ex.id, "features": list(map(float, ex.features))}
    if ex.label is not None:
        rec["label" if isinstance(ex.label, int) else "class"] = ex.label
    return rec


def _pair_record(idx: int, pair: CooccurrencePair) -> dict:
    rec = {
        "kind": "pair",
        "id": f"p{idx}",
        "text_features": list(map(float, pair.text_features)),
        "image_features": list(map(float, pair.image_features)),
    }
    if pair.class_id is not None:
        rec["class"] = pair.class_id
    return rec


def serialize_dataset(corpora: Corpora) -> str:
    lines = [json.dumps(_example_record("text", t)) for t in corpora.texts]
    lines += [json.dumps(_example_record("image", i)) for i in corpora.images]
    lines += [json.dumps(_pair_record(k, c)) for k, c in enumerate(corpora.pairs)]
    return "\n".join(lines) + ("\n" if lines else "")


def write_dataset(corpora: Corpora, path: str) -> None:
    atomic_write_text(path, serialize_dataset(corpora))


def _parse_label(rec: dict):
    if "label" in rec:
        label = rec["label"]
        if not isinstance(label, int) or isinstance(label, bool):
            raise DataError("label must be an integer")
        return label
    if "class" in rec:
        cls = rec["class"]
        if not isinstance(cls, str):
            raise DataError("class must be a string")
        return cls
    return None


def _features(rec: dict, key: str) -> np.ndarray:
    if key not in rec:
        raise DataError(f"missing {key!r}")
    values = rec[key]
    if not isinstance(values, list) or not values:
        raise DataError(f"{key!r} must be a non-empty array of numbers")
    return np.array(values, dtype=float)


def parse_dataset(path: str) -> Corpora:
    """Parse and validate a dataset file; errors carry the offending line number."""
    corpora = Corpora()
    dims: dict[str, int] = {}
    seen_ids: dict[str, set] = {"text": set(), "image": set(), "pair": set()}

    def check_dim(kind: str, vec: np.ndarray, lineno: int):
        dim = dims.setdefault(kind, vec.shape[0])
        if vec.shape[0] != dim:
            raise DataError(
                f"{path}:{lineno}: {kind} feature dimension {vec.shape[0]} != "
                f"established {dim}"
            )

    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            try:
                kind = rec.get("kind")
                if kind not in ("text", "image", "pair"):
                    raise DataError(f"unknown kind {kind!r}")
                rid = rec.get("id")
                if not isinstance(rid, str):
                    raise DataError("missing string id")
                if rid in seen_ids[kind]:
                    raise DataError(f"duplicate {kind} id {rid!r}")
                seen_ids[kind].add(rid)
                if kind == "pair":
                    x = _features(rec, "text_features")
                    z = _features(rec, "image_features")
                    check_dim("pair_text", x, lineno)
                    check_dim("pair_image", z, lineno)
                    corpora.pairs.append(
                        CooccurrencePair(x, z, class_id=rec.get("class"))
                    )
                else:
                    v = _features(rec, "features")
                    check_dim(kind, v, lineno)
                    ex = CorpusExample(rid, v, _parse_label(rec))
                    (corpora.texts if kind == "text" else corpora.images).append(ex)
            except DataError as exc:
                if str(exc).startswith(f"{path}:"):
                    raise
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return corpora


# Model files ------------------------------------------------------------------

def _hyper_dict(h: Hyperparameters) -> dict:
    return {
        "gamma": h.gamma,
        "lambda": h.lam,
        "C": h.C,
        "kernel": {"kind": h.kernel.kind, "bandwidth": h.kernel.bandwidth},
        "max_iter": h.max_iter,
        "tol": h.tol,
        "L0": h.L0,
        "eta": h.eta,
        "eps_alpha0": h.eps_alpha0,
        "normalize": h.normalize,
    }


def _hyper_from_dict(d: dict) -> Hyperparameters:
    kernel = d.get("kernel", {})
    return Hyperparameters(
        gamma=d["gamma"],
        lam=d["lambda"],
        C=d["C"],
        kernel=KernelSpec(kind=kernel["kind"], bandwidth=kernel["bandwidth"]),
        max_iter=d["max_iter"],
        tol=d["tol"],
        L0=d["L0"],
        eta=d["eta"],
        eps_alpha0=d["eps_alpha0"],
        normalize=d.get("normalize", False),
    )


def serialize_model(
    model: TrainedModel, mode: str = "binary", unseen_classes: list[str] | None = None
) -> str:
    p, q = model.S.shape
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "mode": mode,
        "p": p,
        "q": q,
        "S": list(map(float, model.S.ravel())),
        "alpha": list(map(float, model.alpha)),
        "kernel": {"kind": model.kernel.kind, "bandwidth": model.kernel.bandwidth},
        "normalize": model.normalize,
        "source_texts": [_example_record("text", t) for t in model.source_texts],
        "train_images": [_example_record("image", i) for i in model.train_images],
        "hyper": _hyper_dict(model.hyper),
        "final_objective": model.final_objective,
        "unseen_classes": unseen_classes or [],
    }
    return json.dumps(doc)


def write_model(model, path, mode="binary", unseen_classes=None) -> None:
    atomic_write_text(path, serialize_model(model, mode, unseen_classes))


def parse_model(text: str) -> tuple[TrainedModel, str, list[str]]:
    """Returns (model, mode, unseen_classes). Raises DataError on bad input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed model file: {exc}") from exc
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"unsupported model format_version {version!r}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    try:
        p, q = doc["p"], doc["q"]
        S = np.array(doc["S"], dtype=float)
        if S.size != p * q:
            raise DataError(f"S has {S.size} entries, expected {p * q}")
        kernel = KernelSpec(
            kind=doc["kernel"]["kind"], bandwidth=doc["kernel"]["bandwidth"]
        )

        def examples(key):
            return [
                CorpusExample(r["id"], np.array(r["features"], float), _parse_label(r))
                for r in doc[key]
            ]

        model = TrainedModel(
            S=S.reshape(p, q),
            alpha=np.array(doc["alpha"], dtype=float),
            source_texts=examples("source_texts"),
            train_images=examples("train_images"),
            kernel=kernel,
            hyper=_hyper_from_dict(doc["hyper"]),
            normalize=doc.get("normalize", False),
            final_objective=doc.get("final_objective"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"invalid model file: {exc}") from exc
    return model, doc.get("mode", "binary"), doc.get("unseen_classes", [])


def read_model(path: str):
    with open(path) as fh:
        return parse_model(fh.read())
