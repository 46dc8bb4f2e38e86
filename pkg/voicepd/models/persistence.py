"""Versioned JSON model files."""
from pathlib import Path
from typing import Union

import orjson

from .. import __version__
from ..errors import DataError
from .base import ModelSpec, TrainedModel
from .registry import build_estimator

FORMAT_VERSION = 1


def save_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "family": model.family,
        "params": model.spec.params,
        "seed": model.spec.seed,
        "n_features": model.n_features,
        "state": model.estimator.get_state(),
    }
    path.write_bytes(
        orjson.dumps(payload, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)
    )
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    path = Path(path)
    try:
        payload = orjson.loads(path.read_bytes())
    except (OSError, orjson.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"model file {path} has format_version {version}, expected {FORMAT_VERSION}")
    spec = ModelSpec(family=payload["family"], params=payload["params"], seed=payload["seed"])
    estimator = build_estimator(spec)
    estimator.n_features_ = int(payload["n_features"])
    estimator.set_state(payload["state"])
    return TrainedModel(spec=spec, estimator=estimator, n_features=estimator.n_features_)
