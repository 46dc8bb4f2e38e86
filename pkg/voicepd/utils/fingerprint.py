import hashlib
from typing import Any

import orjson

from .. import __version__


def canonical_json(payload: Any) -> bytes:
    # Sorted keys; numpy scalars/arrays allowed.
    return orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)


def build_fingerprint(payload: Any, length: int = 16) -> str:
    return hashlib.sha256(canonical_json(payload)).hexdigest()[:length]


def config_hash(config: Any) -> str:
    """Fingerprint of a pydantic model (or plain mapping) used to stamp outputs."""
    if hasattr(config, "model_dump"):
        payload = config.model_dump(mode="json")
    else:
        payload = config
    return build_fingerprint(payload)


def provenance_line(digest: str) -> str:
    # Header line shared by every CSV and text output:
    # # voicepd VERSION config_hash=DIGEST
    return f"# voicepd {__version__} config_hash={digest}"
