"""
Single entry point for resolving a feature-set name to canonical columns.

- ACOUSTIC_11: the eight perturbation measures plus F0, HNR and pitch.
- ALL_24: the acoustic block followed by the 13 MFCC means.
- SELECTED_K: the k columns with the highest ANOVA F-score, chosen per fold
  from the training rows; columns stay in canonical order.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from ..errors import ConfigError
from .features import ACOUSTIC_NAMES, FEATURE_NAMES


class FeatureSetMode(str, Enum):
    ACOUSTIC_11 = "acoustic_11"
    ALL_24 = "all_24"
    SELECTED_K = "selected_k"


@dataclass(frozen=True)
class ResolvedFeatureSet:
    mode: FeatureSetMode
    columns: Tuple[int, ...]
    k: Optional[int] = None

    @property
    def label(self) -> str:
        if self.mode == FeatureSetMode.SELECTED_K:
            return f"selected_{self.k}"
        return self.mode.value


def _column_indices(table_names: Sequence[str], wanted: Sequence[str]) -> Tuple[int, ...]:
    missing = [name for name in wanted if name not in table_names]
    if missing:
        raise ConfigError(f"feature table lacks columns required by the feature set: {', '.join(missing)}")
    return tuple(list(table_names).index(name) for name in wanted)


def resolve_feature_set(
    name: str,
    k: Optional[int] = None,
    table_names: Sequence[str] = FEATURE_NAMES,
) -> ResolvedFeatureSet:
    """
    Resolve ``name`` against the columns of a feature table.

    ``columns`` index into ``table_names``; for SELECTED_K they are the
    candidate pool the ANOVA ranking chooses ``k`` from.
    """
    try:
        mode = FeatureSetMode(name)
    except ValueError as exc:
        known = ", ".join(member.value for member in FeatureSetMode)
        raise ConfigError(f"unknown feature set {name!r} (expected one of {known})") from exc

    if mode == FeatureSetMode.ACOUSTIC_11:
        if k is not None:
            raise ConfigError("acoustic_11 does not take k")
        return ResolvedFeatureSet(mode=mode, columns=_column_indices(table_names, ACOUSTIC_NAMES))

    columns = _column_indices(table_names, FEATURE_NAMES)
    if mode == FeatureSetMode.ALL_24:
        if k is not None:
            raise ConfigError("all_24 does not take k")
        return ResolvedFeatureSet(mode=mode, columns=columns)

    # SELECTED_K
    k = 10 if k is None else int(k)
    if not 1 <= k <= len(FEATURE_NAMES):
        raise ConfigError(f"selected_k needs k in 1..{len(FEATURE_NAMES)}, got {k}")
    return ResolvedFeatureSet(mode=mode, columns=columns, k=k)
