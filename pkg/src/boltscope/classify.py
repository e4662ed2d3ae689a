"""Preload-state classification against a reference ratio table.

The rule is a transparent nearest-mean match: the measured harmonic ratios
are compared to each state's tabulated means by mean absolute dB distance.
Ties break toward the tighter state so that raising an alarm always requires
positive evidence; `alarm` provides the opposite operating point for
monitoring, where missing a loose bolt is the costly error.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass

from boltscope.errors import ParameterError
from boltscope.features import HarmonicRatio, PreloadState, RatioTable

REFERENCE_TABLE_RESOURCE = "table1.json"


@dataclass(frozen=True)
class Classification:
    """Result of matching measured ratios to a reference table."""

    state: PreloadState
    margin_db: float
    per_l_distance: dict[int, float]

    def __post_init__(self):
        if self.margin_db < 0:
            raise ParameterError("margin_db must be >= 0")

    def to_dict(self) -> dict:
        return {
            "state": self.state.value,
            "torque_nm": self.state.torque_nm,
            "margin_db": self.margin_db,
            "per_l_distance": {str(l): d for l, d in sorted(self.per_l_distance.items())},
        }


def classify(features: list[HarmonicRatio], table: RatioTable) -> Classification:
    """Nearest state by mean absolute dB distance over the provided orders.

    margin_db is the runner-up distance minus the winner distance. Exact
    distance ties resolve to the tighter state.
    """
    if not features:
        raise ParameterError("classification needs at least one harmonic ratio")
    orders = [f.l for f in features]
    if len(set(orders)) != len(orders):
        raise ParameterError(f"duplicate harmonic orders in features: {sorted(orders)}")
    for l in orders:
        if l not in table.harmonics:
            raise ParameterError(f"harmonic order l={l} missing from reference table")

    # tightest last so that on equal distance the tighter state wins the tie
    ranked = []
    for tightness, state in enumerate(table.states):
        dists = {f.l: abs(f.value_db - table.mean_db(state, f.l)) for f in features}
        mean_dist = sum(dists.values()) / len(dists)
        ranked.append((mean_dist, -tightness, state, dists))
    ranked.sort(key=lambda r: (r[0], r[1]))

    winner = ranked[0]
    margin = (ranked[1][0] - winner[0]) if len(ranked) > 1 else 0.0
    return Classification(state=winner[2], margin_db=float(margin), per_l_distance=winner[3])


def separation(table: RatioTable, a: PreloadState, b: PreloadState, l: int) -> float:
    """Difference of tabulated means: mean_db(a, l) - mean_db(b, l)."""
    return table.mean_db(a, l) - table.mean_db(b, l)


def alarm(features: list[HarmonicRatio], table: RatioTable, threshold_db: float) -> bool:
    """True iff any ratio rises above the tight-state mean by more than
    threshold_db plus that entry's error half-band."""
    if PreloadState.P80 not in table.rows:
        raise ParameterError("alarm needs the tight reference state (80% preload) in the table")
    if not features:
        raise ParameterError("alarm needs at least one harmonic ratio")
    for f in features:
        mean = table.mean_db(PreloadState.P80, f.l)
        half = table.halfband_db(PreloadState.P80, f.l)
        if f.value_db - mean > threshold_db + half:
            return True
    return False


def load_reference_table() -> RatioTable:
    """Load the bundled reference ratio table."""
    text = (
        importlib.resources.files("boltscope")
        .joinpath("reference", REFERENCE_TABLE_RESOURCE)
        .read_text(encoding="utf-8")
    )
    return RatioTable.from_json(text)


def load_table(path) -> RatioTable:
    with open(path, "r", encoding="utf-8") as fh:
        return RatioTable.from_dict(json.load(fh))
