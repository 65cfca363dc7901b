"""Questionnaire scoring and rank correlation.

Everything in this module is a pure function of its inputs. Instruments are
described by :class:`QuestionnaireDefinition` config files; item wording is
licensed material and never appears here, only structure (item count,
response range, reversed-item indices, scale groupings, scoring rule).

Item indices in definition files are 1-based, the way questionnaire sheets
number their items. They are converted once at load time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .errors import (
    BadDefinition,
    BadLength,
    ConstantInput,
    InsufficientData,
    LengthMismatch,
    OutOfRange,
    TooShort,
)

RULE_SUS = "sus"
RULE_SCALE_MEANS = "scale_means"
RULE_MEAN = "mean"
_RULES = (RULE_SUS, RULE_SCALE_MEANS, RULE_MEAN)


@dataclass(frozen=True)
class ResponseSet:
    instrument: str
    responses: tuple[int, ...]


@dataclass(frozen=True)
class QuestionnaireDefinition:
    """Structure of one instrument.

    ``reversed_items`` and the index sets in ``scales`` are 0-based here;
    :func:`load_definition` converts from the 1-based JSON form.
    """

    instrument: str
    items: int
    response_range: tuple[int, int]
    reversed_items: frozenset[int]
    scales: dict[str, tuple[int, ...]]
    scoring_rule: str

    def validate(self) -> None:
        lo, hi = self.response_range
        if not (isinstance(lo, int) and isinstance(hi, int) and lo < hi):
            raise BadDefinition(f"bad response range: {self.response_range}")
        if self.items < 1:
            raise BadDefinition(f"bad item count: {self.items}")
        if self.scoring_rule not in _RULES:
            raise BadDefinition(f"unknown scoring rule: {self.scoring_rule!r}")
        if any(i < 0 or i >= self.items for i in self.reversed_items):
            raise BadDefinition("reversed item index out of range")
        seen: set[int] = set()
        for name, indices in self.scales.items():
            if not indices:
                raise BadDefinition(f"scale {name!r} is empty")
            for i in indices:
                if i < 0 or i >= self.items:
                    raise BadDefinition(f"scale {name!r} index out of range: {i}")
                if i in seen:
                    raise BadDefinition(f"scale index {i} appears in two scales")
                seen.add(i)
        if self.scoring_rule == RULE_SUS:
            if self.items != 10 or self.response_range != (1, 5):
                raise BadDefinition("sus rule requires 10 items on [1,5]")
        if self.scoring_rule == RULE_SCALE_MEANS and not self.scales:
            raise BadDefinition("scale_means rule requires scale groupings")
        if self.instrument == "ueq":
            sizes = sorted(len(v) for v in self.scales.values())
            if self.items != 26 or self.response_range != (1, 7):
                raise BadDefinition("ueq requires 26 items on [1,7]")
            if len(self.scales) != 6 or sizes != [4, 4, 4, 4, 4, 6]:
                raise BadDefinition("ueq requires 6 scales of sizes 6,4,4,4,4,4")
        if self.instrument == "ati":
            if self.items != 9 or self.response_range != (1, 6):
                raise BadDefinition("ati requires 9 items on [1,6]")

    def check_responses(self, responses: Sequence[int]) -> None:
        if len(responses) != self.items:
            raise BadLength(
                f"{self.instrument} expects {self.items} responses, "
                f"got {len(responses)}"
            )
        lo, hi = self.response_range
        for i, r in enumerate(responses):
            if not isinstance(r, int) or isinstance(r, bool) or not lo <= r <= hi:
                raise OutOfRange(
                    f"{self.instrument} response {i + 1} out of [{lo},{hi}]: {r!r}"
                )


def load_definition(source: Path | str | Mapping) -> QuestionnaireDefinition:
    """Build a definition from a JSON file or an already-parsed mapping."""
    if isinstance(source, Mapping):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BadDefinition(f"cannot read definition {source}: {exc}") from exc
    try:
        definition = QuestionnaireDefinition(
            instrument=raw["instrument"],
            items=raw["items"],
            response_range=(raw["response_range"][0], raw["response_range"][1]),
            reversed_items=frozenset(i - 1 for i in raw.get("reversed_items", [])),
            scales={
                name: tuple(i - 1 for i in indices)
                for name, indices in raw.get("scales", {}).items()
            },
            scoring_rule=raw["scoring_rule"],
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise BadDefinition(f"malformed definition: {exc!r}") from exc
    definition.validate()
    return definition


def load_definitions(directory: Path | str) -> dict[str, QuestionnaireDefinition]:
    definitions = {}
    for path in sorted(Path(directory).glob("*.json")):
        d = load_definition(path)
        definitions[d.instrument] = d
    return definitions


def default_definitions() -> dict[str, QuestionnaireDefinition]:
    """The instrument templates shipped with the package."""
    root = resources.files("railabel").joinpath("definitions")
    definitions = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            d = load_definition(json.loads(entry.read_text("utf-8")))
            definitions[d.instrument] = d
    return definitions


def _responses(value: ResponseSet | Sequence[int]) -> Sequence[int]:
    return value.responses if isinstance(value, ResponseSet) else value


# -- instrument scoring ------------------------------------------------------


def score_sus(responses: ResponseSet | Sequence[int]) -> float:
    """Standard ten-item usability score on [0, 100].

    Odd positions (1st, 3rd, ...) contribute ``response - 1``, even
    positions contribute ``5 - response``; the sum is scaled by 2.5.
    """
    rs = _responses(responses)
    if len(rs) != 10:
        raise BadLength(f"expected 10 responses, got {len(rs)}")
    total = 0
    for i, r in enumerate(rs):
        if not isinstance(r, int) or isinstance(r, bool) or not 1 <= r <= 5:
            raise OutOfRange(f"response {i + 1} out of [1,5]: {r!r}")
        total += (r - 1) if i % 2 == 0 else (5 - r)
    return 2.5 * total


def score_ueq(
    responses: ResponseSet | Sequence[int], definition: QuestionnaireDefinition
) -> dict[str, float]:
    """Per-scale means on [-3, +3].

    Each response maps to ``raw - mid`` (positive keying) or ``mid - raw``
    (reverse keying), with mid the center of the response range, then the
    values are averaged within each configured scale.
    """
    definition.validate()
    if definition.scoring_rule != RULE_SCALE_MEANS:
        raise BadDefinition(
            f"definition {definition.instrument!r} does not use scale_means"
        )
    rs = _responses(responses)
    definition.check_responses(rs)
    lo, hi = definition.response_range
    mid = (lo + hi) / 2
    values = [
        (mid - r) if i in definition.reversed_items else (r - mid)
        for i, r in enumerate(rs)
    ]
    return {
        name: sum(values[i] for i in indices) / len(indices)
        for name, indices in definition.scales.items()
    }


def score_ati(
    responses: ResponseSet | Sequence[int], definition: QuestionnaireDefinition
) -> float:
    """Mean over all items after mapping reverse-keyed responses to
    ``lo + hi - raw``."""
    definition.validate()
    if definition.scoring_rule != RULE_MEAN:
        raise BadDefinition(f"definition {definition.instrument!r} does not use mean")
    rs = _responses(responses)
    definition.check_responses(rs)
    lo, hi = definition.response_range
    values = [
        (lo + hi - r) if i in definition.reversed_items else r
        for i, r in enumerate(rs)
    ]
    return sum(values) / len(values)


def score_responses(
    definition: QuestionnaireDefinition, responses: ResponseSet | Sequence[int]
) -> float | dict[str, float]:
    """Dispatch to the instrument's scoring rule."""
    if definition.scoring_rule == RULE_SUS:
        definition.check_responses(_responses(responses))
        return score_sus(responses)
    if definition.scoring_rule == RULE_SCALE_MEANS:
        return score_ueq(responses, definition)
    return score_ati(responses, definition)


# -- rank correlation --------------------------------------------------------


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based fractional ranks; tied values share the mean of their ranks."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected rank correlation: Pearson on average-fractional ranks."""
    if len(x) != len(y):
        raise LengthMismatch(f"length {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise TooShort(f"need at least 3 pairs, got {len(x)}")
    if min(x) == max(x) or min(y) == max(y):
        raise ConstantInput("constant sequence has no rank order")
    rho = _pearson(average_ranks(x), average_ranks(y))
    return max(-1.0, min(1.0, rho))


def spearman_no_ties(x: Sequence[float], y: Sequence[float]) -> float:
    """Closed form 1 - 6*sum(d^2)/(n(n^2-1)).

    Only valid without ties; used as a cross-check against :func:`spearman`
    on tie-free data.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"length {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise TooShort(f"need at least 3 pairs, got {len(x)}")
    if len(set(x)) != len(x) or len(set(y)) != len(y):
        raise ValueError("ties present; closed form does not apply")
    n = len(x)
    rx = average_ranks(x)
    ry = average_ranks(y)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


# -- study-level correlation table -------------------------------------------

def _session_scores(
    session: Mapping, definitions: Mapping[str, QuestionnaireDefinition]
) -> dict | None:
    """Extract the numeric columns of one session export, or None if any
    questionnaire needed for the table is missing or unscorable."""
    age = session.get("participant", {}).get("age")
    if age is None:
        return None
    by_key: dict[tuple[str, str | None], Sequence[int]] = {}
    for q in session.get("questionnaires", []):
        by_key[(q["instrument"], q.get("round"))] = q["responses"]
    if ("ati", None) not in by_key:
        return None
    try:
        out = {
            "age": age,
            "ati": score_ati(by_key[("ati", None)], definitions["ati"]),
            "rounds": {},
        }
        for kind in ("workshop", "rails"):
            if ("sus", kind) not in by_key or ("ueq", kind) not in by_key:
                return None
            out["rounds"][kind] = {
                "sus": score_sus(by_key[("sus", kind)]),
                "ueq": score_ueq(by_key[("ueq", kind)], definitions["ueq"]),
            }
    except (BadLength, OutOfRange):
        # a malformed response set disqualifies the session, it does not
        # poison the whole report
        return None
    return out


def correlate_study(
    sessions: Sequence[Mapping],
    definitions: Mapping[str, QuestionnaireDefinition],
    gender: str | None = None,
) -> dict:
    """Spearman rho for {age, ati} x {sus, each ueq scale}, per round and
    pooled across rounds.

    ``sessions`` are session-export mappings. Sessions missing any needed
    questionnaire are skipped; fewer than 3 usable sessions raise
    InsufficientData. Pairs whose inputs are constant are reported with
    ``rho: null`` and a status instead of a number.
    """
    if gender is not None:
        sessions = [
            s for s in sessions if s.get("participant", {}).get("gender") == gender
        ]
    scored = []
    for session in sessions:
        columns = _session_scores(session, definitions)
        if columns is not None:
            scored.append(columns)
    if len(scored) < 3:
        raise InsufficientData(
            f"need at least 3 sessions with complete questionnaires, "
            f"have {len(scored)}"
        )
    ueq_scales = list(definitions["ueq"].scales)
    measures = ["sus"] + [f"ueq_{name}" for name in ueq_scales]

    def column(rows: list[dict], kind: str, measure: str) -> list[float]:
        if measure == "sus":
            return [r["rounds"][kind]["sus"] for r in rows]
        scale = measure.removeprefix("ueq_")
        return [r["rounds"][kind]["ueq"][scale] for r in rows]

    entries = []
    for x_name in ("age", "ati"):
        xs = [r[x_name] for r in scored]
        for measure in measures:
            per_round = {}
            for kind in ("workshop", "rails"):
                per_round[kind] = column(scored, kind, measure)
                entries.append(
                    _table_entry(x_name, measure, kind, xs, per_round[kind])
                )
            pooled_x = xs + xs
            pooled_y = per_round["workshop"] + per_round["rails"]
            entries.append(
                _table_entry(x_name, measure, "pooled", pooled_x, pooled_y)
            )
    return {"n_sessions": len(scored), "entries": entries}


def _table_entry(
    x_name: str, y_name: str, scope: str, xs: Sequence[float], ys: Sequence[float]
) -> dict:
    entry = {"x": x_name, "y": y_name, "scope": scope, "n": len(xs)}
    try:
        entry["rho"] = spearman(xs, ys)
        entry["status"] = "ok"
    except ConstantInput:
        entry["rho"] = None
        entry["status"] = "constant_input"
    return entry
