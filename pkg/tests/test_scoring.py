import math
import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railabel.errors import (
    BadDefinition,
    BadLength,
    ConstantInput,
    InsufficientData,
    LengthMismatch,
    OutOfRange,
    TooShort,
)
from railabel.scoring import (
    QuestionnaireDefinition,
    average_ranks,
    correlate_study,
    default_definitions,
    load_definition,
    score_ati,
    score_responses,
    score_sus,
    score_ueq,
    spearman,
    spearman_no_ties,
)

DEFS = default_definitions()

# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def brute_force_rho(x, y):
    """Average ranks by counting, Pearson via the stdlib. Deliberately a
    different construction from the implementation under test."""

    def ranks(values):
        return [
            sum(1 for other in values if other < v)
            + (sum(1 for other in values if other == v) + 1) / 2
            for v in values
        ]

    return statistics.correlation(ranks(x), ranks(y))


# UEQ fixture: 26 responses worked through the shipped definition by hand.
# Reversed items (1-based): 3,4,5,9,10,12,17,18,19,21,23,24,25.
UEQ_FIXTURE = [5, 6, 2, 3, 1, 7, 4, 2, 3, 1, 6, 2, 5, 7, 4, 6, 3, 2, 1, 5, 2, 6, 4, 1, 2, 7]
UEQ_EXPECTED = {
    "attractiveness": 13 / 6,  # items 1,12,14,16,24,25 -> +1+2+3+2+3+2
    "perspicuity": 1.5,        # items 2,4,13,21        -> +2+1+1+2
    "efficiency": 1.0,         # items 9,20,22,23       -> +1+1+2+0
    "dependability": 1.0,      # items 8,11,17,19       -> -2+2+1+3
    "stimulation": 2.0,        # items 5,6,7,18         -> +3+3+0+2
    "novelty": 2.0,            # items 3,10,15,26       -> +2+3+0+3
}

# ATI fixture: reversed items 3,6,8 mapped r -> 7-r, then the plain mean.
ATI_FIXTURE = [4, 2, 5, 6, 1, 3, 2, 6, 5]
ATI_EXPECTED = 3.0  # (4+2+2+6+1+4+2+1+5) / 9

# SUS fixtures: contributions worked out by hand from the position rule.
SUS_FIXTURES = [
    ([5, 1, 5, 1, 5, 1, 5, 1, 5, 1], 100.0),
    ([3, 3, 3, 3, 3, 3, 3, 3, 3, 3], 50.0),
    ([4, 2, 4, 2, 3, 3, 5, 1, 4, 2], 75.0),
    ([3, 2, 4, 1, 5, 2, 3, 3, 4, 2], 72.5),
    ([1, 5, 1, 5, 1, 5, 1, 5, 1, 5], 0.0),
]


# ---------------------------------------------------------------------------
# SUS
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("responses,expected", SUS_FIXTURES)
def test_sus_fixtures(responses, expected):
    assert score_sus(responses) == expected


def test_sus_validation():
    with pytest.raises(BadLength):
        score_sus([3] * 9)
    with pytest.raises(BadLength):
        score_sus([3] * 11)
    with pytest.raises(OutOfRange):
        score_sus([3] * 9 + [6])
    with pytest.raises(OutOfRange):
        score_sus([0] + [3] * 9)
    with pytest.raises(OutOfRange):
        score_sus([3.0] + [3] * 9)


@given(st.lists(st.integers(1, 5), min_size=10, max_size=10))
def test_sus_range_and_grid(responses):
    score = score_sus(responses)
    assert 0.0 <= score <= 100.0
    assert score == 2.5 * round(score / 2.5)


@given(
    st.lists(st.integers(1, 5), min_size=10, max_size=10),
    st.integers(0, 9),
)
def test_sus_monotonicity(responses, position):
    base = score_sus(responses)
    bumped = list(responses)
    if position % 2 == 0:
        bumped[position] = min(5, bumped[position] + 1)
    else:
        bumped[position] = max(1, bumped[position] - 1)
    assert score_sus(bumped) >= base


# ---------------------------------------------------------------------------
# UEQ
# ---------------------------------------------------------------------------


def test_ueq_fixture_matches_hand_computation():
    scores = score_ueq(UEQ_FIXTURE, DEFS["ueq"])
    assert set(scores) == set(UEQ_EXPECTED)
    for scale, expected in UEQ_EXPECTED.items():
        assert scores[scale] == pytest.approx(expected, abs=1e-12)


def test_ueq_midpoint_and_poles():
    assert score_ueq([4] * 26, DEFS["ueq"]) == {s: 0.0 for s in UEQ_EXPECTED}
    reversed_items = DEFS["ueq"].reversed_items
    poles = [1 if i in reversed_items else 7 for i in range(26)]
    assert score_ueq(poles, DEFS["ueq"]) == {s: 3.0 for s in UEQ_EXPECTED}
    anti = [7 if i in reversed_items else 1 for i in range(26)]
    assert score_ueq(anti, DEFS["ueq"]) == {s: -3.0 for s in UEQ_EXPECTED}


def test_ueq_validation():
    with pytest.raises(BadLength):
        score_ueq([4] * 25, DEFS["ueq"])
    with pytest.raises(OutOfRange):
        score_ueq([4] * 25 + [8], DEFS["ueq"])
    with pytest.raises(BadDefinition):
        score_ueq([4] * 26, DEFS["ati"])


@given(st.lists(st.integers(1, 7), min_size=26, max_size=26))
def test_ueq_scale_means_in_range(responses):
    for value in score_ueq(responses, DEFS["ueq"]).values():
        assert -3.0 <= value <= 3.0


# ---------------------------------------------------------------------------
# ATI
# ---------------------------------------------------------------------------


def test_ati_fixture_matches_hand_computation():
    assert score_ati(ATI_FIXTURE, DEFS["ati"]) == pytest.approx(ATI_EXPECTED)


def test_ati_midpoint_and_poles():
    no_reversals = QuestionnaireDefinition(
        instrument="ati",
        items=9,
        response_range=(1, 6),
        reversed_items=frozenset(),
        scales={},
        scoring_rule="mean",
    )
    assert score_ati([3] * 9, no_reversals) == 3.0
    reversed_items = DEFS["ati"].reversed_items
    poles = [1 if i in reversed_items else 6 for i in range(9)]
    assert score_ati(poles, DEFS["ati"]) == 6.0
    anti = [6 if i in reversed_items else 1 for i in range(9)]
    assert score_ati(anti, DEFS["ati"]) == 1.0


def test_ati_validation():
    with pytest.raises(BadLength):
        score_ati([3] * 8, DEFS["ati"])
    with pytest.raises(OutOfRange):
        score_ati([3] * 8 + [7], DEFS["ati"])


@given(st.lists(st.integers(1, 6), min_size=9, max_size=9))
def test_ati_mean_in_range(responses):
    assert 1.0 <= score_ati(responses, DEFS["ati"]) <= 6.0


# ---------------------------------------------------------------------------
# reversal consistency (UEQ and ATI)
# ---------------------------------------------------------------------------


def _flip(definition, responses, items_to_flip):
    lo, hi = definition.response_range
    flipped_def = QuestionnaireDefinition(
        instrument=definition.instrument,
        items=definition.items,
        response_range=definition.response_range,
        reversed_items=frozenset(definition.reversed_items ^ items_to_flip),
        scales=definition.scales,
        scoring_rule=definition.scoring_rule,
    )
    flipped_responses = [
        (lo + hi - r) if i in items_to_flip else r for i, r in enumerate(responses)
    ]
    return flipped_def, flipped_responses


@given(
    st.lists(st.integers(1, 7), min_size=26, max_size=26),
    st.sets(st.integers(0, 25)),
)
def test_ueq_reversal_consistency(responses, flip_set):
    flipped_def, flipped_responses = _flip(DEFS["ueq"], responses, frozenset(flip_set))
    original = score_ueq(responses, DEFS["ueq"])
    flipped = score_ueq(flipped_responses, flipped_def)
    for scale in original:
        assert flipped[scale] == pytest.approx(original[scale], abs=1e-12)


@given(
    st.lists(st.integers(1, 6), min_size=9, max_size=9),
    st.sets(st.integers(0, 8)),
)
def test_ati_reversal_consistency(responses, flip_set):
    flipped_def, flipped_responses = _flip(DEFS["ati"], responses, frozenset(flip_set))
    assert score_ati(flipped_responses, flipped_def) == pytest.approx(
        score_ati(responses, DEFS["ati"]), abs=1e-12
    )


# ---------------------------------------------------------------------------
# definitions
# ---------------------------------------------------------------------------


def test_shipped_definitions_validate():
    assert set(DEFS) == {"sus", "ueq", "ati"}
    for d in DEFS.values():
        d.validate()
    assert DEFS["sus"].items == 10
    assert DEFS["ueq"].items == 26
    assert sorted(len(v) for v in DEFS["ueq"].scales.values()) == [4, 4, 4, 4, 4, 6]
    assert DEFS["ati"].items == 9


def test_definition_validation_rejects_structural_breakage():
    base = {
        "instrument": "ueq",
        "items": 26,
        "response_range": [1, 7],
        "reversed_items": [3, 4],
        "scales": {
            "attractiveness": [1, 12, 14, 16, 24, 25],
            "perspicuity": [2, 4, 13, 21],
            "efficiency": [9, 20, 22, 23],
            "dependability": [8, 11, 17, 19],
            "stimulation": [5, 6, 7, 18],
            "novelty": [3, 10, 15, 26],
        },
        "scoring_rule": "scale_means",
    }
    load_definition(base)  # sanity: the base is valid
    for breakage in (
        {"items": 25},
        {"response_range": [1, 5]},
        {"response_range": [7, 1]},
        {"reversed_items": [0]},
        {"reversed_items": [27]},
        {"scoring_rule": "bogus"},
        {"scales": dict(base["scales"], novelty=[3, 10, 15, 24])},  # overlap
        {"scales": dict(base["scales"], novelty=[3, 10, 15])},  # wrong size
    ):
        with pytest.raises(BadDefinition):
            load_definition(dict(base, **breakage))
    with pytest.raises(BadDefinition):
        load_definition({"instrument": "x"})  # missing fields
    with pytest.raises(BadDefinition):
        load_definition(
            {
                "instrument": "sus",
                "items": 12,
                "response_range": [1, 5],
                "scoring_rule": "sus",
            }
        )


def test_score_responses_dispatch():
    assert score_responses(DEFS["sus"], [3] * 10) == 50.0
    assert score_responses(DEFS["ati"], ATI_FIXTURE) == pytest.approx(3.0)
    assert score_responses(DEFS["ueq"], [4] * 26)["novelty"] == 0.0


# ---------------------------------------------------------------------------
# spearman
# ---------------------------------------------------------------------------


def test_average_ranks():
    assert average_ranks([10, 20, 30]) == [1.0, 2.0, 3.0]
    assert average_ranks([1, 2, 2, 4]) == [1.0, 2.5, 2.5, 4.0]
    assert average_ranks([5, 5, 5, 1]) == [3.0, 3.0, 3.0, 1.0]


def test_spearman_perfect_agreement_and_reversal():
    assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_tie_fixture():
    # hand-worked: ranks x = [1, 2.5, 2.5, 4], ranks y = [1, 3, 2, 4]
    # Pearson of those ranks = 4.5 / sqrt(4.5 * 5.0)
    expected = 4.5 / math.sqrt(22.5)
    assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(expected, abs=1e-12)
    assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(
        brute_force_rho([1, 2, 2, 4], [1, 3, 2, 4]), abs=1e-12
    )


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(TooShort):
        spearman([1, 2], [1, 2])
    with pytest.raises(ConstantInput):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ConstantInput):
        spearman([1, 2, 3], [7, 7, 7])


def test_closed_form_cross_check_without_ties():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(3, 12)
        x = rng.sample(range(100), n)
        y = rng.sample(range(100), n)
        assert spearman_no_ties(x, y) == pytest.approx(spearman(x, y), abs=1e-12)
    with pytest.raises(ValueError):
        spearman_no_ties([1, 1, 2], [1, 2, 3])


@given(
    st.lists(st.integers(-50, 50), min_size=3, max_size=30),
    st.lists(st.integers(-50, 50), min_size=3, max_size=30),
)
def test_spearman_matches_oracle_and_is_symmetric(x, y):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    if min(x) == max(x) or min(y) == max(y):
        return
    rho = spearman(x, y)
    assert -1.0 <= rho <= 1.0
    assert rho == pytest.approx(brute_force_rho(x, y), abs=1e-9)
    assert spearman(y, x) == pytest.approx(rho, abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.integers(-20, 20), min_size=3, max_size=15))
def test_spearman_invariant_under_increasing_transform(x):
    if min(x) == max(x):
        return
    y = list(range(len(x)))
    transformed = [2.5 * v**3 + 7 for v in x]  # strictly increasing map
    assert spearman(transformed, y) == pytest.approx(spearman(x, y), abs=1e-12)


# ---------------------------------------------------------------------------
# correlate_study
# ---------------------------------------------------------------------------


def _synthetic_session(i, age, sus_w, sus_r, ati, ueq_value=4):
    return {
        "session_id": f"ss{i}",
        "participant": {"participant_id": f"p{i}", "age": age, "gender": "x"},
        "questionnaires": [
            {"instrument": "ati", "round": None, "responses": ati},
            {"instrument": "sus", "round": "workshop", "responses": sus_w},
            {"instrument": "sus", "round": "rails", "responses": sus_r},
            {"instrument": "ueq", "round": "workshop", "responses": [ueq_value] * 26},
            {"instrument": "ueq", "round": "rails", "responses": [ueq_value] * 26},
        ],
    }


def _sus_with_score(step):
    # odd items at 1+step keep everything on a known monotone ladder
    return [1 + step if i % 2 == 0 else 1 for i in range(10)]


def test_correlate_study_monotone_fixture():
    sessions = [
        _synthetic_session(i, age=20 + 10 * i, sus_w=_sus_with_score(i + 1),
                           sus_r=_sus_with_score(i + 1), ati=[1 + i] * 9)
        for i in range(3)
    ]
    table = correlate_study(sessions, DEFS)
    assert table["n_sessions"] == 3
    by_key = {(e["x"], e["y"], e["scope"]): e for e in table["entries"]}
    assert by_key[("age", "sus", "workshop")]["rho"] == pytest.approx(1.0)
    assert by_key[("age", "sus", "pooled")]["rho"] == pytest.approx(1.0)
    assert by_key[("ati", "sus", "rails")]["rho"] == pytest.approx(1.0)
    # constant UEQ columns are reported, not computed
    entry = by_key[("age", "ueq_novelty", "workshop")]
    assert entry["rho"] is None and entry["status"] == "constant_input"


def test_correlate_study_insufficient_data():
    sessions = [
        _synthetic_session(i, 20 + i, _sus_with_score(1), _sus_with_score(2), [3] * 9)
        for i in range(2)
    ]
    with pytest.raises(InsufficientData):
        correlate_study(sessions, DEFS)
    # incomplete sessions don't count toward the minimum
    incomplete = _synthetic_session(9, 50, _sus_with_score(1), _sus_with_score(1), [3] * 9)
    incomplete["questionnaires"] = incomplete["questionnaires"][1:]  # drop ati
    with pytest.raises(InsufficientData):
        correlate_study(sessions + [incomplete], DEFS)


def test_correlate_study_matches_direct_column_extraction():
    rng = random.Random(42)
    sessions = []
    for i in range(10):
        sessions.append(
            _synthetic_session(
                i,
                age=rng.randint(18, 70),
                sus_w=[rng.randint(1, 5) for _ in range(10)],
                sus_r=[rng.randint(1, 5) for _ in range(10)],
                ati=[rng.randint(1, 6) for _ in range(9)],
                ueq_value=rng.randint(1, 7),
            )
        )
    table = correlate_study(sessions, DEFS)
    ages = [s["participant"]["age"] for s in sessions]
    sus_w = [score_sus(s["questionnaires"][1]["responses"]) for s in sessions]
    expected = spearman(ages, sus_w)
    by_key = {(e["x"], e["y"], e["scope"]): e for e in table["entries"]}
    assert by_key[("age", "sus", "workshop")]["rho"] == pytest.approx(expected, abs=1e-12)
    atis = [score_ati(s["questionnaires"][0]["responses"], DEFS["ati"]) for s in sessions]
    sus_r = [score_sus(s["questionnaires"][2]["responses"]) for s in sessions]
    assert by_key[("ati", "sus", "pooled")]["rho"] == pytest.approx(
        spearman(atis + atis, sus_w + sus_r), abs=1e-12
    )


def test_correlate_study_gender_filter():
    sessions = [
        _synthetic_session(i, 20 + i, _sus_with_score(i % 4 + 1),
                           _sus_with_score(i % 4 + 1), [2] * 9)
        for i in range(6)
    ]
    for i, s in enumerate(sessions):
        s["participant"]["gender"] = "a" if i % 2 == 0 else "b"
    table = correlate_study(sessions, DEFS, gender="a")
    assert table["n_sessions"] == 3
