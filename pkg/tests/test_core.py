from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from macrozip.core import (
    Codebook,
    CodeEntry,
    ExtendedActionSet,
    Macro,
    MacroDistribution,
    Trajectory,
    is_prefix_free,
    macro_equal_discrete,
    normalize_counts,
    read_trajectories,
    write_trajectories,
)


def test_normalize_counts_example():
    d = normalize_counts({"a": 3, "b": 1})
    assert d["a"] == 0.75 and d["b"] == 0.25


def test_normalize_counts_keeps_zero_entries():
    d = normalize_counts({"a": 2, "b": 0})
    assert d["b"] == 0.0
    assert d.support() == ["a"]


def test_normalize_counts_rejects_empty():
    with pytest.raises(ValueError, match="empty distribution"):
        normalize_counts({"a": 0})
    with pytest.raises(ValueError, match="empty distribution"):
        normalize_counts({})


@given(st.dictionaries(st.integers(0, 50), st.integers(0, 10_000), min_size=1).filter(lambda d: sum(d.values()) > 0))
def test_normalized_probabilities_sum_to_one(counts):
    d = normalize_counts(counts)
    assert abs(sum(d.values()) - 1.0) <= 1e-9
    assert all(p >= 0 for p in d.values())


def test_distribution_validates_sum():
    with pytest.raises(ValueError):
        MacroDistribution({"a": 0.5, "b": 0.4})
    with pytest.raises(ValueError):
        MacroDistribution({"a": 1.5, "b": -0.5})


def test_macro_equality():
    assert macro_equal_discrete((0, 1, 2), Macro((0, 1, 2), id=7))
    assert not macro_equal_discrete((0, 1, 2), (2, 1, 0))
    assert not macro_equal_discrete((0, 1), (0, 1, 1))
    with pytest.raises(TypeError, match="type mismatch"):
        macro_equal_discrete((0, 1), ((0.5,), (0.2,)))


def test_continuous_trajectory_needs_dt():
    with pytest.raises(ValueError):
        Trajectory(actions=((0.1,), (0.2,)))
    t = Trajectory(actions=(0.1, 0.2), dt=1.0)
    assert t.is_continuous and t.actions == ((0.1,), (0.2,))


def test_trajectory_rejects_mixed_actions():
    with pytest.raises(ValueError, match="mixes"):
        Trajectory(actions=(1, (0.5,)), dt=1.0)


def test_trajectory_jsonl_round_trip(tmp_path):
    trajs = [
        Trajectory(actions=(0, 1, 2), task_id="a"),
        Trajectory(actions=((0.5,), (-1.0,)), task_id="b", dt=0.5),
    ]
    path = tmp_path / "c.jsonl"
    write_trajectories(trajs, path)
    assert read_trajectories(path) == trajs


def test_read_trajectories_reports_line():
    with pytest.raises(ValueError, match="line 2"):
        read_trajectories(['{"actions": [0]}', '{"nope": 1}'])


@given(st.lists(st.text(alphabet="01", min_size=1, max_size=6), min_size=1, max_size=12, unique=True))
def test_prefix_free_matches_pairwise_definition(codes):
    expected = not any(a != b and b.startswith(a) for a in codes for b in codes)
    assert is_prefix_free(codes) == expected


def test_codebook_rejects_prefix_violation():
    with pytest.raises(ValueError, match="prefix"):
        Codebook("huffman", (CodeEntry((0,), "0"), CodeEntry((1,), "01")))


def test_lzw_codebook_width_checks():
    with pytest.raises(ValueError):
        Codebook("lzw", (CodeEntry((0,), "0"), CodeEntry((1,), "01")), b_limit=2)
    with pytest.raises(ValueError, match="exceeds"):
        Codebook("lzw", tuple(CodeEntry((i,), format(i % 2, "01b")) for i in range(3)), b_limit=1)


def test_codebook_json_round_trip():
    cb = Codebook("huffman", (CodeEntry((0, 0), "0", 0.5), CodeEntry((1,), "10", 0.0, True), CodeEntry((2,), "11")))
    again = Codebook.from_json(json.loads(json.dumps(cb.to_json())))
    assert again == cb
    assert cb.max_macro_code_length == 2


def test_extended_action_set_indices():
    acts = ExtendedActionSet((0, 1), (Macro((0, 0), id=0),), MacroDistribution({2: 0.75, 0: 0.25}))
    assert len(acts) == 3
    assert acts.sequences == [(0,), (1,), (0, 0)]
    keys, cum = acts.cumulative_pool
    assert keys == [2, 0] and cum[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ExtendedActionSet((0, 1), (), MacroDistribution({5: 1.0}))
