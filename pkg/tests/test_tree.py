"""Tests for decision trees and their file formats."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pico_discourse.coder import (
    COMPLEX,
    FALSE,
    FEATURE_NAMES,
    MINUS_COREF,
    MINUS_GP,
    MINUS_INFER,
    NA,
    NOT_SFC,
    PLUS_COREF,
    PLUS_GP,
    PLUS_INFER,
    SFC,
    TRUE,
    Label,
)
from pico_discourse.exceptions import SchemaError
from pico_discourse.segmenter import builtin_tree
from pico_discourse.tree import (
    Branch,
    CategoricalSplit,
    DecisionTree,
    Leaf,
    ThresholdSplit,
    load_tree,
    tree_from_json,
    tree_from_text,
    tree_to_json,
    tree_to_text,
)
from tests.conftest import make_vector

SMALL_TREE_TEXT = """\
if before = -sfc then non_boundary
elseif before = +sfc then
  if duration <= 1.3 then non_boundary
  elseif duration > 1.3 then boundary
else non_boundary
"""

CATEGORICAL_VALUES = {
    "before": [SFC, NOT_SFC],
    "after": [SFC, NOT_SFC],
    "pause": [TRUE, FALSE],
    "cue1": [TRUE, FALSE],
    "word1": ["and", "but", "so", "now", NA],
    "cue2": [TRUE, FALSE],
    "word2": ["and", "also", "well", NA],
    "coref": [PLUS_COREF, MINUS_COREF, NA],
    "infer": [PLUS_INFER, MINUS_INFER, NA],
    "global.pro": [PLUS_GP, MINUS_GP, NA],
    "cue-prosody": [COMPLEX, TRUE, FALSE],
}


@st.composite
def nodes(draw, available, depth):
    """A random subtree testing each feature at most once on any path."""
    if not available or depth >= 3 or (depth > 0 and draw(st.booleans())):
        return Leaf(draw(st.sampled_from(list(Label))))
    name = draw(st.sampled_from(sorted(available)))
    rest = available - {name}
    if name == "duration":
        threshold = draw(st.integers(min_value=0, max_value=300)) / 100
        return ThresholdSplit(name, threshold, draw(nodes(rest, depth + 1)), draw(nodes(rest, depth + 1)))
    values = draw(st.permutations(CATEGORICAL_VALUES[name]))
    used = values[: draw(st.integers(min_value=1, max_value=len(values)))]
    groups: dict[int, list[str]] = {}
    for value in used:
        groups.setdefault(draw(st.integers(min_value=0, max_value=2)), []).append(value)
    branches = tuple(Branch(frozenset(group), draw(nodes(rest, depth + 1))) for group in groups.values())
    default = draw(st.none() | nodes(rest, depth + 1))
    return CategoricalSplit(name, branches, default)


random_trees = nodes(frozenset(FEATURE_NAMES), 0).map(DecisionTree)


class TestTextFormat:
    """Tests for the indented if/elseif format."""

    def test_parse_small_tree(self):
        """Arms, nested threshold tests and the else default are read."""
        tree = tree_from_text(SMALL_TREE_TEXT)

        expected = CategoricalSplit(
            "before",
            (
                Branch(frozenset({"-sfc"}), Leaf(Label.NON_BOUNDARY)),
                Branch(
                    frozenset({"+sfc"}),
                    ThresholdSplit("duration", 1.3, Leaf(Label.NON_BOUNDARY), Leaf(Label.BOUNDARY)),
                ),
            ),
            default=Leaf(Label.NON_BOUNDARY),
        )
        assert tree == DecisionTree(expected)

    def test_emit_small_tree(self):
        """The emitter writes the same text back."""
        assert tree_to_text(tree_from_text(SMALL_TREE_TEXT)) == SMALL_TREE_TEXT

    @pytest.mark.parametrize("expand", [False, True])
    def test_builtin_tree_round_trip(self, expand):
        """The built-in tree survives the text format exactly."""
        tree = builtin_tree(expand_word1=expand)

        assert tree_from_text(tree_to_text(tree)) == tree

    def test_value_sets_and_comments(self):
        """'in {...}' arms list several values; '#' starts a comment."""
        text = "# word1 test\nif word1 in {but, now} then boundary  # strong cues\nelse non-boundary\n"

        tree = tree_from_text(text)

        assert tree.classify(make_vector(cue1=True, word1="now")) == Label.BOUNDARY
        assert tree.classify(make_vector(cue1=True, word1="so")) == Label.NON_BOUNDARY

    @pytest.mark.parametrize(
        "text,message",
        [
            ("", "empty tree file"),
            ("if before = +sfc then\n", "without a class"),
            ("if before = +sfc then maybe\nelse boundary\n", "unknown class"),
            ("if loudness = high then boundary\n", "unknown feature"),
            ("if duration <= 1 then boundary\n", "exactly one '<=' and one '>'"),
            ("if duration <= 1 then boundary\nelseif duration > 2 then non_boundary\n", "different thresholds"),
            ("if duration = 1 then boundary\n", "continuous feature"),
            ("if before <= 1 then boundary\nelseif before > 1 then non_boundary\n", "categorical feature"),
            ("if before = +sfc then boundary\nelseif before = +sfc then non_boundary\n", "twice"),
            ("if before = +sfc then boundary\nelseif after = +sfc then boundary\n", "expected before"),
            ("if before = +sfc then boundary\nwhatever\n", "cannot parse"),
        ],
    )
    def test_malformed_text(self, text, message):
        """Syntax and schema problems raise SchemaError."""
        with pytest.raises(SchemaError, match=message):
            tree_from_text(text)

    def test_repeated_test_on_one_path(self):
        """A path may not repeat an identical test."""
        text = "if before = +sfc then\n  if before = +sfc then boundary\nelse non_boundary\n"

        with pytest.raises(SchemaError, match="tested twice"):
            tree_from_text(text)


class TestRoundTrip:
    """Tests that both formats reproduce arbitrary trees."""

    @settings(max_examples=200)
    @given(random_trees)
    def test_text_round_trip(self, tree):
        """Emitting and re-parsing the text form gives an equal tree."""
        assert tree_from_text(tree_to_text(tree)) == tree

    @settings(max_examples=200)
    @given(random_trees)
    def test_json_round_trip(self, tree):
        """Emitting and re-parsing the JSON form gives an equal tree."""
        assert tree_from_json(tree_to_json(tree)) == tree


class TestStructuredFormat:
    """Tests for the JSON format."""

    def test_builtin_tree_round_trip(self):
        """The built-in tree survives the JSON format exactly."""
        tree = builtin_tree()

        assert tree_from_json(tree_to_json(tree)) == tree

    def test_leaf_and_threshold_shape(self):
        """Threshold nodes carry le and gt children."""
        data = json.loads(tree_to_json(tree_from_text(SMALL_TREE_TEXT)))

        assert data["feature"] == "before"
        assert data["branches"][1]["child"] == {
            "feature": "duration",
            "threshold": 1.3,
            "le": {"leaf": "non_boundary"},
            "gt": {"leaf": "boundary"},
        }
        assert data["default"] == {"leaf": "non_boundary"}

    def test_invalid_json(self):
        """Text that is not JSON is a schema error."""
        with pytest.raises(SchemaError, match="not valid JSON"):
            tree_from_json("{oops")

    def test_missing_key(self):
        """Nodes without their required keys are rejected."""
        with pytest.raises(SchemaError, match="malformed tree node"):
            tree_from_json('{"feature": "before"}')

    def test_load_tree_detects_format(self):
        """load_tree accepts either format."""
        tree = builtin_tree()

        assert load_tree(tree_to_json(tree)) == tree
        assert load_tree(tree_to_text(tree)) == tree


class TestClassify:
    """Tests for tree descent."""

    def test_value_outside_domain(self):
        """An out-of-domain value names the site and the feature."""
        with pytest.raises(SchemaError, match=r"n01 site 4: before='maybe'"):
            builtin_tree().classify(make_vector(before="maybe"), where="n01 site 4")

    def test_no_branch_without_default(self):
        """An open-vocabulary value with no branch and no default fails."""
        tree = tree_from_text("if word1 = so then boundary\n")

        with pytest.raises(SchemaError, match="no branch for word1='but'"):
            tree.classify(make_vector(cue1=True, word1="but"))

    def test_features_used(self):
        """The built-in tree tests eight of the twelve features."""
        assert builtin_tree().features_used() == {
            "before",
            "after",
            "duration",
            "word1",
            "coref",
            "infer",
            "global.pro",
            "cue1",
        }

    def test_single_leaf_tree(self):
        """A bare leaf gives its class to every vector."""
        tree = DecisionTree(Leaf(Label.BOUNDARY))

        vectors = [make_vector(), make_vector(before="-sfc"), make_vector(pause=False, duration=0.0)]

        assert {tree.classify(vector) for vector in vectors} == {Label.BOUNDARY}

    @pytest.mark.parametrize("duration,expected", [(0.65, Label.NON_BOUNDARY), (0.66, Label.BOUNDARY)])
    def test_threshold_is_inclusive_on_the_left(self, duration, expected):
        """A value equal to the threshold takes the <= branch."""
        tree = DecisionTree(ThresholdSplit("duration", 0.65, Leaf(Label.NON_BOUNDARY), Leaf(Label.BOUNDARY)))

        assert tree.classify(make_vector(duration=duration)) == expected

    def test_node_counts(self):
        """A single threshold test has three nodes and two leaves."""
        tree = DecisionTree(ThresholdSplit("duration", 0.5, Leaf(Label.NON_BOUNDARY), Leaf(Label.BOUNDARY)))

        assert tree.node_count == 3
        assert tree.leaf_count == 2
