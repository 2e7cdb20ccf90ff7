"""Decision trees over coded feature vectors, and their two file formats.

A tree node is a :class:`Leaf`, a :class:`CategoricalSplit` (branches keyed
by sets of feature values, with an optional default child for values no
branch names) or a :class:`ThresholdSplit` on the continuous ``duration``
feature (``<=`` goes left, ``>`` goes right).

Text format (human-readable, one test per line, two-space indentation)::

    if before = -sfc then non_boundary
    elseif before = +sfc then
      if duration <= 1.3 then non_boundary
      elseif duration > 1.3 then boundary
    else non_boundary

Structured format: JSON objects ``{"leaf": ...}``,
``{"feature": ..., "branches": [{"values": [...], "child": ...}], "default": ...}``
and ``{"feature": ..., "threshold": ..., "le": ..., "gt": ...}``.
Both formats round-trip exactly.
"""

import json
import math
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .coder import FEATURES_BY_NAME, FeatureVector, Label, feature
from .corpus import format_seconds
from .exceptions import SchemaError


@dataclass(frozen=True)
class Leaf:
    label: Label


@dataclass(frozen=True)
class Branch:
    values: frozenset[str]
    child: "Node"


@dataclass(frozen=True)
class CategoricalSplit:
    feature: str
    branches: tuple[Branch, ...]
    default: Optional["Node"] = None

    def __post_init__(self):
        if feature(self.feature).continuous:
            raise SchemaError(f"categorical split on continuous feature {self.feature}")
        if not self.branches:
            raise SchemaError(f"split on {self.feature} has no branches")
        seen: set[str] = set()
        for branch in self.branches:
            if not branch.values:
                raise SchemaError(f"split on {self.feature} has an empty value set")
            overlap = seen & branch.values
            if overlap:
                raise SchemaError(f"split on {self.feature} lists {sorted(overlap)} twice")
            seen |= branch.values

    def route(self, value: str) -> Optional["Node"]:
        for branch in self.branches:
            if value in branch.values:
                return branch.child
        return self.default


@dataclass(frozen=True)
class ThresholdSplit:
    feature: str
    threshold: float
    le: "Node"
    gt: "Node"

    def __post_init__(self):
        if not feature(self.feature).continuous:
            raise SchemaError(f"threshold split on categorical feature {self.feature}")
        if not math.isfinite(self.threshold):
            raise SchemaError(f"threshold on {self.feature} must be finite, got {self.threshold}")


Node = Union[Leaf, CategoricalSplit, ThresholdSplit]


def children(node: Node) -> Iterator[Node]:
    if isinstance(node, CategoricalSplit):
        for branch in node.branches:
            yield branch.child
        if node.default is not None:
            yield node.default
    elif isinstance(node, ThresholdSplit):
        yield node.le
        yield node.gt


def _test_key(node: Node) -> tuple:
    if isinstance(node, ThresholdSplit):
        return (node.feature, node.threshold)
    return (node.feature, frozenset(b.values for b in node.branches))


@dataclass(frozen=True)
class DecisionTree:
    """An immutable segmentation tree.

    Raises:
        SchemaError: If one root-to-leaf path repeats an identical test.
    """

    root: Node

    def __post_init__(self):
        self._check_paths(self.root, frozenset())

    def _check_paths(self, node: Node, seen: frozenset) -> None:
        if isinstance(node, Leaf):
            return
        key = _test_key(node)
        if key in seen:
            raise SchemaError(f"feature {node.feature} is tested twice with the same test on one path")
        for child in children(node):
            self._check_paths(child, seen | {key})

    def classify(self, vector: FeatureVector, where: str = "site") -> Label:
        """Descend from the root to a leaf.

        Raises:
            SchemaError: Naming ``where`` and the feature, when a value lies
                outside the feature's domain or no branch accepts it.
        """
        node = self.root
        while not isinstance(node, Leaf):
            value = vector.value(node.feature)
            if isinstance(node, ThresholdSplit):
                node = node.le if value <= node.threshold else node.gt
                continue
            domain = FEATURES_BY_NAME[node.feature].domain
            if domain is not None and value not in domain:
                raise SchemaError(f"{where}: {node.feature}={value!r} is outside the feature domain")
            child = node.route(value)
            if child is None:
                raise SchemaError(f"{where}: the tree has no branch for {node.feature}={value!r}")
            node = child
        return node.label

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(children(node))))

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def leaf_count(self) -> int:
        return sum(1 for n in self.nodes() if isinstance(n, Leaf))

    def features_used(self) -> set[str]:
        return {n.feature for n in self.nodes() if not isinstance(n, Leaf)}


# --- text format -------------------------------------------------------------

_INDENT = "  "
_ARM_RE = re.compile(
    r"^(?P<kw>if|elseif)\s+(?P<feature>\S+)\s+(?P<op>=|in|<=|>)\s+(?P<value>.+?)\s+then(?:\s+(?P<label>\S+))?$"
)
_ELSE_RE = re.compile(r"^else(?:\s+(?P<label>\S+))?$")


def _label_token(token: str, lineno: int) -> Label:
    normalized = token.replace("-", "_")
    try:
        return Label(normalized)
    except ValueError:
        raise SchemaError(f"tree line {lineno}: unknown class {token!r}") from None


def _values_text(values: frozenset[str]) -> str:
    if len(values) == 1:
        return f"= {next(iter(values))}"
    return "in {" + ",".join(sorted(values)) + "}"


def _emit_arm(lines: list[str], depth: int, head: str, child: Node) -> None:
    pad = _INDENT * depth
    if isinstance(child, Leaf):
        lines.append(f"{pad}{head} {child.label}")
    else:
        lines.append(f"{pad}{head}")
        _emit_node(lines, depth + 1, child)


def _emit_node(lines: list[str], depth: int, node: Node) -> None:
    if isinstance(node, Leaf):
        lines.append(f"{_INDENT * depth}{node.label}")
    elif isinstance(node, ThresholdSplit):
        threshold = format_seconds(node.threshold)
        _emit_arm(lines, depth, f"if {node.feature} <= {threshold} then", node.le)
        _emit_arm(lines, depth, f"elseif {node.feature} > {threshold} then", node.gt)
    else:
        for i, branch in enumerate(node.branches):
            keyword = "if" if i == 0 else "elseif"
            _emit_arm(lines, depth, f"{keyword} {node.feature} {_values_text(branch.values)} then", branch.child)
        if node.default is not None:
            _emit_arm(lines, depth, "else", node.default)


def tree_to_text(tree: DecisionTree) -> str:
    lines: list[str] = []
    _emit_node(lines, 0, tree.root)
    return "\n".join(lines) + "\n"


class _TextParser:
    def __init__(self, text: str):
        self.lines: list[tuple[int, int, str]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                self.lines.append((lineno, len(body) - len(body.lstrip(" ")), body.strip()))
        self.pos = 0

    def parse(self) -> DecisionTree:
        if not self.lines:
            raise SchemaError("empty tree file")
        node = self._node(self.lines[0][1])
        if self.pos != len(self.lines):
            lineno = self.lines[self.pos][0]
            raise SchemaError(f"tree line {lineno}: unexpected text after the root node")
        return DecisionTree(node)

    def _child(self, indent: int, lineno: int) -> Node:
        if self.pos >= len(self.lines) or self.lines[self.pos][1] <= indent:
            raise SchemaError(f"tree line {lineno}: 'then' without a class or an indented subtree")
        return self._node(self.lines[self.pos][1])

    def _arm_child(self, label: Optional[str], indent: int, lineno: int) -> Node:
        self.pos += 1
        if label is not None:
            return Leaf(_label_token(label, lineno))
        return self._child(indent, lineno)

    def _node(self, indent: int) -> Node:
        lineno, _, text = self.lines[self.pos]
        if not text.startswith("if "):
            self.pos += 1
            return Leaf(_label_token(text, lineno))

        arms: list[tuple[int, str, str, str, Node]] = []
        default: Optional[Node] = None
        while self.pos < len(self.lines):
            lineno, line_indent, text = self.lines[self.pos]
            if line_indent != indent:
                break
            arm = _ARM_RE.match(text)
            if arm and (arm["kw"] == "if") == (not arms):
                child = self._arm_child(arm["label"], indent, lineno)
                arms.append((lineno, arm["feature"], arm["op"], arm["value"], child))
                continue
            otherwise = _ELSE_RE.match(text)
            if otherwise and arms:
                default = self._arm_child(otherwise["label"], indent, lineno)
                break
            if arm and arm["kw"] == "if":
                break
            raise SchemaError(f"tree line {lineno}: cannot parse {text!r}")
        return self._build(arms, default)

    def _build(self, arms, default: Optional[Node]) -> Node:
        first_line, name = arms[0][0], arms[0][1]
        feature(name)
        for lineno, other, *_ in arms:
            if other != name:
                raise SchemaError(f"tree line {lineno}: arm tests {other}, expected {name}")
        ops = [op for _, _, op, _, _ in arms]
        if any(op in ("<=", ">") for op in ops):
            return self._build_threshold(arms, default, first_line, name)
        branches = []
        for lineno, _, op, value, child in arms:
            if op == "=":
                values = frozenset([value])
            else:
                inner = value.strip()
                if not (inner.startswith("{") and inner.endswith("}")):
                    raise SchemaError(f"tree line {lineno}: 'in' needs a {{...}} value set")
                values = frozenset(v.strip() for v in inner[1:-1].split(",") if v.strip())
            branches.append(Branch(values, child))
        return CategoricalSplit(name, tuple(branches), default)

    @staticmethod
    def _build_threshold(arms, default, first_line: int, name: str) -> ThresholdSplit:
        if default is not None or len(arms) != 2 or sorted(a[2] for a in arms) != ["<=", ">"]:
            raise SchemaError(f"tree line {first_line}: a threshold test needs exactly one '<=' and one '>' arm")
        try:
            thresholds = {float(a[3]) for a in arms}
        except ValueError:
            raise SchemaError(f"tree line {first_line}: threshold is not a number") from None
        if len(thresholds) != 1:
            raise SchemaError(f"tree line {first_line}: '<=' and '>' arms use different thresholds")
        by_op = {a[2]: a[4] for a in arms}
        return ThresholdSplit(name, thresholds.pop(), by_op["<="], by_op[">"])


def tree_from_text(text: str) -> DecisionTree:
    """Parse the indented if/elseif tree format.

    Raises:
        SchemaError: On any syntax or schema problem, with the line number.
    """
    return _TextParser(text).parse()


# --- structured format --------------------------------------------------------


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": str(node.label)}
    if isinstance(node, ThresholdSplit):
        return {
            "feature": node.feature,
            "threshold": node.threshold,
            "le": _node_to_dict(node.le),
            "gt": _node_to_dict(node.gt),
        }
    data = {
        "feature": node.feature,
        "branches": [{"values": sorted(b.values), "child": _node_to_dict(b.child)} for b in node.branches],
    }
    if node.default is not None:
        data["default"] = _node_to_dict(node.default)
    return data


def _node_from_dict(data) -> Node:
    if not isinstance(data, dict):
        raise SchemaError(f"tree node must be an object, got {type(data).__name__}")
    try:
        if "leaf" in data:
            return Leaf(Label(data["leaf"]))
        if "threshold" in data:
            return ThresholdSplit(
                data["feature"], float(data["threshold"]), _node_from_dict(data["le"]), _node_from_dict(data["gt"])
            )
        branches = tuple(Branch(frozenset(b["values"]), _node_from_dict(b["child"])) for b in data["branches"])
        default = _node_from_dict(data["default"]) if "default" in data else None
        return CategoricalSplit(data["feature"], branches, default)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed tree node {sorted(data)}: {exc}") from None


def tree_to_dict(tree: DecisionTree) -> dict:
    return _node_to_dict(tree.root)


def tree_from_dict(data: dict) -> DecisionTree:
    return DecisionTree(_node_from_dict(data))


def tree_to_json(tree: DecisionTree) -> str:
    return json.dumps(tree_to_dict(tree), indent=2) + "\n"


def tree_from_json(text: str) -> DecisionTree:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"tree file is not valid JSON: {exc}") from None
    return tree_from_dict(data)


def load_tree(text: str) -> DecisionTree:
    """Parse either format, telling them apart by the first character."""
    return tree_from_json(text) if text.lstrip().startswith("{") else tree_from_text(text)
