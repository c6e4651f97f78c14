"""C4.5-style binary decision tree over numeric attributes.

Training is fully deterministic: candidate thresholds are the midpoints
between adjacent distinct sorted values of an attribute, splits are
chosen by gain ratio, and ties are broken by the lowest attribute index
and then the lowest threshold. All counts and entropies use instance
weights, so a duplicated instance and a doubled weight produce the same
tree. Pruning is the classic pessimistic error estimate with a
confidence parameter, applied bottom-up with subtree replacement only
(no subtree raising).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .treatments import TreatedPair

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    """Training parameters.

    pruning_confidence must lie in [0.10, 0.30]; smaller values prune
    more aggressively. min_leaf_weight is the smallest total instance
    weight a split may leave on either side; nodes lighter than twice
    this weight are not split at all. The seed is carried for interface
    uniformity; training itself is deterministic and does not draw
    random numbers.
    """

    pruning_confidence: float = 0.25
    min_leaf_weight: float = 2.0
    seed: int = 0
    prune: bool = True

    def __post_init__(self) -> None:
        if not 0.10 <= self.pruning_confidence <= 0.30:
            raise ValueError(
                f"pruning_confidence {self.pruning_confidence} outside [0.10, 0.30]")
        if self.min_leaf_weight <= 0:
            raise ValueError("min_leaf_weight must be positive")


class Leaf:
    __slots__ = ("w_defective", "w_clean")

    def __init__(self, w_defective: float, w_clean: float):
        self.w_defective = w_defective
        self.w_clean = w_clean


class Split:
    __slots__ = ("attribute", "threshold", "left", "right", "w_defective", "w_clean")

    def __init__(self, attribute: int, threshold: float, left, right,
                 w_defective: float, w_clean: float):
        self.attribute = attribute
        self.threshold = threshold
        self.left = left
        self.right = right
        self.w_defective = w_defective
        self.w_clean = w_clean


@dataclass(frozen=True)
class DecisionTree:
    root: Leaf | Split
    n_attributes: int
    params: TreeParams


def _binary_entropy(w_pos: np.ndarray, w_total: np.ndarray) -> np.ndarray:
    """Entropy (bits) of two-class weight splits; defined as 0 at w_total 0."""
    w_total = np.asarray(w_total, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.clip(np.where(w_total > 0, w_pos / np.where(w_total > 0, w_total, 1.0), 0.0), 0.0, 1.0)
        q = 1.0 - p
        hp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        hq = np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return -(hp + hq)


def _best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                min_leaf: float) -> tuple[int, float] | None:
    """Highest gain-ratio admissible split, or None.

    Admissible: both sides carry at least min_leaf weight and the
    information gain is positive. Ties keep the first candidate in
    (attribute, threshold) order.
    """
    total_w = w.sum()
    total_d = w[y].sum()
    h_parent = float(_binary_entropy(np.array(total_d), np.array(total_w)))
    wy = w * y

    best_ratio = -math.inf
    best: tuple[int, float] | None = None
    for attr in range(x.shape[1]):
        values = x[:, attr]
        order = np.argsort(values, kind="stable")
        vs = values[order]
        cw = np.cumsum(w[order])
        cd = np.cumsum(wy[order])

        cuts = np.flatnonzero(np.diff(vs) > 0)
        if cuts.size == 0:
            continue
        lw = cw[cuts]
        ld = cd[cuts]
        rw = np.maximum(total_w - lw, 0.0)
        rd = np.clip(total_d - ld, 0.0, rw)
        ld = np.clip(ld, 0.0, lw)

        ok = (lw >= min_leaf) & (rw >= min_leaf)
        if not ok.any():
            continue
        cuts, lw, ld, rw, rd = cuts[ok], lw[ok], ld[ok], rw[ok], rd[ok]

        children = (lw * _binary_entropy(ld, lw) + rw * _binary_entropy(rd, rw)) / total_w
        gain = h_parent - children
        pl = lw / total_w
        split_info = -(pl * np.log2(pl) + (1.0 - pl) * np.log2(1.0 - pl))
        ratio = np.where(gain > _GAIN_EPS, gain / split_info, -math.inf)

        i = int(np.argmax(ratio))
        if ratio[i] > best_ratio:
            best_ratio = float(ratio[i])
            cut = cuts[i]
            best = (attr, float((vs[cut] + vs[cut + 1]) / 2.0))
    return best


def _grow(x: np.ndarray, y: np.ndarray, w: np.ndarray,
          params: TreeParams) -> Leaf | Split:
    w_def = float(w[y].sum())
    w_cln = float(w[~y].sum())
    if (not y.any() or y.all()
            or w_def + w_cln < 2.0 * params.min_leaf_weight):
        return Leaf(w_def, w_cln)
    found = _best_split(x, y, w, params.min_leaf_weight)
    if found is None:
        return Leaf(w_def, w_cln)
    attr, thr = found
    mask = x[:, attr] <= thr
    left = _grow(x[mask], y[mask], w[mask], params)
    right = _grow(x[~mask], y[~mask], w[~mask], params)
    return Split(attr, thr, left, right, w_def, w_cln)


def _added_errors(n: float, e: float, z: float, cf: float) -> float:
    """Pessimistic extra errors for a node with n instances and e errors.

    Upper confidence bound of the binomial error rate at confidence cf,
    with the customary small-count interpolation at e < 1 and the linear
    regime when the normal approximation breaks down.
    """
    if n <= 0:
        return 0.0
    if e < 1.0:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0.0:
            return base
        return base + e * (_added_errors(n, 1.0, z, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    f = (e + 0.5) / n
    r = (f + z * z / (2.0 * n)
         + z * math.sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) \
        / (1.0 + z * z / n)
    return r * n - e


def _pessimistic_errors(node: Leaf | Split, z: float, cf: float) -> float:
    if isinstance(node, Leaf):
        e = min(node.w_defective, node.w_clean)
        n = node.w_defective + node.w_clean
        return e + _added_errors(n, e, z, cf)
    return (_pessimistic_errors(node.left, z, cf)
            + _pessimistic_errors(node.right, z, cf))


def _prune(node: Leaf | Split, z: float, cf: float) -> Leaf | Split:
    if isinstance(node, Leaf):
        return node
    node = Split(node.attribute, node.threshold,
                 _prune(node.left, z, cf), _prune(node.right, z, cf),
                 node.w_defective, node.w_clean)
    as_subtree = _pessimistic_errors(node, z, cf)
    e = min(node.w_defective, node.w_clean)
    n = node.w_defective + node.w_clean
    as_leaf = e + _added_errors(n, e, z, cf)
    if as_leaf <= as_subtree:
        return Leaf(node.w_defective, node.w_clean)
    return node


def train_tree(treated: TreatedPair, params: TreeParams | None = None) -> DecisionTree:
    """Grow and (by default) prune a tree on the treated training data."""
    params = params or TreeParams()
    x = np.asarray(treated.train_features, dtype=np.float64)
    y = np.asarray(treated.train_labels, dtype=bool)
    w = np.asarray(treated.train_weights, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("training needs at least 2 instances")
    if not np.all(np.isfinite(x)):
        raise ValueError("training features must be finite")
    if w.sum() <= 0:
        raise ValueError("total training weight must be positive")

    root = _grow(x, y, w, params)
    if params.prune:
        z = NormalDist().inv_cdf(1.0 - params.pruning_confidence)
        root = _prune(root, z, params.pruning_confidence)
    return DecisionTree(root=root, n_attributes=x.shape[1], params=params)


def predict_proba(tree: DecisionTree, instance) -> float:
    """Laplace-smoothed defect probability of the leaf the instance reaches."""
    row = np.asarray(instance, dtype=np.float64)
    if row.shape != (tree.n_attributes,):
        raise ValueError(
            f"expected {tree.n_attributes} attribute values, got shape {row.shape}")
    if not np.all(np.isfinite(row)):
        raise ValueError("cannot predict from non-finite feature values")
    node = tree.root
    while isinstance(node, Split):
        node = node.left if row[node.attribute] <= node.threshold else node.right
    return (node.w_defective + 1.0) / (node.w_defective + node.w_clean + 2.0)


def predict(tree: DecisionTree, instance, threshold: float = 0.5) -> bool:
    """Defective iff the leaf probability reaches the threshold."""
    return predict_proba(tree, instance) >= threshold


def leaf_count(tree: DecisionTree) -> int:
    def count(node) -> int:
        if isinstance(node, Leaf):
            return 1
        return count(node.left) + count(node.right)
    return count(tree.root)


def tree_depth(tree: DecisionTree) -> int:
    def depth(node) -> int:
        if isinstance(node, Leaf):
            return 0
        return 1 + max(depth(node.left), depth(node.right))
    return depth(tree.root)


def dump_tree(tree: DecisionTree) -> str:
    """Plain-text rendering, one node per line, children indented."""
    lines: list[str] = []

    def walk(node, depth: int) -> None:
        pad = "  " * depth
        if isinstance(node, Leaf):
            lines.append(
                f"{pad}leaf defective={node.w_defective!r} clean={node.w_clean!r}")
        else:
            lines.append(f"{pad}attr {node.attribute} <= {node.threshold!r}")
            walk(node.left, depth + 1)
            walk(node.right, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines) + "\n"
