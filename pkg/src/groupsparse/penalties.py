"""Weight decay, lasso, group lasso and sparse group lasso penalties.

Groups follow the neuron structure of the network: one group per input
feature (its outgoing weights in the first matrix), one per hidden neuron
(its outgoing weights in the next matrix) and one per bias, or one per bias
vector in ``PER_LAYER`` mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .network import Network, data_loss, data_loss_gradient, param_slices


class PenaltyKind(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"
    GROUP_LASSO = "gl"
    SPARSE_GROUP_LASSO = "sgl"

    @classmethod
    def parse(cls, value) -> "PenaltyKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown penalty {value!r}; expected one of {names}") from None


class GroupKind(str, enum.Enum):
    INPUT = "input"
    HIDDEN = "hidden"
    BIAS = "bias"


class BiasMode(str, enum.Enum):
    PER_BIAS = "per-bias"
    PER_LAYER = "per-layer"


@dataclass(frozen=True)
class Group:
    kind: GroupKind
    indices: np.ndarray
    layer: int
    unit: int

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @property
    def weight(self) -> float:
        return float(np.sqrt(self.size))


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups covering every entry of a flat parameter vector."""

    groups: tuple[Group, ...]
    n_params: int
    bias_mode: BiasMode = BiasMode.PER_BIAS
    # flat gather order and segment starts, for vectorised group norms
    _order: np.ndarray = field(init=False, repr=False, compare=False)
    _starts: np.ndarray = field(init=False, repr=False, compare=False)
    _sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        sizes = np.array([g.size for g in self.groups], dtype=np.intp)
        if sizes.size == 0 or sizes.min() < 1:
            raise ValueError("groups must be non-empty")
        order = np.concatenate([g.indices for g in self.groups]).astype(np.intp)
        if order.size != self.n_params or not np.array_equal(np.sort(order), np.arange(self.n_params)):
            raise ValueError("groups do not partition the parameter vector")
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_sizes", sizes)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    def count(self, kind: GroupKind) -> int:
        return sum(g.kind == kind for g in self.groups)

    def group_norms(self, w: np.ndarray) -> np.ndarray:
        """Euclidean norm of every group, in partition order."""
        w = self._check(w)
        return np.sqrt(np.add.reduceat(w[self._order] ** 2, self._starts))

    def _check(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_params,):
            raise ValueError(f"partition covers {self.n_params} parameters, got vector of shape {w.shape}")
        return w

    @classmethod
    def from_index_sets(cls, index_sets, n_params=None) -> "GroupPartition":
        """Partition from plain index lists, all tagged as hidden groups."""
        groups = [Group(GroupKind.HIDDEN, np.asarray(ix, dtype=np.intp), 0, i)
                  for i, ix in enumerate(index_sets)]
        if n_params is None:
            n_params = sum(g.size for g in groups)
        return cls(groups, n_params)


def build_groups(net: Network, bias_mode=BiasMode.PER_BIAS) -> GroupPartition:
    bias_mode = BiasMode(bias_mode)
    dims = net.layer_dims
    groups = []
    slices = param_slices(dims)
    for k, ((w_sl, b_sl), n_in, n_out) in enumerate(zip(slices, dims[:-1], dims[1:])):
        kind = GroupKind.INPUT if k == 0 else GroupKind.HIDDEN
        # column i of the (n_out, n_in) block: offsets i, i + n_in, ...
        for i in range(n_in):
            groups.append(Group(kind, w_sl.start + i + n_in * np.arange(n_out), k, i))
    for k, (_, b_sl) in enumerate(slices):
        if bias_mode is BiasMode.PER_BIAS:
            groups.extend(Group(GroupKind.BIAS, np.array([j]), k, j - b_sl.start)
                          for j in range(b_sl.start, b_sl.stop))
        else:
            groups.append(Group(GroupKind.BIAS, np.arange(b_sl.start, b_sl.stop), k, -1))
    return GroupPartition(groups, net.n_params, bias_mode)


def _group_lasso(w, partition):
    return math.fsum(np.sqrt(partition.sizes) * partition.group_norms(w))


def _group_lasso_subgradient(w, partition):
    sizes = partition.sizes
    norms = np.repeat(partition.group_norms(w), sizes)
    root = np.repeat(np.sqrt(sizes), sizes)
    order = partition._order
    g = w[order]
    nz = norms > 0
    out = np.zeros_like(w)
    # divide before scaling so singleton groups give exactly sign(w)
    out[order[nz]] = root[nz] * (g[nz] / norms[nz])
    return out


def penalty_value(kind, w, partition: GroupPartition | None = None) -> float:
    # correctly rounded sums: the value does not depend on parameter or group order
    kind = PenaltyKind.parse(kind)
    w = np.asarray(w, dtype=np.float64)
    if kind is PenaltyKind.L2:
        return math.fsum(w * w)
    if kind is PenaltyKind.L1:
        return math.fsum(np.abs(w))
    if partition is None:
        raise ValueError(f"penalty {kind.value} needs a group partition")
    w = partition._check(w)
    gl = _group_lasso(w, partition)
    if kind is PenaltyKind.GROUP_LASSO:
        return gl
    return gl + math.fsum(np.abs(w))


def penalty_subgradient(kind, w, partition: GroupPartition | None = None) -> np.ndarray:
    """Subgradient with the zero choice at non-differentiable points."""
    kind = PenaltyKind.parse(kind)
    w = np.asarray(w, dtype=np.float64)
    if kind is PenaltyKind.L2:
        return 2.0 * w
    if kind is PenaltyKind.L1:
        return np.sign(w)
    if partition is None:
        raise ValueError(f"penalty {kind.value} needs a group partition")
    w = partition._check(w)
    sub = _group_lasso_subgradient(w, partition)
    if kind is PenaltyKind.SPARSE_GROUP_LASSO:
        sub += np.sign(w)
    return sub


def objective(net: Network, X, D, kind, lam: float, partition: GroupPartition | None = None) -> float:
    """Mean cross-entropy plus ``lam`` times the penalty."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    value = data_loss(net, X, D)
    if lam:
        value += lam * penalty_value(kind, net.flat(), partition)
    return value


def total_gradient(net: Network, X, D, kind, lam: float, partition: GroupPartition | None = None,
                   trace=None) -> np.ndarray:
    """Flat gradient of :func:`objective`."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    grad = data_loss_gradient(net, X, D, trace=trace)
    if lam:
        grad += lam * penalty_subgradient(kind, net.flat(), partition)
    return grad


__all__ = [
    "BiasMode", "Group", "GroupKind", "GroupPartition", "PenaltyKind",
    "build_groups", "objective", "penalty_subgradient", "penalty_value", "total_gradient",
]
