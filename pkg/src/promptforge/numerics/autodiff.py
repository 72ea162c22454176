"""Define-by-run reverse-mode differentiation over float64 numpy arrays.

Each operation appends a node to an implicit tape (the node graph itself);
``backward`` replays the tape in reverse topological order exactly once.
The graph is rebuilt on every optimization step, which keeps the engine
simple and is fast enough at desk scale.

Gradients are only propagated into subgraphs that contain at least one
``requires_grad`` leaf, so frozen networks cost a forward pass only.
"""

from __future__ import annotations

import numpy as np

ARCSIN_CLAMP = 1.0 - 1e-7


class NumericFault(RuntimeError):
    """A non-finite value appeared during evaluation."""


class Node:
    """One recorded value in the tape: a float64 array plus provenance."""

    __slots__ = ("value", "parents", "bwd", "requires_grad", "grad", "op")

    def __init__(self, value, parents=(), bwd=None, requires_grad=False, op="leaf"):
        self.value = value
        self.parents = parents
        self.bwd = bwd
        self.requires_grad = requires_grad
        self.grad = None
        self.op = op

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(op={self.op}, shape={self.value.shape}, requires_grad={self.requires_grad})"

    # Small operator sugar; everything routes through the module functions.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def _as_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    return arr


def leaf(value, requires_grad: bool = True, op: str = "leaf") -> Node:
    return Node(_as_array(value), requires_grad=requires_grad, op=op)


def constant(value, op: str = "const") -> Node:
    return Node(_as_array(value), requires_grad=False, op=op)


def _lift(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _accum(node: Node, g: np.ndarray) -> None:
    if node.grad is None:
        node.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g, dtype=np.float64)
    else:
        node.grad += g


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Node:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    req = a.requires_grad or b.requires_grad
    if av.shape == bv.shape:
        def bwd(g):
            if a.requires_grad:
                _accum(a, g)
            if b.requires_grad:
                _accum(b, g)
    elif bv.ndim == 1 and av.ndim == 2 and av.shape[1] == bv.shape[0]:
        # bias add: (B, n) + (n,)
        def bwd(g):
            if a.requires_grad:
                _accum(a, g)
            if b.requires_grad:
                _accum(b, g.sum(axis=0))
    elif bv.ndim == 0 or av.ndim == 0:
        def bwd(g):
            if a.requires_grad:
                _accum(a, g if av.ndim else np.sum(g))
            if b.requires_grad:
                _accum(b, g if bv.ndim else np.sum(g))
    else:
        raise ValueError(f"add: incompatible shapes {av.shape} and {bv.shape}")
    return Node(av + bv, (a, b), bwd if req else None, req, "add")


def sub(a, b) -> Node:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    if av.shape != bv.shape and not (av.ndim == 0 or bv.ndim == 0):
        raise ValueError(f"sub: incompatible shapes {av.shape} and {bv.shape}")
    req = a.requires_grad or b.requires_grad

    def bwd(g):
        if a.requires_grad:
            _accum(a, g if av.ndim else np.sum(g))
        if b.requires_grad:
            _accum(b, -g if bv.ndim else -np.sum(g))

    return Node(av - bv, (a, b), bwd if req else None, req, "sub")


def neg(a) -> Node:
    a = _lift(a)

    def bwd(g):
        if a.requires_grad:
            _accum(a, -g)

    return Node(-a.value, (a,), bwd if a.requires_grad else None, a.requires_grad, "neg")


def mul(a, b) -> Node:
    """Elementwise product; also covers scalar * tensor."""
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    if av.shape != bv.shape and not (av.ndim == 0 or bv.ndim == 0):
        raise ValueError(f"mul: incompatible shapes {av.shape} and {bv.shape}")
    req = a.requires_grad or b.requires_grad

    def bwd(g):
        if a.requires_grad:
            ga = g * bv
            _accum(a, ga if av.ndim else np.sum(ga))
        if b.requires_grad:
            gb = g * av
            _accum(b, gb if bv.ndim else np.sum(gb))

    return Node(av * bv, (a, b), bwd if req else None, req, "mul")


def matmul(a, b) -> Node:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise ValueError("matmul supports rank-1 and rank-2 operands only")
    req = a.requires_grad or b.requires_grad

    def bwd(g):
        if a.requires_grad:
            if av.ndim == 2 and bv.ndim == 2:
                _accum(a, g @ bv.T)
            elif av.ndim == 1 and bv.ndim == 2:
                _accum(a, g @ bv.T)
            elif av.ndim == 2 and bv.ndim == 1:
                _accum(a, np.outer(g, bv))
            else:
                _accum(a, g * bv)
        if b.requires_grad:
            if av.ndim == 2 and bv.ndim == 2:
                _accum(b, av.T @ g)
            elif av.ndim == 1 and bv.ndim == 2:
                _accum(b, np.outer(av, g))
            elif av.ndim == 2 and bv.ndim == 1:
                _accum(b, av.T @ g)
            else:
                _accum(b, g * av)

    return Node(av @ bv, (a, b), bwd if req else None, req, "matmul")


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def relu(a) -> Node:
    a = _lift(a)
    out = np.maximum(a.value, 0.0)

    def bwd(g):
        _accum(a, np.where(a.value > 0.0, g, 0.0))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "relu")


def tanh(a) -> Node:
    a = _lift(a)
    out = np.tanh(a.value)

    def bwd(g):
        _accum(a, g * (1.0 - out * out))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "tanh")


def sigmoid(a) -> Node:
    a = _lift(a)
    out = 1.0 / (1.0 + np.exp(-a.value))

    def bwd(g):
        _accum(a, g * out * (1.0 - out))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "sigmoid")


def exp(a) -> Node:
    a = _lift(a)
    out = np.exp(a.value)

    def bwd(g):
        _accum(a, g * out)

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "exp")


def log(a) -> Node:
    a = _lift(a)
    out = np.log(a.value)

    def bwd(g):
        _accum(a, g / a.value)

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "log")


def absval(a) -> Node:
    a = _lift(a)
    out = np.abs(a.value)

    def bwd(g):
        _accum(a, g * np.sign(a.value))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "abs")


def sqrt(a) -> Node:
    a = _lift(a)
    out = np.sqrt(a.value)

    def bwd(g):
        _accum(a, g * (0.5 / out))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "sqrt")


def arcsin(a) -> Node:
    """arcsin with inputs clamped to |x| <= 1 - 1e-7.

    The clamp keeps the derivative 1/sqrt(1 - x^2) finite when the two unit
    vectors feeding a spherical distance become identical or antipodal.
    """
    a = _lift(a)
    clamped = np.clip(a.value, -ARCSIN_CLAMP, ARCSIN_CLAMP)
    out = np.arcsin(clamped)

    def bwd(g):
        _accum(a, g / np.sqrt(1.0 - clamped * clamped))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "arcsin")


# ---------------------------------------------------------------------------
# reductions and normalizations


def reduce_sum(a, axis=None) -> Node:
    a = _lift(a)
    out = a.value.sum(axis=axis)

    def bwd(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.value.shape))
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.value.shape))

    return Node(np.asarray(out), (a,), bwd if a.requires_grad else None, a.requires_grad, "sum")


def reduce_mean(a, axis=None) -> Node:
    a = _lift(a)
    out = a.value.mean(axis=axis)
    count = a.value.size if axis is None else a.value.shape[axis]

    def bwd(g):
        scaled = g / count
        if axis is None:
            _accum(a, np.broadcast_to(scaled, a.value.shape))
        else:
            _accum(a, np.broadcast_to(np.expand_dims(scaled, axis), a.value.shape))

    return Node(np.asarray(out), (a,), bwd if a.requires_grad else None, a.requires_grad, "mean")


def softmax(a, axis: int = -1) -> Node:
    a = _lift(a)
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        _accum(a, out * (g - inner))

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "softmax")


def l2_normalize(a, axis: int = -1) -> Node:
    a = _lift(a)
    norm = np.sqrt((a.value * a.value).sum(axis=axis, keepdims=True))
    out = a.value / norm

    def bwd(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        _accum(a, (g - out * inner) / norm)

    return Node(out, (a,), bwd if a.requires_grad else None, a.requires_grad, "l2norm")


# ---------------------------------------------------------------------------
# structural ops


def gather_rows(table, ids) -> Node:
    """Row lookup table[ids]; gradients scatter-add back into the table."""
    table = _lift(table)
    ids = np.asarray(ids, dtype=np.intp)
    out = table.value[ids]

    def bwd(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.value)
        np.add.at(table.grad, ids, g)

    return Node(out, (table,), bwd if table.requires_grad else None,
                table.requires_grad, "gather")


def stack(nodes) -> Node:
    """Stack equal-shape nodes along a new leading axis."""
    nodes = [_lift(n) for n in nodes]
    req = any(n.requires_grad for n in nodes)
    out = np.stack([n.value for n in nodes])

    def bwd(g):
        for i, n in enumerate(nodes):
            if n.requires_grad:
                _accum(n, g[i])

    return Node(out, tuple(nodes), bwd if req else None, req, "stack")


# ---------------------------------------------------------------------------
# evaluation


def _topo_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node.parents:
            if id(p) not in seen and p.requires_grad:
                stack_.append((p, False))
    return order


def _find_first_nonfinite(root: Node) -> Node | None:
    order: list[Node] = []
    seen: set[int] = set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node.parents:
            stack_.append((p, False))
    for node in order:
        if not np.all(np.isfinite(node.value)):
            return node
    return None


def backward(root: Node) -> None:
    """Reverse-mode pass from a scalar root; fills ``grad`` on leaves."""
    if root.value.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {root.value.shape}")
    if not np.isfinite(root.value):
        bad = _find_first_nonfinite(root)
        raise NumericFault(f"non-finite value at node op={bad.op if bad else root.op!r}")
    order = _topo_order(root)
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


def evaluate_with_gradients(root: Node, leaves) -> tuple[float, list[np.ndarray]]:
    """Scalar tape value plus exact gradients for each requested leaf."""
    backward(root)
    grads = []
    for lf in leaves:
        g = lf.grad if lf.grad is not None else np.zeros_like(lf.value)
        if not np.all(np.isfinite(g)):
            raise NumericFault(f"non-finite gradient for leaf op={lf.op!r}")
        grads.append(g)
    return float(root.value), grads
