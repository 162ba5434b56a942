"""Shared test helpers: random formula generation and reference evaluation."""

import numpy as np

from fplbpg.lang import And, Leaf, Not, Offset, Or, Power

LEAF_NAMES = ("a", "b", "c", "f_one", "f_two", "x0")


def random_formula(rng: np.random.Generator, depth: int = 3, names=LEAF_NAMES):
    """Random well-formed formula tree with strict-mode exponents."""
    if depth == 0 or rng.random() < 0.25:
        return Leaf(str(rng.choice(names)))
    kind = rng.choice(["and", "or", "not", "offset", "power"])
    if kind in ("and", "or"):
        arity = int(rng.integers(2, 5))
        children = tuple(random_formula(rng, depth - 1, names) for _ in range(arity))
        p = float(rng.choice([0.0, -0.5, -1.0, -2.0, rng.uniform(-5.0, 0.0)]))
        return And(p, children) if kind == "and" else Or(p, children)
    child = random_formula(rng, depth - 1, names)
    if kind == "not":
        return Not(child)
    if kind == "offset":
        return Offset(child, float(rng.uniform(-0.9, 1.0)))
    return Power(child, float(rng.choice([1.0, 2.0, 3.0])))


def subtree_margins(node, env):
    """Reference evaluator returning (value, margin_ok) for gradient tests.

    margin_ok is False when any and/or child utility sits below 1e-4 (the
    gradient clamp would disagree with finite differences) or when any
    offset's pre-clamp value is within 1e-4 of the clamp boundary.
    """
    from fplbpg.powermean import power_mean

    if isinstance(node, Leaf):
        return env[node.name], True
    if isinstance(node, (And, Or)):
        vals, ok = [], True
        for c in node.children:
            v, o = subtree_margins(c, env)
            vals.append(v)
            ok = ok and o
        if isinstance(node, And):
            ok = ok and all(v > 1e-4 for v in vals)
            return power_mean(node.p, vals), ok
        comp = [1.0 - v for v in vals]
        ok = ok and all(v > 1e-4 for v in comp)
        return 1.0 - power_mean(node.p, comp), ok
    if isinstance(node, Not):
        v, ok = subtree_margins(node.child, env)
        return 1.0 - v, ok
    if isinstance(node, Offset):
        v, ok = subtree_margins(node.child, env)
        raw = (v + max(node.delta, 0.0)) / (1.0 + node.delta)
        ok = ok and abs(raw - 1.0) > 1e-4
        return min(max(raw, 0.0), 1.0), ok
    if isinstance(node, Power):
        v, ok = subtree_margins(node.child, env)
        return v**node.k, ok
    raise TypeError(node)
