"""Fixed-rule quadratures shared by the model, kernel and Borel modules."""

import functools
import itertools

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_laguerre

# scipy's Laguerre rule overflows for n much beyond 256
MAX_LAGUERRE_NODES = 256


@functools.lru_cache(maxsize=32)
def laguerre_rule(n):
    if n > MAX_LAGUERRE_NODES:
        raise ValueError(f"at most {MAX_LAGUERRE_NODES} Gauss-Laguerre nodes are supported")
    return roots_laguerre(n)


@functools.lru_cache(maxsize=64)
def legendre_rule(n, lo, hi, panels=1):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = leggauss(n)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def integrate_box(f, box, *, panels=None, start=8, max_order=128, rtol=1e-10):
    """Integrate ``f`` over a box by composite Gauss-Legendre with order doubling.

    ``f`` receives an ``(n, d)`` array of nodes. Returns ``(value, rel_change,
    converged)`` where ``rel_change`` is the relative change at the last doubling.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    d = len(box)
    if panels is None:
        panels = max(4, int(np.ceil(max(hi - lo for lo, hi in box))))
    previous = None
    order = start
    change = np.inf
    while order <= max_order:
        rules = [legendre_rule(order, lo, hi, panels) for lo, hi in box]
        if d == 1:
            pts = rules[0][0][:, None]
            wts = rules[0][1]
        else:
            pts = np.array(list(itertools.product(*(r[0] for r in rules))))
            wts = np.prod(np.array(list(itertools.product(*(r[1] for r in rules)))), axis=1)
        value = float(np.dot(wts, np.asarray(f(pts), dtype=float).reshape(-1)))
        if previous is not None:
            change = abs(value - previous) / max(abs(value), np.finfo(float).tiny)
            if change < rtol:
                return value, change, True
        previous = value
        order *= 2
    return previous, change, False
