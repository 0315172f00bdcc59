"""Truncated Taylor-series (jet) evaluation of one-variable sympy expressions.

Each subexpression is replaced by its Taylor coefficients at ``x0`` up to a
fixed degree; elementary functions use the usual power-series recurrences.
This gives high-order derivatives to rounding accuracy without symbolic
expression swell.
"""

import math

import numpy as np
import sympy

from .exceptions import InputError


def _mul(a, b):
    return np.convolve(a, b)[: a.size]


def _recip(a):
    if a[0] == 0:
        raise ZeroDivisionError("reciprocal of a jet with zero constant term")
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, a.size):
        out[k] = -math.fsum(a[1:k + 1] * out[k - 1::-1][:k]) / a[0]
    return out


def _exp(a):
    out = np.zeros_like(a)
    out[0] = math.exp(a[0])
    j = np.arange(1, a.size)
    for k in range(1, a.size):
        out[k] = math.fsum(j[:k] * a[1:k + 1] * out[k - 1::-1][:k]) / k
    return out


def _log(a):
    if a[0] <= 0:
        raise InputError("log of a jet with non-positive constant term")
    out = np.zeros_like(a)
    out[0] = math.log(a[0])
    for k in range(1, a.size):
        j = np.arange(1, k)
        acc = math.fsum(j * out[1:k] * a[k - 1:0:-1]) if k > 1 else 0.0
        out[k] = (a[k] - acc / k) / a[0]
    return out


def _sin_cos(a, hyperbolic=False):
    s = np.zeros_like(a)
    c = np.zeros_like(a)
    if hyperbolic:
        s[0], c[0] = math.sinh(a[0]), math.cosh(a[0])
    else:
        s[0], c[0] = math.sin(a[0]), math.cos(a[0])
    sign = 1.0 if hyperbolic else -1.0
    j = np.arange(1, a.size)
    for k in range(1, a.size):
        ja = j[:k] * a[1:k + 1]
        s[k] = math.fsum(ja * c[k - 1::-1][:k]) / k
        c[k] = sign * math.fsum(ja * s[k - 1::-1][:k]) / k
    return s, c


def _sqrt(a):
    if a[0] <= 0:
        raise InputError("sqrt of a jet with non-positive constant term")
    out = np.zeros_like(a)
    out[0] = math.sqrt(a[0])
    for k in range(1, a.size):
        acc = math.fsum(out[1:k] * out[k - 1:0:-1]) if k > 1 else 0.0
        out[k] = (a[k] - acc) / (2 * out[0])
    return out


def _pow(a, exponent):
    if exponent.is_Integer:
        n = int(exponent)
        base = a if n >= 0 else _recip(a)
        n = abs(n)
        out = np.zeros_like(a)
        out[0] = 1.0
        while n:
            if n & 1:
                out = _mul(out, base)
            base = _mul(base, base)
            n >>= 1
        return out
    if exponent == sympy.Rational(1, 2):
        return _sqrt(a)
    if exponent == sympy.Rational(-1, 2):
        return _recip(_sqrt(a))
    return _exp(float(exponent) * _log(a))


def taylor_coefficients(expr, symbol, x0, degree):
    """Taylor coefficients ``[f(x0), f'(x0), f''(x0)/2, ...]`` of ``expr`` up to ``degree``."""
    n = degree + 1
    cache = {}

    def const(v):
        out = np.zeros(n)
        out[0] = float(v)
        return out

    def walk(node):
        if node in cache:
            return cache[node]
        if node == symbol:
            out = const(x0)
            if n > 1:
                out[1] = 1.0
        elif node.is_Number or node.is_NumberSymbol:
            out = const(node)
        elif not node.has(symbol):
            out = const(sympy.N(node))
        elif node.is_Add:
            out = sum(walk(arg) for arg in node.args)
        elif node.is_Mul:
            out = const(1.0)
            for arg in node.args:
                out = _mul(out, walk(arg))
        elif node.is_Pow:
            base, exponent = node.args
            if exponent.has(symbol):
                out = _exp(_mul(walk(exponent), _log(walk(base))))
            else:
                out = _pow(walk(base), exponent)
        elif isinstance(node, sympy.exp):
            out = _exp(walk(node.args[0]))
        elif isinstance(node, sympy.log):
            out = _log(walk(node.args[0]))
        elif isinstance(node, (sympy.sin, sympy.cos)):
            s, c = _sin_cos(walk(node.args[0]))
            out = s if isinstance(node, sympy.sin) else c
        elif isinstance(node, (sympy.sinh, sympy.cosh, sympy.tanh)):
            s, c = _sin_cos(walk(node.args[0]), hyperbolic=True)
            if isinstance(node, sympy.tanh):
                out = _mul(s, _recip(c))
            else:
                out = s if isinstance(node, sympy.sinh) else c
        else:
            raise InputError(f"no Taylor rule for {type(node).__name__}")
        cache[node] = out
        return out

    return walk(sympy.sympify(expr)).copy()
