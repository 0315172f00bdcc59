"""Scalar and drift fields on R^d with exact (symbolic) or finite-difference derivatives.

Fields built from expressions carry a sympy expression, so every derivative is
exact. Fields built from plain callables fall back to central differences.
"""

import ast
import functools
import itertools

import numpy as np
import sympy

from ._validation import as_points
from .exceptions import ExpressionError, MissingDerivative

_FUNCTIONS = {
    "exp": sympy.exp,
    "cos": sympy.cos,
    "sin": sympy.sin,
    "cosh": sympy.cosh,
    "sinh": sympy.sinh,
    "tanh": sympy.tanh,
    "sqrt": sympy.sqrt,
}
_CONSTANTS = {"pi": sympy.pi, "e": sympy.E}
_MAX_EXPRESSION_LENGTH = 4000


def default_variables(d):
    return ("x",) if d == 1 else tuple(f"x{i + 1}" for i in range(d))


def parse_expression(text, variables=("x",)):
    """Parse a whitelisted arithmetic expression into a sympy expression.

    Accepted: numbers, the given variable names, ``pi``, ``e``, the operators
    ``+ - * / **`` (numeric exponents only) and the functions exp, cos, sin,
    cosh, sinh, tanh, sqrt. Nothing is ever passed to ``eval``.

    >>> parse_expression("exp(-x**2/4)")
    exp(-x**2/4)
    """
    if not isinstance(text, str):
        raise ExpressionError(f"expression must be a string, got {type(text).__name__}")
    if len(text) > _MAX_EXPRESSION_LENGTH:
        raise ExpressionError("expression too long")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    return _build(tree.body, symbols, text)


def _build(node, symbols, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        if isinstance(node.value, int):
            return sympy.Integer(node.value)
        return sympy.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id in symbols:
            return symbols[node.id]
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        operand = _build(node.operand, symbols, text)
        return -operand if isinstance(node.op, ast.USub) else operand
    if isinstance(node, ast.BinOp):
        left = _build(node.left, symbols, text)
        right = _build(node.right, symbols, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        if isinstance(node.op, ast.Pow):
            if not right.is_number:
                raise ExpressionError(f"exponent must be numeric in {text!r}")
            return left**right
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"function not in whitelist in {text!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        return _FUNCTIONS[node.func.id](_build(node.args[0], symbols, text))
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")


def _lambdify(symbols, expr):
    fn = sympy.lambdify(symbols, expr, modules="numpy")

    def evaluate(points):
        cols = [points[:, i] for i in range(points.shape[1])]
        out = np.asarray(fn(*cols), dtype=float)
        return np.broadcast_to(out, (points.shape[0],)).copy()

    return evaluate


class ScalarField:
    """A real function on R^d together with its derivatives.

    Parameters
    ----------
    expr : sympy.Expr or callable
        Symbolic expression in ``symbols`` or a vectorized callable taking an
        ``(n, d)`` array.
    dimension : int
    domain_box : sequence of (lo, hi), optional
        Coordinate interval per axis; defaults to ``[-10, 10]^d``.
    symbols : sequence of sympy.Symbol, optional
        Symbols of ``expr``; defaults to ``x`` (d = 1) or ``x1..xd``.
    derivative_order : int
        Highest derivative order the field promises. Fields entering a model
        need at least 2.
    """

    def __init__(self, expr, dimension=1, domain_box=None, symbols=None,
                 derivative_order=None, name=None):
        self.dimension = int(dimension)
        if domain_box is None:
            domain_box = [(-10.0, 10.0)] * self.dimension
        self.domain_box = tuple((float(lo), float(hi)) for lo, hi in domain_box)
        if len(self.domain_box) != self.dimension:
            raise ValueError("domain_box must have one interval per axis")
        self.name = name
        if callable(expr) and not isinstance(expr, sympy.Basic):
            self.expr = None
            self.symbols = None
            self._numeric = expr
            self.derivative_order = 2 if derivative_order is None else derivative_order
        else:
            self.expr = sympy.sympify(expr)
            if symbols is None:
                symbols = [sympy.Symbol(v, real=True) for v in default_variables(self.dimension)]
            self.symbols = tuple(symbols)
            self._numeric = None
            self.derivative_order = 64 if derivative_order is None else derivative_order
        if self.derivative_order < 0:
            raise ValueError("declared derivative order must be nonnegative")

    # construction helpers -------------------------------------------------
    @classmethod
    def from_expression(cls, text, dimension=1, domain_box=None, variables=None, name=None):
        variables = tuple(variables) if variables else default_variables(dimension)
        expr = parse_expression(text, variables)
        symbols = [sympy.Symbol(v, real=True) for v in variables]
        return cls(expr, dimension, domain_box, symbols=symbols, name=name or text)

    @classmethod
    def constant(cls, value, dimension=1, domain_box=None):
        return cls(sympy.Float(value) if not isinstance(value, sympy.Basic) else value,
                   dimension, domain_box)

    def with_expr(self, expr, name=None):
        """New symbolic field sharing this field's symbols and domain."""
        return ScalarField(sympy.sympify(expr), self.dimension, self.domain_box,
                           symbols=self.symbols, name=name)

    @property
    def is_symbolic(self):
        return self.expr is not None

    # evaluation -----------------------------------------------------------
    @functools.cached_property
    def _value_fn(self):
        if self.expr is None:
            return lambda pts: np.asarray(self._numeric(pts), dtype=float).reshape(-1)
        return _lambdify(self.symbols, self.expr)

    def __call__(self, x):
        pts, shape = as_points(x, self.dimension)
        return self._value_fn(pts).reshape(shape)

    def _require(self, order):
        if order > self.derivative_order:
            raise MissingDerivative(
                f"{self!r} declares derivatives up to order {self.derivative_order}, "
                f"order {order} requested")

    def _fd_step(self, pts, order):
        scale = np.maximum(1.0, np.abs(pts))
        return (1e-5 if order == 1 else 1e-4) * scale

    @functools.lru_cache(maxsize=None)
    def _partial_fn(self, index):
        if self.expr is None:
            return None
        return _lambdify(self.symbols, sympy.diff(self.expr, self.symbols[index]))

    def partial(self, index, x):
        """First partial derivative along axis ``index``."""
        self._require(1)
        pts, shape = as_points(x, self.dimension)
        fn = self._partial_fn(index)
        if fn is not None:
            return fn(pts).reshape(shape)
        h = self._fd_step(pts[:, index], 1)
        up, down = pts.copy(), pts.copy()
        up[:, index] += h
        down[:, index] -= h
        return ((self._value_fn(up) - self._value_fn(down)) / (2 * h)).reshape(shape)

    def gradient(self, x):
        pts, shape = as_points(x, self.dimension)
        cols = [self.partial(i, pts) for i in range(self.dimension)]
        grad = np.stack([c.reshape(-1) for c in cols], axis=-1)
        if self.dimension == 1:
            return grad[:, 0].reshape(shape)
        return grad.reshape(shape + (self.dimension,))

    @functools.cached_property
    def _laplacian_fn(self):
        if self.expr is None:
            return None
        lap = sum(sympy.diff(self.expr, s, 2) for s in self.symbols)
        return _lambdify(self.symbols, lap)

    def laplacian(self, x):
        self._require(2)
        pts, shape = as_points(x, self.dimension)
        if self._laplacian_fn is not None:
            return self._laplacian_fn(pts).reshape(shape)
        total = np.zeros(pts.shape[0])
        centre = self._value_fn(pts)
        for i in range(self.dimension):
            h = self._fd_step(pts[:, i], 2)
            up, down = pts.copy(), pts.copy()
            up[:, i] += h
            down[:, i] -= h
            total += (self._value_fn(up) - 2 * centre + self._value_fn(down)) / h**2
        return total.reshape(shape)

    @functools.lru_cache(maxsize=None)
    def _derivative_fn(self, order):
        return _lambdify(self.symbols, sympy.diff(self.expr, self.symbols[0], order))

    def derivative(self, x, order=1):
        """``order``-th derivative of a one-dimensional field."""
        if self.dimension != 1:
            raise ValueError("derivative() is for one-dimensional fields; use partial()")
        self._require(order)
        if order == 0:
            return self(x)
        pts, shape = as_points(x, 1)
        if self.expr is not None:
            return self._derivative_fn(order)(pts).reshape(shape)
        if order == 1:
            return self.partial(0, x)
        if order == 2:
            return self.laplacian(x)
        raise MissingDerivative("finite-difference fields only provide derivatives up to order 2")

    # grids ----------------------------------------------------------------
    def sample_grid(self, n=41):
        axes = [np.linspace(lo, hi, n) for lo, hi in self.domain_box]
        if self.dimension == 1:
            return axes[0]
        return np.array(list(itertools.product(*axes)))

    def __repr__(self):
        body = self.name or (str(self.expr) if self.expr is not None else "<callable>")
        return f"ScalarField({body}, d={self.dimension})"


class DriftField:
    """Vector field with one :class:`ScalarField` per component."""

    def __init__(self, components, gradient_flag=False):
        self.components = tuple(components)
        if not self.components:
            raise ValueError("a drift field needs at least one component")
        self.dimension = self.components[0].dimension
        if len(self.components) != self.dimension:
            raise ValueError("number of components must equal the dimension")
        self.gradient_flag = bool(gradient_flag)

    def __call__(self, x):
        if self.dimension == 1:
            return self.components[0](x)
        pts, shape = as_points(x, self.dimension)
        vals = np.stack([c(pts) for c in self.components], axis=-1)
        return vals.reshape(shape + (self.dimension,))

    def divergence(self, x):
        pts, shape = as_points(x, self.dimension)
        total = sum(c.partial(i, pts).reshape(-1) for i, c in enumerate(self.components))
        return np.asarray(total).reshape(shape)

    def symmetry_defect(self, grid=None):
        """Largest |d_i beta_j - d_j beta_i| on ``grid`` (0 in one dimension)."""
        if self.dimension == 1:
            return 0.0
        if grid is None:
            grid = self.components[0].sample_grid(9)
        worst = 0.0
        for i, j in itertools.combinations(range(self.dimension), 2):
            diff = self.components[j].partial(i, grid) - self.components[i].partial(j, grid)
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    @property
    def exprs(self):
        return tuple(c.expr for c in self.components)
