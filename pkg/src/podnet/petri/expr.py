"""Arc patterns and inscription expressions.

Inscriptions are small Python expressions stored as strings so a net
definition stays declarative and its free variables can be checked
statically.  Input arcs carry *patterns* (a variable, a literal, ``_``
or a tuple of those); guards and output arcs carry *expressions*
evaluated against the transition binding.
"""

from __future__ import annotations

import ast
from typing import Any, Mapping

_SAFE_BUILTINS = {
    "abs": abs,
    "min": min,
    "max": max,
    "len": len,
    "round": round,
    "int": int,
    "float": float,
    "tuple": tuple,
    "True": True,
    "False": False,
    "None": None,
}

WILDCARD = "_"


class InscriptionError(ValueError):
    """An inscription string could not be parsed."""


def _parse(source: str) -> ast.expr:
    try:
        return ast.parse(source, mode="eval").body
    except SyntaxError as exc:
        raise InscriptionError(f"cannot parse inscription {source!r}: {exc.msg}") from None


def _free_names(node: ast.AST) -> frozenset[str]:
    names = set()
    for sub in ast.walk(node):
        if isinstance(sub, ast.Name) and sub.id not in _SAFE_BUILTINS:
            names.add(sub.id)
    return frozenset(names)


class Pattern:
    """Destructuring pattern for tokens taken from an input place.

    >>> p = Pattern("(node, ram, 'present')")
    >>> p.match(("m1", 8, "present"), {})
    {'node': 'm1', 'ram': 8}
    >>> p.match(("m1", 8, "absent"), {}) is None
    True
    """

    __slots__ = ("source", "_tree", "variables", "_matcher")

    def __init__(self, source: str | None):
        self.source = source
        if source is None:
            self._tree: Any = WILDCARD
        else:
            self._tree = self._compile(_parse(source), source)
        self.variables = frozenset(self._collect(self._tree))
        self._matcher = self._build(self._tree)

    @classmethod
    def _build(cls, tree: Any):
        """Turn a pattern tree into a ``matcher(token, out) -> bool`` closure."""
        if tree == WILDCARD:
            return lambda token, out: True
        tag, payload = tree
        if tag == "var":
            name = payload

            def match_var(token, out):
                if name in out:
                    return out[name] == token
                out[name] = token
                return True

            return match_var
        if tag == "const":
            return lambda token, out: token == payload
        size = len(payload)
        subs = tuple(cls._build(sub) for sub in payload)

        def match_tuple(token, out):
            if type(token) is not tuple or len(token) != size:
                return False
            for sub, tok in zip(subs, token):
                if not sub(tok, out):
                    return False
            return True

        return match_tuple

    @classmethod
    def _compile(cls, node: ast.expr, source: str) -> Any:
        if isinstance(node, ast.Name):
            return WILDCARD if node.id == WILDCARD else ("var", node.id)
        if isinstance(node, ast.Constant):
            return ("const", node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
            return ("const", -node.operand.value)
        if isinstance(node, ast.Tuple):
            return ("tuple", tuple(cls._compile(elt, source) for elt in node.elts))
        raise InscriptionError(f"unsupported construct in arc pattern {source!r}")

    @classmethod
    def _collect(cls, tree: Any):
        if tree == WILDCARD:
            return
        tag, payload = tree
        if tag == "var":
            yield payload
        elif tag == "tuple":
            for sub in payload:
                yield from cls._collect(sub)

    def match(self, token: Any, binding: Mapping[str, Any]) -> dict | None:
        """Return ``binding`` extended by this match, or None on mismatch.

        Variables already bound must agree with the token (unification
        across the input arcs of one transition).
        """
        out = dict(binding)
        if self._matcher(token, out):
            return out
        return None

    def __repr__(self) -> str:
        return f"Pattern({self.source!r})"


class Expression:
    """A compiled inscription evaluated in the namespace of a binding."""

    __slots__ = ("source", "_code", "variables")

    def __init__(self, source: str):
        self.source = source
        tree = _parse(source)
        self.variables = _free_names(tree)
        self._code = compile(ast.Expression(tree), f"<inscription {source}>", "eval")

    def __call__(self, binding: Mapping[str, Any]) -> Any:
        return eval(self._code, {"__builtins__": _SAFE_BUILTINS}, dict(binding))

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"
