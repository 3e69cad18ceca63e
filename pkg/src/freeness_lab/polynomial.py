"""Noncommutative *-polynomials over letters ``x1, x2, ...`` and their adjoints.

A polynomial is a finite map from words to complex coefficients.  A word is a
tuple of ``(letter, adjoint)`` pairs, ``letter`` 1-based; the empty word is
the identity.  Arithmetic uses the usual operators::

    x1, x2 = NCPolynomial.letter(1), NCPolynomial.letter(2)
    p = x1 * x2 + 0.5 * x2.adjoint() * x1

Text syntax (prefix, parenthesised)::

    expr    := number | letter | "(" op expr expr* ")"
    op      := "+" | "*"
    letter  := "x" digits [ "*" ]          e.g.  x1   x2*
    number  := Python complex literal      e.g.  2   -0.5   1j   1+2j

``*`` is the ordered matrix product (scalars commute with everything), e.g.
``(+ (* x1 x2) (* x2* x1))`` is ``x1 x2 + x2* x1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

__all__ = ["NCPolynomial", "parse_polynomial", "PolynomialSyntaxError"]


class PolynomialSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class NCPolynomial:
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {w: complex(c) for w, c in self.terms.items() if c != 0}
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def letter(cls, index: int, adjoint: bool = False) -> "NCPolynomial":
        if index < 1:
            raise ValueError("letters are 1-based")
        return cls({((index, adjoint),): 1.0})

    @classmethod
    def constant(cls, c: complex) -> "NCPolynomial":
        return cls({(): c})

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    @property
    def letter_count(self) -> int:
        """Largest letter index used (the arity the polynomial expects)."""
        return max((x for w in self.terms for x, _ in w), default=0)

    def is_constant(self) -> bool:
        return all(len(w) == 0 for w in self.terms)

    def adjoint(self) -> "NCPolynomial":
        return NCPolynomial(
            {tuple((x, not a) for x, a in reversed(w)): c.conjugate() for w, c in self.terms.items()}
        )

    def _coerce(self, other) -> "NCPolynomial":
        if isinstance(other, NCPolynomial):
            return other
        if isinstance(other, Number):
            return NCPolynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return NCPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                out[w1 + w2] = out.get(w1 + w2, 0) + c1 * c2
        return NCPolynomial(out)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self

    def __call__(self, *matrices) -> np.ndarray:
        return self.evaluate(matrices)

    def evaluate(self, matrices) -> np.ndarray:
        """Evaluate on a tuple of square matrices (letter ``x_i`` -> ``matrices[i-1]``)."""
        matrices = tuple(matrices)
        if self.letter_count > len(matrices):
            raise ValueError(
                f"polynomial uses {self.letter_count} letters, got {len(matrices)} matrices"
            )
        if not matrices:
            raise ValueError("need at least one matrix to fix the dimension")
        n = matrices[0].shape[0]
        adjoints = {}
        out = np.zeros((n, n), dtype=np.complex128)
        for word, coeff in self.terms.items():
            if not word:
                out[np.diag_indices(n)] += coeff
                continue
            prod = None
            for x, adj in word:
                if adj:
                    if x not in adjoints:
                        adjoints[x] = matrices[x - 1].conj().T
                    factor = adjoints[x]
                else:
                    factor = matrices[x - 1]
                prod = factor if prod is None else prod @ factor
            out += coeff * prod
        return out

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items()):
            mono = " ".join(f"x{x}{'*' if a else ''}" for x, a in w)
            coeff = f"{c.real:.17g}{c.imag:+.17g}j"
            parts.append(f"(* {coeff} {mono})" if mono else coeff)
        return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_LETTER = re.compile(r"x([1-9][0-9]*)(\*?)$")


def parse_polynomial(text: str) -> NCPolynomial:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise PolynomialSyntaxError("empty polynomial")
    pos = 0

    def parse() -> NCPolynomial:
        nonlocal pos
        if pos >= len(tokens):
            raise PolynomialSyntaxError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] not in ("+", "*"):
                raise PolynomialSyntaxError(f"expected '+' or '*' after '(' at token {pos}")
            op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise PolynomialSyntaxError("missing ')'")
            pos += 1
            if not args:
                raise PolynomialSyntaxError(f"'{op}' needs at least one argument")
            acc = args[0]
            for a in args[1:]:
                acc = acc + a if op == "+" else acc * a
            return acc
        if tok == ")":
            raise PolynomialSyntaxError(f"unexpected ')' at token {pos - 1}")
        m = _LETTER.match(tok)
        if m:
            return NCPolynomial.letter(int(m.group(1)), adjoint=bool(m.group(2)))
        try:
            return NCPolynomial.constant(complex(tok))
        except ValueError:
            raise PolynomialSyntaxError(f"bad token {tok!r}") from None

    result = parse()
    if pos != len(tokens):
        raise PolynomialSyntaxError(f"trailing input after token {pos}")
    return result
