"""A tiny expression grammar for exact command-line inputs.

The distinguished points in this package are expressions in e, like
1/(2e); forcing users to type decimal truncations of them would poison
every exactness check downstream.  This parser accepts

    integers and decimal literals      2, 0.35, 1e-8
    the constants e and pi
    + - * / ^ and parentheses
    implicit multiplication            2e, 2pi, (1+1)e, 2(3+4)

and evaluates at a requested binary precision with one final rounding.

Scientific notation is carved out of the ambiguity with e by adjacency:
a digit string followed immediately by e and immediately by an optional
sign plus digits is one number token ("1e-8", "2e5").  Anything else
leaves e as the constant, so "2e" is 2e ~ 5.436 and "2e - 8" (spaced)
is arithmetic on it.  Write "2*e-8" or space the minus to subtract from
a multiple of e.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Tuple, Union

from mpmath import mp, mpf

from .precision import DomainError

__all__ = ["parse_real", "tokenize"]

_Token = Tuple[str, Union[str, Fraction]]


def _is_digit(ch: str) -> bool:
    return "0" <= ch <= "9"


def tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(("op", ch))
            i += 1
            continue
        if _is_digit(ch):
            start = i
            while i < n and _is_digit(text[i]):
                i += 1
            frac_digits = ""
            if i < n and text[i] == ".":
                i += 1
                fstart = i
                while i < n and _is_digit(text[i]):
                    i += 1
                frac_digits = text[fstart:i]
                if not frac_digits:
                    raise DomainError(
                        "expected digits after the decimal point at position %d" % i
                    )
            int_digits = text[start:i].split(".")[0]
            exponent = 0
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and _is_digit(text[j]):
                    estart = i + 1
                    while j < n and _is_digit(text[j]):
                        j += 1
                    exponent = int(text[estart:j])
                    i = j
            value = Fraction(int(int_digits + frac_digits), 10 ** len(frac_digits))
            if exponent >= 0:
                value *= Fraction(10) ** exponent
            else:
                value /= Fraction(10) ** (-exponent)
            tokens.append(("num", value))
            continue
        if ch.isalpha():
            start = i
            while i < n and text[i].isalpha():
                i += 1
            word = text[start:i]
            if word not in ("e", "pi"):
                raise DomainError(
                    "unknown symbol %r at position %d; only e and pi are available"
                    % (word, start)
                )
            tokens.append(("const", word))
            continue
        raise DomainError("unexpected character %r at position %d" % (ch, i))
    return tokens


class _Parser:
    def __init__(self, tokens: List[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value = self.take()
        if kind != "op" or value != symbol:
            raise DomainError("expected %r" % symbol)

    def parse(self):
        node = self.expr()
        if self.pos != len(self.tokens):
            raise DomainError("trailing input after a complete expression")
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                node = (value, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                node = (value, node, self.factor())
            elif kind in ("num", "const") or (kind == "op" and value == "("):
                node = ("*", node, self.factor())
            else:
                return node

    def factor(self):
        kind, value = self.peek()
        if kind == "op" and value in "+-":
            self.take()
            inner = self.factor()
            return inner if value == "+" else ("neg", inner)
        return self.power()

    def power(self):
        base = self.primary()
        kind, value = self.peek()
        if kind == "op" and value == "^":
            self.take()
            return ("^", base, self.factor())
        return base

    def primary(self):
        kind, value = self.take()
        if kind == "num":
            return ("num", value)
        if kind == "const":
            return ("const", value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise DomainError("expected a number, constant, or parenthesis")


def _evaluate(node) -> mpf:
    op = node[0]
    if op == "num":
        q = node[1]
        return mpf(q.numerator) / q.denominator
    if op == "const":
        return mp.e if node[1] == "e" else mp.pi
    if op == "neg":
        return -_evaluate(node[1])
    a = _evaluate(node[1])
    b = _evaluate(node[2])
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise DomainError("division by zero in expression")
        return a / b
    if op == "^":
        if a == 0 and b < 0:
            raise DomainError("zero raised to a negative power")
        if a < 0 and b != int(b):
            raise DomainError("negative base needs an integer exponent")
        return mp.power(a, b)
    raise DomainError("unknown operator %r" % op)  # pragma: no cover


def parse_real(text: str, bits: int) -> mpf:
    """Evaluate an expression to ``bits`` of precision.

    Evaluation runs with guard bits and rounds once at the end, so the
    result is the correctly rounded value up to one ulp.
    """
    if not isinstance(text, str) or not text.strip():
        raise DomainError("empty expression")
    tokens = tokenize(text)
    if not tokens:
        raise DomainError("empty expression")
    tree = _Parser(tokens).parse()
    with mp.workprec(bits + 32):
        value = _evaluate(tree)
    with mp.workprec(bits):
        return mpf(value)
