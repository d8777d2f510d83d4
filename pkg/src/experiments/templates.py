"""Per-k region and measure templates.

String values containing "{k}" or "{delta}" are substituted and evaluated with a
small arithmetic grammar:

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := ("+" | "-") factor | primary
    primary := number | "k" | "delta" | "pi" | "sqrt" "(" expr ")" | "(" expr ")"
"""

import math
import re

from src.utils.errors import ParseError, ValidationError

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")


def _tokenize(text, path):
    tokens = []
    position = 0
    text = text.replace("×", "*").replace("÷", "/").replace("−", "-")
    while position < len(text):
        if text[position].isspace():
            position += 1
            continue
        number = _NUMBER.match(text, position)
        if number:
            tokens.append(("num", float(number.group(0))))
            position = number.end()
            continue
        word = re.compile(r"[A-Za-z_]+").match(text, position)
        if word:
            tokens.append(("name", word.group(0)))
            position = word.end()
            continue
        char = text[position]
        if char not in "+-*/()":
            raise ParseError(path, f"unexpected character {char!r} in expression {text!r}")
        tokens.append(("op", char))
        position += 1
    return tokens


class _Parser:
    def __init__(self, text, variables, path):
        self.text = text
        self.tokens = _tokenize(text, path)
        self.index = 0
        self.variables = variables
        self.path = path

    def fail(self, message):
        raise ParseError(self.path, f"{message} in expression {self.text!r}")

    def peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        token = self.peek()
        if token[0] is None or (kind and token[0] != kind) or (value and token[1] != value):
            self.fail(f"expected {value or kind}")
        self.index += 1
        return token

    def parse(self):
        value = self.expr()
        if self.index != len(self.tokens):
            self.fail(f"unexpected {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            right = self.term()
            value = value + right if op == "+" else value - right
        return value

    def term(self):
        value = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            right = self.factor()
            if op == "*":
                value = value * right
            elif right == 0:
                raise ValidationError(f"{self.path}: division by zero in {self.text!r}")
            else:
                value = value / right
        return value

    def factor(self):
        if self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            value = self.factor()
            return value if op == "+" else -value
        return self.primary()

    def primary(self):
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return value
        if kind == "op" and value == "(":
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        if kind == "name":
            self.take()
            if value == "sqrt":
                self.take("op", "(")
                inner = self.expr()
                self.take("op", ")")
                if inner < 0:
                    raise ValidationError(f"{self.path}: sqrt of negative value in {self.text!r}")
                return math.sqrt(inner)
            if value == "pi":
                return math.pi
            if value in self.variables and self.variables[value] is not None:
                return float(self.variables[value])
            self.fail(f"unknown name {value!r}")
        self.fail("unexpected end" if kind is None else f"unexpected {value!r}")


def evaluate(text: str, k=None, delta=None, path="$"):
    """Value of an expression; integral results of integer-only expressions come back as int."""
    variables = {"k": k, "delta": delta}
    value = _Parser(text, variables, path).parse()
    if not math.isfinite(value):
        raise ValidationError(f"{path}: expression {text!r} is not finite")
    integral_only = not re.search(r"[./]|sqrt|pi|delta|[eE][+-]?\d", text)
    if integral_only and float(value).is_integer():
        return int(value)
    return value


def render(document, k=None, delta=None, path="$"):
    """Copy of `document` with every templated string replaced by its value."""
    if isinstance(document, dict):
        return {key: render(value, k, delta, f"{path}.{key}") for key, value in document.items()}
    if isinstance(document, list):
        return [render(value, k, delta, f"{path}[{i}]") for i, value in enumerate(document)]
    if isinstance(document, str) and ("{k}" in document or "{delta}" in document):
        if "{k}" in document and k is None:
            raise ValidationError(f"{path}: template uses {{k}} but no k is bound")
        if "{delta}" in document and delta is None:
            raise ValidationError(f"{path}: template uses {{delta}} but no delta is bound")
        text = document.replace("{k}", "k").replace("{delta}", "delta")
        return evaluate(text, k, delta, path)
    return document


def uses_delta(document) -> bool:
    if isinstance(document, dict):
        return any(uses_delta(v) for v in document.values())
    if isinstance(document, list):
        return any(uses_delta(v) for v in document)
    return isinstance(document, str) and "{delta}" in document
