"""Lossless tokenizer for the SmartThings Groovy subset.

Every character of the input belongs to exactly one token, so joining the
token texts reproduces the source.  Whitespace, newlines and comments are
kept as trivia tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import EmptyInput, UnbalancedDelimiter

TRIVIA = frozenset({"ws", "nl", "comment"})

# Longest first so that greedy matching picks the right operator.
OPERATORS = sorted(
    [
        ">>>=", "<=>", "===", "!==", "==~", "**=", "<<=", ">>=", "..<", "?.", "*.", ".@", ".&",
        "?:", "?=", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=",
        "/=", "%=", "&=", "|=", "^=", "=~", "**", "<<", "..", "::",
        "(", ")", "{", "}", "[", "]", ";", ",", ".", ":", "?", "=", "<", ">", "+", "-", "*",
        "/", "%", "!", "~", "&", "|", "^", "@",
    ],
    key=len,
    reverse=True,
)

OPENERS = {"(": ")", "[": "]", "{": "}"}
CLOSERS = {v: k for k, v in OPENERS.items()}

_WS = re.compile(r"[ \t\f\v]+")
_NL = re.compile(r"\r\n|\n|\r")
_IDENT = re.compile(r"(?:[^\W\d]|\$)[\w$]*")
_NUMBER = re.compile(
    r"0[xX][0-9a-fA-F_]+[lLgG]?|\d[\d_]*(?:\.\d[\d_]*)?(?:[eE][+-]?\d+)?[lLgGdDfFiI]?"
)
_SIMPLE_REF = re.compile(r"(?:[^\W\d]|_)\w*(?:\.(?:[^\W\d]|_)\w*)*")

# Tokens after which a "/" is division rather than the start of a slashy string.
_VALUE_END_OPS = frozenset({")", "]", "}", "++", "--"})
_NON_VALUE_IDENTS = frozenset({"return", "in", "case", "else", "assert", "throw", "instanceof"})


@dataclass(frozen=True, slots=True)
class Interpolation:
    """One ``$name`` or ``${expr}`` segment inside a GString.

    ``start`` and ``end`` are absolute offsets of the code (without ``$``,
    ``{`` and ``}``).
    """

    code: str
    start: int
    end: int
    braced: bool


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ws, nl, comment, ident, number, string, op, other
    text: str
    start: int
    end: int
    interpolations: tuple[Interpolation, ...] = ()
    quote: str = ""

    @property
    def is_trivia(self) -> bool:
        return self.kind in TRIVIA


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.pos = 0
        self.tokens: list[Token] = []
        self.last_sig: Token | None = None

    def run(self) -> list[Token]:
        text = self.text
        if self.pos == 0 and text.startswith("#!"):
            end = self._line_end(0)
            self._add("comment", 0, end)
        while self.pos < self.n:
            ch = text[self.pos]
            if ch in " \t\f\v":
                m = _WS.match(text, self.pos)
                self._add("ws", self.pos, m.end())
            elif ch in "\r\n":
                m = _NL.match(text, self.pos)
                self._add("nl", self.pos, m.end())
            elif text.startswith("//", self.pos):
                self._add("comment", self.pos, self._line_end(self.pos))
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise UnbalancedDelimiter(self.pos, "unterminated block comment")
                self._add("comment", self.pos, end + 2)
            elif ch == '"' or ch == "'":
                self._string(ch)
            elif ch == "/" and self._slashy_allowed():
                if not self._slashy():
                    self._operator()
            elif ch == "$" and text.startswith("$/", self.pos) and self._slashy_allowed():
                end = text.find("/$", self.pos + 2)
                if end < 0:
                    raise UnbalancedDelimiter(self.pos, "unterminated dollar-slashy string")
                self._add("string", self.pos, end + 2, quote="$/")
            elif "0" <= ch <= "9":
                m = _NUMBER.match(text, self.pos)
                self._add("number", self.pos, m.end())
            else:
                m = _IDENT.match(text, self.pos)
                if m:
                    self._add("ident", self.pos, m.end())
                else:
                    self._operator()
        return self.tokens

    def _line_end(self, pos: int) -> int:
        m = _NL.search(self.text, pos)
        return m.start() if m else self.n

    def _add(self, kind, start, end, interpolations=(), quote=""):
        tok = Token(kind, self.text[start:end], start, end, tuple(interpolations), quote)
        self.tokens.append(tok)
        if kind not in TRIVIA:
            self.last_sig = tok
        self.pos = end

    def _operator(self):
        for op in OPERATORS:
            if self.text.startswith(op, self.pos):
                self._add("op", self.pos, self.pos + len(op))
                return
        self._add("other", self.pos, self.pos + 1)

    def _slashy_allowed(self) -> bool:
        prev = self.last_sig
        if prev is None:
            return True
        if prev.kind in ("number", "string"):
            return False
        if prev.kind == "ident":
            return prev.text in _NON_VALUE_IDENTS
        if prev.kind == "op":
            return prev.text not in _VALUE_END_OPS
        return True

    def _slashy(self) -> bool:
        # Only single-line slashy strings; otherwise "/" is an operator.
        text = self.text
        i = self.pos + 1
        if i < self.n and text[i] in "/*=":
            return False
        line_end = self._line_end(self.pos)
        while i < line_end:
            c = text[i]
            if c == "\\":
                i += 2
                continue
            if c == "/":
                if i == self.pos + 1:
                    return False
                self._add("string", self.pos, i + 1, quote="/")
                return True
            i += 1
        return False

    def _string(self, q: str):
        text = self.text
        start = self.pos
        triple = text.startswith(q * 3, start)
        delim = q * 3 if triple else q
        interpolate = q == '"'
        i = start + len(delim)
        parts: list[Interpolation] = []
        while True:
            if i >= self.n:
                raise UnbalancedDelimiter(start, "unterminated string")
            c = text[i]
            if c == "\\":
                i += 2
                continue
            if not triple and c in "\r\n":
                raise UnbalancedDelimiter(start, "unterminated string")
            if text.startswith(delim, i):
                end = i + len(delim)
                break
            if interpolate and c == "$" and i + 1 < self.n:
                nxt = text[i + 1]
                if nxt == "{":
                    close = _scan_braced(text, i + 2)
                    if close < 0:
                        raise UnbalancedDelimiter(i, "unterminated ${...} in string")
                    parts.append(Interpolation(text[i + 2:close], i + 2, close, True))
                    i = close + 1
                    continue
                m = _SIMPLE_REF.match(text, i + 1)
                if m:
                    parts.append(Interpolation(m.group(), m.start(), m.end(), False))
                    i = m.end()
                    continue
            i += 1
        self._add("string", start, end, parts, quote=delim)


def _scan_braced(text: str, i: int) -> int:
    """Return the offset of the ``}`` closing a ``${`` whose body starts at *i*."""
    depth = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in "\"'":
            triple = text.startswith(c * 3, i)
            delim = c * 3 if triple else c
            j = i + len(delim)
            while j < n and not text.startswith(delim, j):
                j += 2 if text[j] == "\\" else 1
            if j >= n:
                return -1
            i = j + len(delim)
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            if depth == 0:
                return i
            depth -= 1
        i += 1
    return -1


def tokenize(text: str) -> list[Token]:
    """Split *text* into a lossless token list and check bracket balance."""
    if text == "":
        raise EmptyInput("empty source text")
    tokens = _Lexer(text).run()
    check_balance(tokens)
    return tokens


def check_balance(tokens: list[Token]) -> None:
    stack: list[Token] = []
    for tok in tokens:
        if tok.kind != "op":
            continue
        if tok.text in OPENERS:
            stack.append(tok)
        elif tok.text in CLOSERS:
            if not stack or stack[-1].text != CLOSERS[tok.text]:
                raise UnbalancedDelimiter(tok.start, f"unexpected {tok.text!r}")
            stack.pop()
    if stack:
        raise UnbalancedDelimiter(stack[-1].start, f"unclosed {stack[-1].text!r}")
