"""Recursive-descent parser producing the syntax tree for one app.

Anything outside the supported subset becomes an :class:`Opaque` statement
(or :class:`OpaqueExpr`) spanning the original tokens, so nothing is lost.
"""

from __future__ import annotations

import re

from .lexer import OPENERS, Token, tokenize
from .nodes import (
    Arg, Assign, Attribute, BinOp, Block, Call, Catch, Closure, Elvis, Expr, ExprStmt,
    FunctionDef, If, Index, ListLit, Literal, Loop, MapEntry, MapLit, Module, Name, New,
    Opaque, OpaqueExpr, Paren, Param, Return, Stmt, StringLit, Switch, Ternary, Try,
    UnaryOp, VarDecl,
)

_EOF = Token("eof", "", 0, 0)

BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "<=>": 6, "===": 6, "!==": 6, "=~": 6, "==~": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "in": 7, "instanceof": 7, "as": 7,
    "..": 8, "..<": 8,
    "<<": 9, ">>": 9,
    "+": 10, "-": 10,
    "*": 11, "/": 11, "%": 11,
    "**": 12,
}
WORD_OPS = frozenset({"in", "instanceof", "as"})
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", "**=", "?=", ">>>="})
UNARY_OPS = frozenset({"!", "-", "+", "~", "++", "--"})
LITERAL_WORDS = frozenset({"true", "false", "null", "this", "super"})
MODIFIERS = frozenset({"private", "public", "protected", "static", "final", "synchronized", "abstract"})
UNSUPPORTED_KEYWORDS = frozenset({
    "break", "continue", "throw", "assert", "do", "synchronized", "case", "default", "import",
    "package", "class", "interface", "enum", "else", "catch", "finally", "goto",
})
# Tokens that end a line without ending the statement.
_CONTINUES = frozenset(set(BINARY_PREC) - WORD_OPS | ASSIGN_OPS | {
    ",", ".", "?.", "*.", "?", ":", "?:", "(", "[", "{", "->", "!", "&&", "||",
})
_NAME_RE = re.compile(r"(?:[^\W\d]|\$)[\w$]*")


class ParseError(Exception):
    pass


class Parser:
    def __init__(self, text: str, tokens: list[Token], offset: int = 0):
        self.text = text
        self.offset = offset
        self.toks = [t for t in tokens if not t.is_trivia]
        self.nl: list[bool] = []
        seen_nl = False
        for t in tokens:
            if t.is_trivia:
                if t.kind == "nl" or (t.kind == "comment" and "\n" in t.text):
                    seen_nl = True
                continue
            self.nl.append(seen_nl)
            seen_nl = False
        self.match: dict[int, int] = {}
        stack = []
        for idx, t in enumerate(self.toks):
            if t.kind == "op" and t.text in OPENERS:
                stack.append(idx)
            elif t.kind == "op" and t.text in (")", "]", "}") and stack:
                self.match[stack.pop()] = idx
        self.i = 0
        self.nl_ctx = [True]
        end = offset + len(text)
        self.eof = Token("eof", "", end, end)

    # -- token helpers --------------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else self.eof

    def nl_before(self, k: int = 0) -> bool:
        j = self.i + k
        return self.nl[j] if j < len(self.nl) else True

    def at_op(self, *ops: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "op" and t.text in ops

    def at_word(self, *words: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "ident" and t.text in words

    def advance(self) -> Token:
        t = self.peek()
        if t.kind == "eof":
            raise ParseError("unexpected end of input")
        self.i += 1
        return t

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            t = self.peek()
            raise ParseError(f"expected {op!r}, got {t.text!r} at {t.start}")
        return self.advance()

    def prev_end(self) -> int:
        return self.toks[self.i - 1].end

    @property
    def nl_sensitive(self) -> bool:
        return self.nl_ctx[-1]

    def at_statement_end(self) -> bool:
        t = self.peek()
        if t.kind == "eof":
            return True
        if t.kind == "op" and t.text in (";", "}"):
            return True
        return self.nl_before()

    # -- module / top level ---------------------------------------------------

    def parse_module(self) -> Module:
        items: list[Stmt] = []
        while self.peek().kind != "eof":
            if self.at_op(";"):
                self.advance()
                continue
            if self.at_op("}"):
                # stray closer can't happen after balance check, but stay safe
                items.append(self._opaque_from(self.i, self.i + 1))
                continue
            items.append(self.parse_top_item())
        start = self.offset
        return Module(start, self.offset + len(self.text), tuple(items))

    def parse_top_item(self) -> Stmt:
        start = self.i
        fn = self._try_function()
        if fn is not None:
            return fn
        self.i = start
        return self.parse_statement_safe()

    def _skip_type(self, j: int) -> int:
        """Skip a (possibly qualified/generic/array) type name starting at j."""
        t = self.toks[j] if j < len(self.toks) else self.eof
        if t.kind != "ident":
            return -1
        j += 1
        while j + 1 < len(self.toks) and self.toks[j].text == "." and self.toks[j + 1].kind == "ident":
            j += 2
        if j < len(self.toks) and self.toks[j].text == "<":
            depth = 0
            while j < len(self.toks):
                tx = self.toks[j].text
                if tx == "<":
                    depth += 1
                elif tx == ">":
                    depth -= 1
                elif tx == ">>":
                    depth -= 2
                elif tx in ("(", ")", "{", "}", "=", ";"):
                    return -1
                j += 1
                if depth <= 0:
                    break
        while j + 1 < len(self.toks) and self.toks[j].text == "[" and self.toks[j + 1].text == "]":
            j += 2
        return j

    def _try_function(self) -> FunctionDef | None:
        toks = self.toks
        j = self.i
        n = len(toks)
        first = j
        has_mod = False
        while j < n and toks[j].kind == "ident" and toks[j].text in MODIFIERS:
            j += 1
            has_mod = True
        has_def = j < n and toks[j].kind == "ident" and toks[j].text == "def"
        if has_def:
            j += 1
        name_at = -1
        if j + 1 < n and toks[j].kind == "ident" and toks[j + 1].text == "(" and (has_def or has_mod):
            name_at = j
        else:
            k = self._skip_type(j)
            if k > j and k + 1 < n and toks[k].kind == "ident" and toks[k + 1].text == "(":
                if has_def or has_mod or toks[j].text == "void" or toks[j].text[:1].isupper():
                    name_at = k
        if name_at < 0 or toks[name_at].text in LITERAL_WORDS | {"if", "while", "for", "switch", "catch"}:
            return None
        lp = name_at + 1
        rp = self.match.get(lp)
        if rp is None:
            return None
        k = rp + 1
        if k < n and toks[k].kind == "ident" and toks[k].text == "throws":
            k += 1
            while k < n and toks[k].text != "{":
                k += 1
        if k >= n or toks[k].text != "{":
            return None
        params = self._params(lp + 1, rp)
        self.i = k
        body = self.parse_braced_block()
        return FunctionDef(
            toks[first].start, body.end, toks[name_at].text, params, body, header_end=toks[rp].end
        )

    def _params(self, lo: int, hi: int) -> tuple[Param, ...]:
        params = []
        group: list[Token] = []
        depth = 0
        for j in range(lo, hi + 1):
            t = self.toks[j]
            if j == hi or (depth == 0 and t.text == ","):
                if group:
                    eq = next((x for x, g in enumerate(group) if g.text == "=" and g.kind == "op"), None)
                    head = group if eq is None else group[:eq]
                    idents = [g for g in head if g.kind == "ident"]
                    name = idents[-1].text if idents else head[-1].text
                    params.append(Param(group[0].start, group[-1].end, name, eq is not None))
                group = []
                continue
            if t.text in ("(", "[", "{", "<"):
                depth += 1
            elif t.text in (")", "]", "}", ">"):
                depth -= 1
            group.append(t)
        return tuple(params)

    # -- statements -----------------------------------------------------------

    def parse_braced_block(self) -> Block:
        lb = self.expect_op("{")
        self.nl_ctx.append(True)
        stmts = self.parse_stmts()
        self.nl_ctx.pop()
        rb = self.expect_op("}")
        return Block(lb.start, rb.end, tuple(stmts), True)

    def parse_stmts(self, stop_words: tuple[str, ...] = ()) -> list[Stmt]:
        stmts: list[Stmt] = []
        while True:
            t = self.peek()
            if t.kind == "eof" or (t.kind == "op" and t.text == "}"):
                break
            if stop_words and t.kind == "ident" and t.text in stop_words:
                break
            if t.kind == "op" and t.text == ";":
                self.advance()
                continue
            stmts.append(self.parse_statement_safe())
        return stmts

    def parse_statement_safe(self, terminators: tuple[str, ...] = ()) -> Stmt:
        start = self.i
        depth = len(self.nl_ctx)
        try:
            stmt = self.parse_statement()
            if not self.at_statement_end() and not self.at_word(*terminators):
                raise ParseError("trailing tokens")
            return stmt
        except ParseError:
            del self.nl_ctx[depth:]
            self.i = start
            end = self._skip_statement(start, terminators)
            return self._opaque_from(start, end)

    def _opaque_from(self, lo: int, hi: int) -> Opaque:
        hi = max(hi, lo + 1)
        s, e = self.toks[lo].start, self.toks[hi - 1].end
        self.i = hi
        return Opaque(s, e, self.text[s - self.offset:e - self.offset])

    def _skip_statement(self, start: int, terminators: tuple[str, ...] = ()) -> int:
        j = start
        n = len(self.toks)
        while j < n:
            t = self.toks[j]
            if t.kind == "op" and t.text in (")", "]", "}"):
                break
            if j > start:
                if t.kind == "op" and t.text == ";":
                    break
                if t.kind == "ident" and t.text in terminators:
                    break
                prev = self.toks[j - 1]
                if self.nl[j] and not (prev.kind == "op" and prev.text in _CONTINUES) and not (
                    t.kind == "op" and t.text in (".", "?.", "*.")
                ):
                    break
            if t.kind == "op" and t.text in OPENERS and j in self.match:
                j = self.match[j] + 1
            else:
                j += 1
        return max(j, start + 1)

    def parse_statement(self) -> Stmt:
        t = self.peek()
        if t.kind == "ident":
            w = t.text
            if w == "if":
                return self.parse_if()
            if w == "try":
                return self.parse_try()
            if w == "return":
                return self.parse_return()
            if w in ("for", "while"):
                return self.parse_loop()
            if w == "switch":
                return self.parse_switch()
            if w in UNSUPPORTED_KEYWORDS:
                raise ParseError(f"unsupported statement {w!r}")
            decl = self._try_decl()
            if decl is not None:
                return decl
        elif t.kind == "op" and t.text == "@":
            raise ParseError("annotation")
        return self.parse_expr_statement()

    def _try_decl(self) -> Stmt | None:
        toks = self.toks
        j = self.i
        start_tok = toks[j]
        type_name = None
        while self.peek(j - self.i).kind == "ident" and toks[j].text in MODIFIERS:
            j += 1
        if self.peek(j - self.i).kind == "ident" and toks[j].text == "def":
            type_name = "def"
            j += 1
            # optional explicit type after def
            k = self._skip_type(j)
            if k > j and k < len(toks) and toks[k].kind == "ident":
                type_name = "def " + " ".join(t.text for t in toks[j:k])
                j = k
        elif j > self.i:
            type_name = "final"
        else:
            k = self._skip_type(j)
            if k > j and k < len(toks) and toks[k].kind == "ident" and not self.nl[k]:
                head = toks[j].text
                after = toks[k + 1] if k + 1 < len(toks) else self.eof
                if (head[:1].isupper() or head in ("int", "long", "boolean", "double", "float", "char", "byte", "short")) and (
                    (after.kind == "op" and after.text in ("=", ";", "}")) or after.kind == "eof" or self.nl[k + 1] if k + 1 < len(self.nl) else True
                ):
                    type_name = " ".join(t.text for t in toks[j:k])
                    j = k
        if type_name is None:
            return None
        if j >= len(toks) or toks[j].kind != "ident":
            raise ParseError("unsupported declaration")
        name_tok = toks[j]
        self.i = j + 1
        value = None
        if self.at_op("=") and not self.nl_before():
            self.advance()
            value = self.parse_expr()
        end = value.end if value is not None else name_tok.end
        return VarDecl(start_tok.start, end, name_tok.text, value, type_name)

    def parse_expr_statement(self) -> Stmt:
        start_tok = self.peek()
        expr = self.parse_expr()
        t = self.peek()
        if t.kind == "op" and t.text in ASSIGN_OPS and not self.nl_before():
            self.advance()
            value = self.parse_expr()
            return Assign(start_tok.start, value.end, expr, t.text, value)
        if isinstance(expr, (Name, Attribute)) and not self.at_statement_end() and self._starts_arg():
            expr = self.parse_command_call(expr)
        return ExprStmt(expr.start, expr.end, expr)

    def _starts_arg(self) -> bool:
        t = self.peek()
        if t.kind in ("string", "number"):
            return True
        if t.kind == "ident":
            return t.text not in WORD_OPS
        return t.kind == "op" and t.text in ("[", "!", "(")

    def parse_command_call(self, func: Expr) -> Call:
        args = [self.parse_arg()]
        while self.at_op(","):
            self.advance()
            args.append(self.parse_arg())
        closure = None
        if self.at_op("{") and not self.nl_before():
            closure = self.parse_closure()
        end = closure.end if closure else args[-1].end
        return Call(func.start, end, func, tuple(args), closure, parens=False)

    def parse_if(self) -> If:
        kw = self.advance()
        self.expect_op("(")
        self.nl_ctx.append(False)
        cond = self.parse_expr()
        self.nl_ctx.pop()
        self.expect_op(")")
        then = self.parse_arm(("else",))
        orelse = None
        else_start = None
        if self.at_word("else"):
            else_start = self.advance().start
            if self.at_word("if"):
                orelse = self.parse_if()
            else:
                orelse = self.parse_arm()
        end = (orelse.end if orelse is not None else then.end)
        return If(kw.start, end, cond, then, orelse, else_start)

    def parse_arm(self, terminators: tuple[str, ...] = ()) -> Block:
        if self.at_op("{"):
            return self.parse_braced_block()
        if self.at_op(";"):
            raise ParseError("empty arm")
        stmt = self.parse_statement_safe(terminators)
        return Block(stmt.start, stmt.end, (stmt,), False)

    def parse_try(self) -> Try:
        kw = self.advance()
        body = self.parse_braced_block()
        catches = []
        final = None
        while self.at_word("catch"):
            c = self.advance()
            lp = self.i
            self.expect_op("(")
            rp = self.match.get(lp)
            if rp is None:
                raise ParseError("catch header")
            header = self.text[self.toks[lp].start - self.offset:self.toks[rp].end - self.offset]
            self.i = rp + 1
            cbody = self.parse_braced_block()
            catches.append(Catch(c.start, cbody.end, header, cbody))
        if self.at_word("finally"):
            self.advance()
            final = self.parse_braced_block()
        if not catches and final is None:
            raise ParseError("try without catch/finally")
        end = final.end if final else catches[-1].end
        return Try(kw.start, end, body, tuple(catches), final)

    def parse_return(self) -> Return:
        kw = self.advance()
        if self.at_statement_end():
            return Return(kw.start, kw.end, None)
        value = self.parse_expr()
        return Return(kw.start, value.end, value)

    def parse_loop(self) -> Loop:
        kw = self.advance()
        lp = self.i
        self.expect_op("(")
        rp = self.match.get(lp)
        if rp is None:
            raise ParseError("loop header")
        header = None
        if kw.text == "while":
            self.nl_ctx.append(False)
            header = self.parse_expr()
            self.nl_ctx.pop()
            self.expect_op(")")
        else:
            header = self._for_header(lp, rp)
            self.i = rp + 1
        body = self.parse_arm()
        return Loop(kw.start, body.end, kw.text, header, body)

    def _for_header(self, lp: int, rp: int) -> Expr | None:
        # ``for (x in xs)``: keep the iterated expression for taint purposes
        toks = self.toks[lp + 1:rp]
        for j, t in enumerate(toks):
            if t.kind == "ident" and t.text == "in" or (t.kind == "op" and t.text == ":"):
                s, e = toks[j + 1].start if j + 1 < len(toks) else t.end, self.toks[rp].start
                return _opaque_expr(self.text[s - self.offset:e - self.offset], s, e)
        return None

    def parse_switch(self) -> Switch:
        kw = self.advance()
        self.expect_op("(")
        self.nl_ctx.append(False)
        subject = self.parse_expr()
        self.nl_ctx.pop()
        self.expect_op(")")
        self.expect_op("{")
        self.nl_ctx.append(True)
        arms: list[Block] = []
        while not self.at_op("}"):
            if self.at_word("case"):
                self.advance()
                self.nl_ctx.append(False)
                self.parse_expr()
                self.nl_ctx.pop()
                self.expect_op(":")
            elif self.at_word("default"):
                self.advance()
                self.expect_op(":")
            else:
                raise ParseError("switch body")
            body_start = self.peek().start
            stmts = []
            while not self.at_op("}") and not self.at_word("case", "default"):
                if self.at_op(";"):
                    self.advance()
                    continue
                if self.at_word("break"):
                    self.advance()
                    continue
                stmts.append(self.parse_statement_safe(("case", "default")))
            end = stmts[-1].end if stmts else body_start
            arms.append(Block(stmts[0].start if stmts else body_start, end, tuple(stmts), False))
        self.nl_ctx.pop()
        rb = self.expect_op("}")
        return Switch(kw.start, rb.end, subject, tuple(arms))

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> Expr:
        cond = self.parse_binary(1)
        if self.at_op("?") and not (self.nl_sensitive and self.nl_before()):
            self.advance()
            self.nl_ctx.append(False)
            then = self.parse_expr()
            self.expect_op(":")
            orelse = self.parse_expr()
            self.nl_ctx.pop()
            return Ternary(cond.start, orelse.end, cond, then, orelse)
        if self.at_op("?:") and not (self.nl_sensitive and self.nl_before()):
            self.advance()
            fallback = self.parse_expr()
            return Elvis(cond.start, fallback.end, cond, fallback)
        return cond

    def parse_binary(self, min_prec: int) -> Expr:
        left = self.parse_unary()
        while True:
            t = self.peek()
            if t.kind not in ("op", "ident") or t.text not in BINARY_PREC:
                break
            if t.kind == "ident" and t.text not in WORD_OPS:
                break
            if t.kind == "op" and t.text in WORD_OPS:
                break
            if self.nl_sensitive and self.nl_before():
                break
            prec = BINARY_PREC[t.text]
            if prec < min_prec:
                break
            self.advance()
            if t.text in ("as", "instanceof"):
                right = self._type_ref()
            else:
                right = self.parse_binary(prec + (0 if t.text == "**" else 1))
            left = BinOp(left.start, right.end, t.text, left, right)
        return left

    def _type_ref(self) -> Expr:
        j = self._skip_type(self.i)
        if j < 0 or j <= self.i:
            raise ParseError("type expected")
        s, e = self.toks[self.i].start, self.toks[j - 1].end
        self.i = j
        return Name(s, e, self.text[s - self.offset:e - self.offset])

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            return UnaryOp(t.start, operand.end, t.text, operand)
        if t.kind == "ident" and t.text == "new":
            return self.parse_postfix(self.parse_new())
        return self.parse_postfix(self.parse_primary())

    def parse_new(self) -> Expr:
        kw = self.advance()
        j = self._skip_type(self.i)
        if j < 0:
            raise ParseError("new without type")
        type_name = "".join(t.text for t in self.toks[self.i:j])
        self.i = j
        if self.at_op("("):
            args, rp = self.parse_args()
            return New(kw.start, rp, type_name, args)
        if self.at_op("["):
            lb = self.advance()
            self.nl_ctx.append(False)
            if not self.at_op("]"):
                self.parse_expr()
            self.nl_ctx.pop()
            rb = self.expect_op("]")
            return New(kw.start, rb.end, type_name, ())
        raise ParseError("new")

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.advance()
            return Literal(t.start, t.end, t.text)
        if t.kind == "string":
            self.advance()
            return self.make_string(t)
        if t.kind == "ident":
            self.advance()
            if t.text in LITERAL_WORDS:
                return Literal(t.start, t.end, t.text)
            return Name(t.start, t.end, t.text)
        if t.kind == "op":
            if t.text == "(":
                self.advance()
                self.nl_ctx.append(False)
                inner = self.parse_expr()
                self.nl_ctx.pop()
                rp = self.expect_op(")")
                return Paren(t.start, rp.end, inner)
            if t.text == "[":
                return self.parse_list_or_map()
            if t.text == "{":
                return self.parse_closure()
        raise ParseError(f"unexpected token {t.text!r} at {t.start}")

    def make_string(self, t: Token) -> StringLit:
        parts = []
        for ip in t.interpolations:
            parts.append(parse_fragment(self.text, ip.code, ip.start, self.offset))
        return StringLit(t.start, t.end, t.text, tuple(parts))

    def parse_postfix(self, expr: Expr) -> Expr:
        while True:
            t = self.peek()
            if t.kind != "op":
                break
            nl = self.nl_before()
            if t.text in (".", "?.", "*.", ".@", ".&"):
                self.advance()
                name = self.peek()
                if name.kind == "ident":
                    self.advance()
                    expr = Attribute(expr.start, name.end, expr, name.text, t.text)
                elif name.kind == "string":
                    self.advance()
                    expr = Attribute(expr.start, name.end, expr, name.text, t.text)
                else:
                    raise ParseError("member name expected")
            elif t.text == "(" and not nl:
                args, rp = self.parse_args()
                closure = None
                if self.at_op("{") and not self.nl_before():
                    closure = self.parse_closure()
                expr = Call(expr.start, closure.end if closure else rp, expr, args, closure)
            elif t.text == "[" and not nl:
                lb = self.advance()
                self.nl_ctx.append(False)
                items = [self.parse_expr()]
                while self.at_op(","):
                    self.advance()
                    items.append(self.parse_expr())
                self.nl_ctx.pop()
                rb = self.expect_op("]")
                index = items[0] if len(items) == 1 else ListLit(items[0].start, items[-1].end, tuple(items))
                expr = Index(expr.start, rb.end, expr, index)
            elif t.text == "{" and not nl and isinstance(expr, (Name, Attribute, Call)):
                if isinstance(expr, Call) and expr.closure is not None:
                    break
                closure = self.parse_closure()
                if isinstance(expr, Call):
                    expr = Call(expr.start, closure.end, expr.func, expr.args, closure, expr.parens)
                else:
                    expr = Call(expr.start, closure.end, expr, (), closure, False)
            elif t.text in ("++", "--") and not nl:
                self.advance()
                expr = UnaryOp(expr.start, t.end, t.text, expr, postfix=True)
            else:
                break
        return expr

    def parse_args(self) -> tuple[tuple[Arg, ...], int]:
        self.expect_op("(")
        self.nl_ctx.append(False)
        args = []
        while not self.at_op(")"):
            args.append(self.parse_arg())
            if self.at_op(","):
                self.advance()
            elif not self.at_op(")"):
                raise ParseError("expected ',' or ')'")
        self.nl_ctx.pop()
        rp = self.expect_op(")")
        return tuple(args), rp.end

    def parse_arg(self) -> Arg:
        t = self.peek()
        if t.kind in ("ident", "string", "number") and self.at_op(":", k=1):
            self.advance()
            self.advance()
            value = self.parse_expr()
            key = t.text
            if t.kind == "string":
                key = StringLit(t.start, t.end, t.text).value
            return Arg(t.start, value.end, key, value)
        if t.kind == "op" and t.text == "*" and self.at_op(":", k=1):
            self.advance()
            self.advance()
            value = self.parse_expr()
            return Arg(t.start, value.end, "*", value)
        value = self.parse_expr()
        return Arg(value.start, value.end, None, value)

    def parse_list_or_map(self) -> Expr:
        lb = self.expect_op("[")
        self.nl_ctx.append(False)
        try:
            if self.at_op(":") and self.at_op("]", k=1):
                self.advance()
                rb = self.advance()
                return MapLit(lb.start, rb.end, ())
            if self.at_op("]"):
                rb = self.advance()
                return ListLit(lb.start, rb.end, ())
            if self._at_map_key():
                entries = []
                while not self.at_op("]"):
                    entries.append(self.parse_map_entry())
                    if self.at_op(","):
                        self.advance()
                    elif not self.at_op("]"):
                        raise ParseError("expected ',' or ']' in map")
                rb = self.expect_op("]")
                return MapLit(lb.start, rb.end, tuple(entries))
            items = []
            while not self.at_op("]"):
                items.append(self.parse_expr())
                if self.at_op(","):
                    self.advance()
                elif not self.at_op("]"):
                    raise ParseError("expected ',' or ']' in list")
            rb = self.expect_op("]")
            return ListLit(lb.start, rb.end, tuple(items))
        finally:
            self.nl_ctx.pop()

    def _at_map_key(self) -> bool:
        t = self.peek()
        if t.kind in ("ident", "string", "number") and self.at_op(":", k=1):
            return True
        if t.kind == "op" and t.text == "(":
            rp = self.match.get(self.i)
            return rp is not None and rp + 1 < len(self.toks) and self.toks[rp + 1].text == ":"
        return t.kind == "op" and t.text == "*" and self.at_op(":", k=1)

    def parse_map_entry(self) -> MapEntry:
        t = self.peek()
        if t.kind == "op" and t.text == "(":
            key_expr = self.parse_primary()
            key = self.text[key_expr.start - self.offset:key_expr.end - self.offset]
        else:
            self.advance()
            key_expr = self.make_string(t) if t.kind == "string" else None
            key = key_expr.value if isinstance(key_expr, StringLit) else t.text
        self.expect_op(":")
        value = self.parse_expr()
        return MapEntry(t.start, value.end, key, key_expr, value)

    def parse_closure(self) -> Closure:
        lb = self.expect_op("{")
        params: list[str] = []
        explicit = False
        j = self.i
        group: list[Token] = []
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind == "op" and t.text == "->":
                explicit = True
                break
            if t.kind == "ident" or (t.kind == "op" and t.text in (",", ".", "<", ">", "[", "]")):
                j += 1
                continue
            break
        if explicit:
            for t in self.toks[self.i:j]:
                if t.kind == "op" and t.text == ",":
                    if group:
                        params.append(group[-1].text)
                    group = []
                elif t.kind == "ident":
                    group.append(t)
            if group:
                params.append(group[-1].text)
            self.i = j + 1
        else:
            params = ["it"]
        self.nl_ctx.append(True)
        stmts = self.parse_stmts()
        self.nl_ctx.pop()
        rb = self.expect_op("}")
        body = Block(lb.start, rb.end, tuple(stmts), True)
        return Closure(lb.start, rb.end, tuple(params), body, explicit)


def _opaque_expr(code: str, start: int, end: int) -> OpaqueExpr:
    names = tuple(dict.fromkeys(_NAME_RE.findall(_strip_quoted(code))))
    return OpaqueExpr(start, end, code, names)


def _strip_quoted(code: str) -> str:
    return re.sub(r"'[^']*'", "''", code)


def parse_fragment(full_text: str, code: str, start: int, base_offset: int = 0) -> Expr:
    """Parse the code of one string interpolation at absolute offset *start*."""
    end = start + len(code)
    try:
        tokens = tokenize(code)
    except Exception:
        return _opaque_expr(code, start, end)
    shifted = [Token(t.kind, t.text, t.start + start, t.end + start, tuple(
        type(ip)(ip.code, ip.start + start, ip.end + start, ip.braced) for ip in t.interpolations
    ), t.quote) for t in tokens]
    p = Parser(code, shifted, offset=start)
    p.nl_ctx = [False]
    try:
        expr = p.parse_expr()
        if p.peek().kind != "eof":
            raise ParseError("trailing")
        return expr
    except ParseError:
        return _opaque_expr(code, start, end)


def parse_tokens(text: str) -> tuple[list[Token], Module]:
    tokens = tokenize(text)
    return tokens, Parser(text, tokens).parse_module()
