"""Recursive-descent parser for ``.rdr`` model files.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    model      := "Model" IDENT ";" { statement }
    statement  := objective | vardef
    objective  := "Objective" ("Max"|"Min") IDENT "=" "EV" "(" IDENT ")" ";"
    vardef     := IDENT "=" expr ";"
    expr       := term { ("+"|"-") term }
    term       := unary { ("*"|"/") unary }
    unary      := "-" unary | power
    power      := primary [ "^" unary ]
    primary    := NUMBER | IDENT | "(" expr ")" | distcall | decision
    distcall   := DIST "(" constexpr { "," constexpr } ")"
    decision   := "decision" "(" STRING ")" "{" { STRING ":" expr ";" } "}"

A minus sign directly in front of a number literal (and not followed by
``^``) is folded into a negative literal.
"""

from __future__ import annotations

from radar.errors import ParseError
from radar.language.lexer import Token
from radar.language.nodes import (
    DISTRIBUTIONS,
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    ModelAst,
    Number,
    ObjectiveDecl,
    Option,
    UnaryNeg,
    VarDef,
    VarRef,
    walk,
)


class Parser:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.i = 0

    # -- token helpers -------------------------------------------------
    def peek(self, offset=0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, kind, text=None, offset=0):
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def _where(self):
        tok = self.peek()
        if tok is not None:
            return tok.line, tok.col
        if self.tokens:
            last = self.tokens[-1]
            return last.line, last.col + len(last.text)
        return 1, 1

    def fail(self, message, expected=()):
        line, col = self._where()
        tok = self.peek()
        found = "end of input" if tok is None else repr(tok.text)
        raise ParseError(f"{message}, found {found}", line, col, expected)

    def expect(self, kind, text=None, label=None):
        if self.at(kind, text):
            tok = self.tokens[self.i]
            self.i += 1
            return tok
        self.fail("unexpected token", [label or text or kind])

    # -- grammar -------------------------------------------------------
    def model(self) -> ModelAst:
        head = self.expect("KEYWORD", "Model", "'Model'")
        name = self.expect("IDENT", label="model name").text
        self.expect("SEMI", label="';'")
        statements = []
        while self.peek() is not None:
            if self.at("KEYWORD", "Objective"):
                statements.append(self.objective())
            elif self.at("IDENT"):
                statements.append(self.vardef())
            else:
                self.fail("expected a statement", ["'Objective'", "identifier"])
        return ModelAst(name, tuple(statements), pos=(head.line, head.col))

    def objective(self):
        head = self.expect("KEYWORD", "Objective")
        if self.at("KEYWORD", "Max") or self.at("KEYWORD", "Min"):
            direction = self.tokens[self.i].text
            self.i += 1
        else:
            self.fail("expected objective direction", ["'Max'", "'Min'"])
        name = self.expect("IDENT", label="objective name").text
        self.expect("EQ", label="'='")
        self.expect("KEYWORD", "EV", "'EV'")
        self.expect("LPAREN", label="'('")
        target = self.expect("IDENT", label="variable name").text
        self.expect("RPAREN", label="')'")
        self.expect("SEMI", label="';'")
        return ObjectiveDecl(name, direction, target, pos=(head.line, head.col))

    def vardef(self):
        head = self.expect("IDENT")
        self.expect("EQ", label="'='")
        expr = self.expr()
        self.expect("SEMI", label="';'")
        return VarDef(head.text, expr, pos=(head.line, head.col))

    def expr(self):
        node = self.term()
        while self.at("PLUS") or self.at("MINUS"):
            tok = self.tokens[self.i]
            self.i += 1
            node = BinaryOp(tok.text, node, self.term(), pos=(tok.line, tok.col))
        return node

    def term(self):
        node = self.unary()
        while self.at("STAR") or self.at("SLASH"):
            tok = self.tokens[self.i]
            self.i += 1
            node = BinaryOp(tok.text, node, self.unary(), pos=(tok.line, tok.col))
        return node

    def unary(self):
        if self.at("MINUS"):
            tok = self.tokens[self.i]
            self.i += 1
            if self.at("NUMBER") and not self.at("CARET", offset=1):
                num = self.tokens[self.i]
                self.i += 1
                return Number(-num.value, pos=(tok.line, tok.col))
            return UnaryNeg(self.unary(), pos=(tok.line, tok.col))
        return self.power()

    def power(self):
        base = self.primary()
        if self.at("CARET"):
            tok = self.tokens[self.i]
            self.i += 1
            return BinaryOp("^", base, self.unary(), pos=(tok.line, tok.col))
        return base

    def primary(self):
        tok = self.peek()
        if tok is None:
            self.fail("expected an expression", ["number", "identifier", "'('"])
        pos = (tok.line, tok.col)
        if tok.kind == "NUMBER":
            self.i += 1
            return Number(tok.value, pos=pos)
        if tok.kind == "IDENT":
            self.i += 1
            return VarRef(tok.text, pos=pos)
        if tok.kind == "LPAREN":
            self.i += 1
            node = self.expr()
            self.expect("RPAREN", label="')'")
            return node
        if tok.kind == "KEYWORD" and tok.text in DISTRIBUTIONS:
            return self.distcall()
        if tok.kind == "KEYWORD" and tok.text == "decision":
            return self.decision()
        self.fail("expected an expression", ["number", "identifier", "'('", "'decision'"])

    def distcall(self):
        head = self.tokens[self.i]
        self.i += 1
        self.expect("LPAREN", label="'('")
        args = [self.constexpr()]
        while self.at("COMMA"):
            self.i += 1
            args.append(self.constexpr())
        self.expect("RPAREN", label="')'")
        arity = DISTRIBUTIONS[head.text]
        if len(args) != arity:
            raise ParseError(
                f"{head.text} takes {arity} argument(s), got {len(args)}", head.line, head.col
            )
        return DistributionCall(head.text, tuple(args), pos=(head.line, head.col))

    def constexpr(self):
        node = self.expr()
        for sub in walk(node):
            if not isinstance(sub, (Number, BinaryOp, UnaryNeg)):
                line, col = sub.pos
                raise ParseError(
                    "distribution arguments must be constant expressions", line, col
                )
        return node

    def decision(self):
        head = self.tokens[self.i]
        self.i += 1
        self.expect("LPAREN", label="'('")
        name = self.expect("STRING", label="decision name").value
        self.expect("RPAREN", label="')'")
        self.expect("LBRACE", label="'{'")
        options = []
        while self.at("STRING"):
            opt = self.tokens[self.i]
            self.i += 1
            self.expect("COLON", label="':'")
            body = self.expr()
            self.expect("SEMI", label="';'")
            options.append(Option(opt.value, body, pos=(opt.line, opt.col)))
        self.expect("RBRACE", label="'}'")
        return DecisionBlock(name, tuple(options), pos=(head.line, head.col))


def parse(tokens) -> ModelAst:
    parser = Parser(tokens)
    return parser.model()
