from __future__ import annotations

import math
import re
from dataclasses import dataclass

from radar.errors import LexError

KEYWORDS = frozenset(
    {
        "Model",
        "Objective",
        "Max",
        "Min",
        "EV",
        "decision",
        "deterministic",
        "normal",
        "uniform",
        "triangular",
        "exponential",
    }
)

PUNCTUATION = {
    "=": "EQ",
    ";": "SEMI",
    ",": "COMMA",
    ":": "COLON",
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    "+": "PLUS",
    "-": "MINUS",
    "*": "STAR",
    "/": "SLASH",
    "^": "CARET",
}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUMBER, STRING, KEYWORD or a punctuation kind
    text: str
    value: object
    line: int
    col: int

    def __repr__(self):
        if self.kind in ("IDENT", "NUMBER", "STRING", "KEYWORD"):
            return f"{self.kind}({self.text})"
        return self.kind


_NUMBER = re.compile(r"[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SPACE = re.compile(r"[ \t\r\f\v]+")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        col = pos - line_start + 1
        if ch == "\n":
            pos += 1
            line, line_start = line + 1, pos
            continue
        m = _SPACE.match(source, pos)
        if m:
            pos = m.end()
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            pos = n if end < 0 else end
            continue
        if ch.isdigit():
            m = _NUMBER.match(source, pos)
            text = m.group()
            value = float(text)
            if not math.isfinite(value):
                raise LexError(f"number {text!r} is out of range", line, col)
            tokens.append(Token("NUMBER", text, value, line, col))
            pos = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT.match(source, pos)
            text = m.group()
            kind = "KEYWORD" if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, text, line, col))
            pos = m.end()
            continue
        if ch == '"':
            end, value = _read_string(source, pos, line, col)
            tokens.append(Token("STRING", source[pos:end], value, line, col))
            pos = end
            continue
        if ch in PUNCTUATION:
            tokens.append(Token(PUNCTUATION[ch], ch, ch, line, col))
            pos += 1
            continue
        raise LexError(f"illegal character {ch!r}", line, col)
    return tokens


def _read_string(source, pos, line, col):
    chars = []
    i = pos + 1
    while i < len(source):
        ch = source[i]
        if ch == '"':
            return i + 1, "".join(chars)
        if ch == "\n":
            break
        if ch == "\\":
            nxt = source[i + 1] if i + 1 < len(source) else ""
            if nxt not in _ESCAPES:
                raise LexError(f"invalid escape '\\{nxt}' in string", line, col + (i - pos))
            chars.append(_ESCAPES[nxt])
            i += 2
            continue
        chars.append(ch)
        i += 1
    raise LexError("unterminated string literal", line, col)
