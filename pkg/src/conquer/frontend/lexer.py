"""Tokeniser for the concrete query syntax.

Keywords are fixed uppercase word sequences and are fused greedily by
longest match, so "INTERSECTED WITH" is one token while the lowercase
words of schema names (role names like "works for") stay separate WORD
tokens for the parser to resolve against the naming tables.  Strings use
single quotes; numbers are decimal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from ..errors import LexError

KEYWORD_PHRASES = [
    "THE DISTINCT COUNT OF",
    "THE DISTINCT SUM OF",
    "IS A SUBSET OF OR EQUAL TO",
    "IS A SUPERSET OF OR EQUAL TO",
    "IS LESS THAN OR EQUAL TO",
    "IS GREATER THAN OR EQUAL TO",
    "THE REVERSE OF",
    "THE PATH FROM",
    "THE COUNT OF",
    "THE SUM OF",
    "THE MINIMUM OF",
    "THE MAXIMUM OF",
    "THE AVERAGE OF",
    "THE MINIMUM",
    "THE MAXIMUM",
    "THE AVERAGE",
    "WHICH ARE ALL IN",
    "THAT INCLUDES ALL",
    "MATCHING ALL",
    "UNITED WITH",
    "INTERSECTED WITH",
    "OR OTHERWISE",
    "AND ALSO",
    "BUT NOT",
    "IS EQUAL TO",
    "IS NOT EQUAL TO",
    "IS LESS THAN",
    "IS GREATER THAN",
    "IS A SUBSET OF",
    "IS A SUPERSET OF",
    "IS DISJOINT FROM",
    "DOES NOT EQUAL",
    "EXCLUSIVE OR",
    "GROUPED BY",
    "ORDERED WITH",
    "ORDERED",
    "ASCENDING",
    "DESCENDING",
    "MISSING",
    "MINUS",
    "EQUALS",
    "IMPLIES",
    "OTHERWISE",
    "DISTINCT",
    "ONLY",
    "WHERE",
    "SELECT",
    "LIST",
    "FROM",
    "EACH",
    "SOME",
    "THEN",
    "ELSE",
    "HEAD",
    "TAIL",
    "AND",
    "NOT",
    "IFF",
    "VIA",
    "OF",
    "TO",
    "AS",
    "IF",
    "IN",
    "IS",
    "OR",
]

_PHRASES = sorted((tuple(p.split()) for p in KEYWORD_PHRASES), key=len, reverse=True)

_SYMBOLS = ["<=>", "::=", "=>", "<>", "<=", ">=", "=", "<", ">", "~", "&", "*", "+", "-", "/"]
_PUNCT = set("():!,;.[]")

_WORD_RE = re.compile(r"[A-Za-z_](?:[A-Za-z0-9_]|-(?=[A-Za-z0-9_]))*")
_NUM_RE = re.compile(r"\d+(?:\.\d+)?")


@dataclass(frozen=True)
class Token:
    kind: str  # word | keyword | number | string | symbol | punct
    text: str
    value: Any
    line: int
    column: int

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text}"


def tokenize(text: str) -> list[Token]:
    raw: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise LexError("unterminated string", line=line, column=col)
            value = text[i + 1 : j]
            raw.append(Token("string", text[i : j + 1], value, line, col))
            col += j + 1 - i
            i = j + 1
            continue
        m = _NUM_RE.match(text, i)
        if m:
            lit = m.group(0)
            value = Fraction(lit) if "." in lit else int(lit)
            raw.append(Token("number", lit, value, line, col))
            i = m.end()
            col += len(lit)
            continue
        m = _WORD_RE.match(text, i)
        if m:
            word = m.group(0)
            raw.append(Token("word", word, word, line, col))
            i = m.end()
            col += len(word)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                raw.append(Token("symbol", sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if ch in _PUNCT:
                raw.append(Token("punct", ch, ch, line, col))
                i += 1
                col += 1
            else:
                raise LexError(f"illegal character {ch!r}", line=line, column=col)
    return _fuse_keywords(raw)


def _fuse_keywords(tokens: list[Token]) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.kind == "word" and t.text.isupper():
            fused = None
            for phrase in _PHRASES:
                k = len(phrase)
                window = tokens[i : i + k]
                if len(window) == k and all(
                    w.kind == "word" and w.text == p for w, p in zip(window, phrase)
                ):
                    fused = Token("keyword", " ".join(phrase), " ".join(phrase), t.line, t.column)
                    i += k
                    break
            if fused is not None:
                out.append(fused)
                continue
        if t.kind == "word" and t.text == "true":
            out.append(Token("true", "true", True, t.line, t.column))
            i += 1
            continue
        out.append(t)
        i += 1
    return out
