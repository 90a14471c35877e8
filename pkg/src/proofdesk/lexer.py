"""Tokenizer for the input language and entered fragments.

Supports (* ... *) comments (nesting allowed). Token positions are 1-based
line/column; a token's span covers exactly its source extent.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError
from .syntax import Span

KEYWORDS = {
    "type",
    "logic",
    "axiom",
    "goal",
    "forall",
    "exists",
    "not",
    "and",
    "or",
    "true",
    "false",
    "int",
    "bool",
    "real",
    "prop",
}

# longest match first
SYMBOLS = [
    "<->",
    "->",
    "<>",
    "<=",
    ">=",
    "<",
    ">",
    "=",
    "+",
    "-",
    "*",
    "(",
    ")",
    "[",
    "]",
    ",",
    ":",
    ".",
    "|",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'tyvar', 'int', 'kw', 'sym', 'eof'
    text: str
    span: Span


def _ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def bump(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            bump(1)
            continue
        if text.startswith("(*", i):
            depth = 1
            start = (line, col)
            bump(2)
            while i < n and depth:
                if text.startswith("(*", i):
                    depth += 1
                    bump(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    bump(2)
                else:
                    bump(1)
            if depth:
                raise ParseError("unterminated comment", (*start, line, col))
            continue
        start_line, start_col = line, col
        if c == "'":
            j = i + 1
            if j >= n or not _ident_start(text[j]):
                raise ParseError("expected type variable after '", (line, col, line, col + 1))
            k = j
            while k < n and _ident_char(text[k]):
                k += 1
            word = text[i + 1 : k]
            bump(k - i)
            tokens.append(Token("tyvar", word, (start_line, start_col, line, col)))
            continue
        if c.isdigit():
            k = i
            while k < n and text[k].isdigit():
                k += 1
            word = text[i:k]
            bump(k - i)
            tokens.append(Token("int", word, (start_line, start_col, line, col)))
            continue
        if _ident_start(c):
            k = i
            while k < n and _ident_char(text[k]):
                k += 1
            word = text[i:k]
            bump(k - i)
            kind = "kw" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, (start_line, start_col, line, col)))
            continue
        for s in SYMBOLS:
            if text.startswith(s, i):
                bump(len(s))
                tokens.append(Token("sym", s, (start_line, start_col, line, col)))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", (line, col, line, col + 1))
    tokens.append(Token("eof", "", (line, col, line, col)))
    return tokens
