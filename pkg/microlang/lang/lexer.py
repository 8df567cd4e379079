"""Lexer for microlang source text"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from .ast import SourceSpan
from ..values.tree import INT64_MAX
from ..utils.exceptions import LexError


class TokenKind(str, Enum):
    IDENT = "IDENT"
    KEYWORD = "KW"
    STRING = "STRING"
    INT = "INT"
    DOUBLE = "DOUBLE"
    LBRACE = "LBRACE"
    RBRACE = "RBRACE"
    LPAREN = "LPAREN"
    RPAREN = "RPAREN"
    LBRACKET = "LBRACKET"
    RBRACKET = "RBRACKET"
    DOT = "DOT"
    COMMA = "COMMA"
    COLON = "COLON"
    SEMI = "SEMI"
    EQUALS = "EQUALS"
    PIPE = "PIPE"
    AMP = "AMP"
    PLUS = "PLUS"
    MINUS = "MINUS"
    STAR = "STAR"
    SLASH = "SLASH"
    PERCENT = "PERCENT"
    HASH = "HASH"
    LT = "LT"
    GT = "GT"
    LE = "LE"
    GE = "GE"
    EQEQ = "EQEQ"
    NE = "NE"
    AND = "AND"
    OR = "OR"
    BANG = "BANG"
    QUESTION = "QUESTION"
    AT = "AT"
    EOF = "EOF"


KEYWORDS = frozenset({
    "inputPort", "outputPort", "interface", "type", "cset", "define", "main",
    "provide", "until", "execution", "nil", "if", "else", "while", "new",
    "true", "false", "rebind", "sleep", "undef",
    "OneWay", "RequestResponse", "Location", "Protocol", "Interfaces",
})

_TWO_CHAR = {
    "==": TokenKind.EQEQ,
    "!=": TokenKind.NE,
    "<=": TokenKind.LE,
    ">=": TokenKind.GE,
    "&&": TokenKind.AND,
    "||": TokenKind.OR,
}

_ONE_CHAR = {
    "{": TokenKind.LBRACE, "}": TokenKind.RBRACE,
    "(": TokenKind.LPAREN, ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET, "]": TokenKind.RBRACKET,
    ".": TokenKind.DOT, ",": TokenKind.COMMA, ":": TokenKind.COLON,
    ";": TokenKind.SEMI, "=": TokenKind.EQUALS, "|": TokenKind.PIPE,
    "&": TokenKind.AMP, "+": TokenKind.PLUS, "-": TokenKind.MINUS,
    "*": TokenKind.STAR, "/": TokenKind.SLASH, "%": TokenKind.PERCENT,
    "#": TokenKind.HASH, "<": TokenKind.LT, ">": TokenKind.GT,
    "!": TokenKind.BANG, "?": TokenKind.QUESTION, "@": TokenKind.AT,
}

_ESCAPES = {
    '"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f",
    "n": "\n", "r": "\r", "t": "\t",
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan
    value: object = None

    def is_keyword(self, word: str) -> bool:
        return self.kind == TokenKind.KEYWORD and self.text == word

    def describe(self) -> str:
        if self.kind == TokenKind.EOF:
            return "end of input"
        if self.kind in (TokenKind.IDENT, TokenKind.KEYWORD, TokenKind.STRING,
                         TokenKind.INT, TokenKind.DOUBLE):
            return f"{self.kind.value}({self.text})"
        return repr(self.text)

    def __str__(self) -> str:
        if self.kind in (TokenKind.IDENT, TokenKind.KEYWORD):
            return f"{self.kind.value}({self.text})"
        return self.kind.value


class Lexer:
    """Single-pass scanner producing tokens with 1-based spans"""

    def __init__(self, source: str, file: str = "<source>"):
        self.source = source
        self.file = file
        self.pos = 0
        self.line = 1
        self.col = 1

    def _peek(self, offset: int = 0) -> str:
        index = self.pos + offset
        return self.source[index] if index < len(self.source) else ""

    def _advance(self) -> str:
        ch = self.source[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _span_from(self, line: int, col: int) -> SourceSpan:
        return SourceSpan(self.file, line, col, self.line, self.col)

    def _error(self, line: int, col: int, message: str) -> LexError:
        return LexError(self._span_from(line, col), message)

    def _skip_trivia(self) -> None:
        while self.pos < len(self.source):
            ch = self._peek()
            if ch in " \t\r\n﻿":
                self._advance()
            elif ch == "/" and self._peek(1) == "/":
                while self.pos < len(self.source) and self._peek() != "\n":
                    self._advance()
            elif ch == "/" and self._peek(1) == "*":
                line, col = self.line, self.col
                self._advance()
                self._advance()
                while True:
                    if self.pos >= len(self.source):
                        raise self._error(line, col, "unterminated block comment")
                    if self._peek() == "*" and self._peek(1) == "/":
                        self._advance()
                        self._advance()
                        break
                    self._advance()
            else:
                return

    def _string(self, line: int, col: int) -> Token:
        start = self.pos
        self._advance()  # opening quote
        chars: List[str] = []
        while True:
            if self.pos >= len(self.source) or self._peek() == "\n":
                raise self._error(line, col, "unterminated string literal")
            ch = self._advance()
            if ch == '"':
                break
            if ch != "\\":
                chars.append(ch)
                continue
            if self.pos >= len(self.source):
                raise self._error(line, col, "unterminated string literal")
            esc = self._advance()
            if esc in _ESCAPES:
                chars.append(_ESCAPES[esc])
            elif esc == "u":
                digits = self.source[self.pos:self.pos + 4]
                if len(digits) != 4 or any(c not in "0123456789abcdefABCDEF" for c in digits):
                    raise self._error(line, col, "invalid \\u escape")
                for _ in range(4):
                    self._advance()
                chars.append(chr(int(digits, 16)))
            else:
                raise self._error(line, col, f"invalid escape \\{esc}")
        return Token(TokenKind.STRING, self.source[start:self.pos], self._span_from(line, col), "".join(chars))

    def _number(self, line: int, col: int) -> Token:
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        is_double = False
        if self._peek() == "." and self._peek(1).isdigit():
            is_double = True
            self._advance()
            while self._peek().isdigit():
                self._advance()
        if self._peek() in ("e", "E"):
            sign = 1 if self._peek(1) in ("+", "-") else 0
            if self._peek(1 + sign).isdigit():
                is_double = True
                for _ in range(1 + sign):
                    self._advance()
                while self._peek().isdigit():
                    self._advance()
        text = self.source[start:self.pos]
        span = self._span_from(line, col)
        if is_double:
            value = float(text)
            if math.isinf(value):
                raise LexError(span, f"double literal {text} out of range")
            return Token(TokenKind.DOUBLE, text, span, value)
        value = int(text)
        # INT64_MAX + 1 survives only as the operand of a unary minus
        if value > INT64_MAX + 1:
            raise LexError(span, f"integer literal {text} out of 64-bit range")
        return Token(TokenKind.INT, text, span, value)

    def _word(self, line: int, col: int) -> Token:
        start = self.pos
        while self._peek() and (self._peek().isalnum() or self._peek() == "_") and self._peek().isascii():
            self._advance()
        text = self.source[start:self.pos]
        kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT
        return Token(kind, text, self._span_from(line, col), text)

    def next_token(self) -> Token:
        self._skip_trivia()
        line, col = self.line, self.col
        if self.pos >= len(self.source):
            return Token(TokenKind.EOF, "", self._span_from(line, col))
        ch = self._peek()
        if ch == '"':
            return self._string(line, col)
        if ch.isascii() and ch.isdigit():
            return self._number(line, col)
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            return self._word(line, col)
        pair = ch + self._peek(1)
        if pair in _TWO_CHAR:
            self._advance()
            self._advance()
            return Token(_TWO_CHAR[pair], pair, self._span_from(line, col))
        if ch in _ONE_CHAR:
            self._advance()
            return Token(_ONE_CHAR[ch], ch, self._span_from(line, col))
        self._advance()
        raise self._error(line, col, f"illegal character {ch!r}")


def tokenize(source: str, file: str = "<source>", include_eof: bool = False) -> List[Token]:
    """
    Split source text into tokens, discarding whitespace and comments

    Args:
        source: Program text
        file: File name recorded in spans
        include_eof: Append the EOF token (the parser needs it)

    Returns:
        List of tokens

    Raises:
        LexError: On unterminated strings/comments or illegal characters
    """
    lexer = Lexer(source, file)
    tokens: List[Token] = []
    while True:
        token = lexer.next_token()
        if token.kind == TokenKind.EOF:
            if include_eof:
                tokens.append(token)
            return tokens
        tokens.append(token)
