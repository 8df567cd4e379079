"""Language front end - lexer, AST, parser and pretty-printer"""

from . import ast
from .lexer import Token, TokenKind, KEYWORDS, tokenize
from .parser import Parser, parse_program, parse_source
from .printer import pretty_print, format_expr, format_type

__all__ = [
    "ast",
    "Token",
    "TokenKind",
    "KEYWORDS",
    "tokenize",
    "Parser",
    "parse_program",
    "parse_source",
    "pretty_print",
    "format_expr",
    "format_type",
]
