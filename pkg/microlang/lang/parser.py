"""Recursive-descent parser for microlang"""

from typing import Iterable, List, Optional, Sequence as Seq, Tuple

from . import ast
from .lexer import Token, TokenKind, tokenize
from ..values.paths import Path, Segment
from ..values.tree import Kind, in_int64
from ..values.types import BASIC_KINDS, FieldType, NodeType, TypeRef, basic_type
from ..utils.exceptions import ParseError

_ITEM_KEYWORDS = ("type", "interface", "inputPort", "outputPort", "cset", "execution", "define", "main")

_COMPARISONS = {
    TokenKind.EQEQ: "==", TokenKind.NE: "!=", TokenKind.LT: "<",
    TokenKind.LE: "<=", TokenKind.GT: ">", TokenKind.GE: ">=",
}
_ADDITIVE = {TokenKind.PLUS: "+", TokenKind.MINUS: "-"}
_MULTIPLICATIVE = {TokenKind.STAR: "*", TokenKind.SLASH: "/", TokenKind.PERCENT: "%"}


class Parser:
    """
    Parser over a token list ending with EOF

    The first error aborts the parse with a ParseError carrying the
    offending span, the expected token set and the token found.
    """

    def __init__(self, tokens: Seq[Token], file: str = "<source>"):
        tokens = list(tokens)
        if not tokens or tokens[-1].kind != TokenKind.EOF:
            end = tokens[-1].span if tokens else ast.SourceSpan(file, 1, 1, 1, 1)
            eof_span = ast.SourceSpan(end.file, end.end_line, end.end_col, end.end_line, end.end_col)
            tokens.append(Token(TokenKind.EOF, "", eof_span))
        self.tokens = tokens
        self.file = file
        self.pos = 0
        self.prev: Token = tokens[0]

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def at(self, kind: TokenKind, text: Optional[str] = None, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token.kind == kind and (text is None or token.text == text)

    def at_keyword(self, word: str, offset: int = 0) -> bool:
        return self.at(TokenKind.KEYWORD, word, offset)

    def advance(self) -> Token:
        token = self.peek()
        if token.kind != TokenKind.EOF:
            self.pos += 1
        self.prev = token
        return token

    def accept(self, kind: TokenKind, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.advance()
        return None

    def error(self, expected: Iterable[str]) -> ParseError:
        token = self.peek()
        return ParseError(token.span, expected, token.describe())

    def expect(self, kind: TokenKind, text: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        label = text if text is not None else kind.value
        raise self.error([label])

    def number(self, token: Token, negative: bool = False):
        """Value of a numeric token; 2**63 is only valid under a minus"""
        value = -token.value if negative else token.value
        if token.kind == TokenKind.INT and not in_int64(value):
            raise ParseError(token.span, ["integer within 64-bit range"], token.text)
        return value

    def expect_keyword(self, word: str) -> Token:
        return self.expect(TokenKind.KEYWORD, word)

    def span_from(self, start: Token) -> ast.SourceSpan:
        return start.span.to(self.prev.span)

    # -- program ------------------------------------------------------------

    def parse_program(self) -> ast.Program:
        start = self.peek()
        types: List[ast.TypeDef] = []
        interfaces: List[ast.InterfaceDecl] = []
        inputs: List[ast.PortDecl] = []
        outputs: List[ast.PortDecl] = []
        csets: List[ast.CsetDecl] = []
        procedures: List[ast.Procedure] = []
        execution: Optional[ast.ExecutionMode] = None
        main: Optional[ast.Behavior] = None

        while not self.at(TokenKind.EOF):
            if self.at_keyword("type"):
                types.append(self.parse_typedef())
            elif self.at_keyword("interface"):
                interfaces.append(self.parse_interface())
            elif self.at_keyword("inputPort") or self.at_keyword("outputPort"):
                port = self.parse_port()
                (inputs if port.direction == ast.PortDirection.INPUT else outputs).append(port)
            elif self.at_keyword("cset"):
                csets.extend(self.parse_cset())
            elif self.at_keyword("execution"):
                if execution is not None:
                    raise self.error([k for k in _ITEM_KEYWORDS if k != "execution"])
                execution = self.parse_execution()
            elif self.at_keyword("define"):
                procedures.append(self.parse_define())
            elif self.at_keyword("main"):
                if main is not None:
                    raise self.error([k for k in _ITEM_KEYWORDS if k != "main"])
                self.advance()
                self.expect(TokenKind.LBRACE)
                main = self.parse_behavior()
                self.expect(TokenKind.RBRACE)
            else:
                raise self.error(_ITEM_KEYWORDS)

        if main is None:
            raise self.error(["main"])

        return ast.Program(
            types=tuple(types),
            interfaces=tuple(interfaces),
            input_ports=tuple(inputs),
            output_ports=tuple(outputs),
            csets=tuple(csets),
            execution=execution or ast.ExecutionMode.CONCURRENT,
            procedures=tuple(procedures),
            main=main,
            file=self.file,
            span=self.span_from(start) if self.pos > 0 else start.span,
        )

    # -- types --------------------------------------------------------------

    def parse_typedef(self) -> ast.TypeDef:
        start = self.expect_keyword("type")
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.COLON)
        type_expr = self.parse_type_expr()
        return ast.TypeDef(name, type_expr, self.span_from(start))

    def parse_type_expr(self):
        start = self.expect(TokenKind.IDENT)
        name = start.text
        if not self.at(TokenKind.LBRACE):
            return basic_type(name) or TypeRef(name, start.span)
        if name not in BASIC_KINDS:
            raise ParseError(start.span, sorted(BASIC_KINDS), start.describe())
        self.advance()
        fields: List[FieldType] = []
        while not self.at(TokenKind.RBRACE):
            fields.append(self.parse_field())
            self.accept(TokenKind.COMMA)
        self.expect(TokenKind.RBRACE)
        return NodeType(Kind(name), tuple(fields), self.span_from(start))

    def parse_field(self) -> FieldType:
        start = self.expect(TokenKind.IDENT)
        lo, hi = 1, 1
        if self.accept(TokenKind.QUESTION):
            lo, hi = 0, 1
        elif self.accept(TokenKind.STAR):
            lo, hi = 0, None
        elif self.accept(TokenKind.LBRACKET):
            lo = self.number(self.expect(TokenKind.INT))
            self.expect(TokenKind.COMMA)
            hi = None if self.accept(TokenKind.STAR) else self.number(self.expect(TokenKind.INT))
            self.expect(TokenKind.RBRACKET)
            if lo < 0 or (hi is not None and hi < lo):
                raise ParseError(self.span_from(start), ["cardinality with lo <= hi"], f"[{lo},{hi}]")
        self.expect(TokenKind.COLON)
        type_expr = self.parse_type_expr()
        return FieldType(start.text, type_expr, lo, hi, self.span_from(start))

    # -- interfaces ---------------------------------------------------------

    def parse_interface(self) -> ast.InterfaceDecl:
        start = self.expect_keyword("interface")
        name = self.expect(TokenKind.IDENT).text
        if self.accept(TokenKind.EQUALS):
            expr = self.parse_interface_expr()
            return ast.InterfaceDecl(name, expr, self.span_from(start))

        open_brace = self.expect(TokenKind.LBRACE)
        operations: List[ast.OperationSig] = []
        while not self.at(TokenKind.RBRACE):
            if self.at_keyword("OneWay"):
                kind = ast.OperationKind.ONE_WAY
            elif self.at_keyword("RequestResponse"):
                kind = ast.OperationKind.REQUEST_RESPONSE
            else:
                raise self.error(["OneWay", "RequestResponse", "RBRACE"])
            self.advance()
            self.expect(TokenKind.COLON)
            operations.append(self.parse_signature(kind))
            while self.accept(TokenKind.COMMA):
                operations.append(self.parse_signature(kind))
        self.expect(TokenKind.RBRACE)
        literal = ast.InterfaceLiteral(tuple(operations), self.span_from(open_brace))
        return ast.InterfaceDecl(name, literal, self.span_from(start))

    def parse_signature(self, kind: ast.OperationKind) -> ast.OperationSig:
        start = self.expect(TokenKind.IDENT)
        self.expect(TokenKind.LPAREN)
        request = self.parse_type_expr()
        self.expect(TokenKind.RPAREN)
        response = None
        if kind == ast.OperationKind.REQUEST_RESPONSE:
            self.expect(TokenKind.LPAREN)
            response = self.parse_type_expr()
            self.expect(TokenKind.RPAREN)
        return ast.OperationSig(start.text, kind, request, response, self.span_from(start))

    def parse_interface_expr(self):
        start = self.peek()
        left = self.parse_interface_term()
        while self.accept(TokenKind.PIPE):
            right = self.parse_interface_term()
            left = ast.InterfaceUnion(left, right, self.span_from(start))
        return left

    def parse_interface_term(self):
        start = self.peek()
        left = self.parse_interface_atom()
        while self.accept(TokenKind.AMP):
            right = self.parse_interface_atom()
            left = ast.InterfaceIntersection(left, right, self.span_from(start))
        return left

    def parse_interface_atom(self):
        if self.accept(TokenKind.LPAREN):
            expr = self.parse_interface_expr()
            self.expect(TokenKind.RPAREN)
            return expr
        token = self.expect(TokenKind.IDENT)
        return ast.InterfaceRef(token.text, token.span)

    # -- ports --------------------------------------------------------------

    def parse_port(self) -> ast.PortDecl:
        start = self.advance()
        direction = ast.PortDirection.INPUT if start.text == "inputPort" else ast.PortDirection.OUTPUT
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.LBRACE)
        location: Optional[str] = None
        protocol: Optional[ast.ProtocolSpec] = None
        interfaces: List[str] = []
        while not self.at(TokenKind.RBRACE):
            if self.accept(TokenKind.KEYWORD, "Location"):
                self.expect(TokenKind.COLON)
                location = self.expect(TokenKind.STRING).value
            elif self.accept(TokenKind.KEYWORD, "Protocol"):
                self.expect(TokenKind.COLON)
                protocol = self.parse_protocol()
            elif self.accept(TokenKind.KEYWORD, "Interfaces"):
                self.expect(TokenKind.COLON)
                interfaces.append(self.expect(TokenKind.IDENT).text)
                while self.accept(TokenKind.COMMA):
                    interfaces.append(self.expect(TokenKind.IDENT).text)
            else:
                raise self.error(["Location", "Protocol", "Interfaces", "RBRACE"])
        if protocol is None:
            raise self.error(["Protocol"])
        self.expect(TokenKind.RBRACE)
        return ast.PortDecl(name, direction, location, protocol, tuple(interfaces), self.span_from(start))

    def parse_protocol(self) -> ast.ProtocolSpec:
        start = self.expect(TokenKind.IDENT)
        parts = [start.text]
        while self.at(TokenKind.MINUS) and self.at(TokenKind.IDENT, offset=1):
            self.advance()
            parts.append(self.advance().text)
        params: List[Tuple[str, ast.Literal]] = []
        if self.accept(TokenKind.LBRACE):
            while not self.at(TokenKind.RBRACE):
                key = self.expect(TokenKind.IDENT).text
                self.expect(TokenKind.EQUALS)
                params.append((key, self.parse_literal()))
                self.accept(TokenKind.COMMA)
            self.expect(TokenKind.RBRACE)
        return ast.ProtocolSpec("-".join(parts), tuple(params), self.span_from(start))

    def parse_literal(self) -> ast.Literal:
        start = self.peek()
        negative = self.accept(TokenKind.MINUS) is not None
        token = self.peek()
        if token.kind in (TokenKind.INT, TokenKind.DOUBLE):
            self.advance()
            return ast.Literal(self.number(token, negative), self.span_from(start))
        if negative:
            raise self.error(["INT", "DOUBLE"])
        if token.kind == TokenKind.STRING:
            self.advance()
            return ast.Literal(token.value, token.span)
        if token.is_keyword("true") or token.is_keyword("false"):
            self.advance()
            return ast.Literal(token.text == "true", token.span)
        raise self.error(["INT", "DOUBLE", "STRING", "true", "false"])

    # -- correlation sets, execution, procedures ----------------------------

    def parse_cset(self) -> List[ast.CsetDecl]:
        self.expect_keyword("cset")
        self.expect(TokenKind.LBRACE)
        decls: List[ast.CsetDecl] = []
        while True:
            var_token = self.expect(TokenKind.IDENT)
            self.expect(TokenKind.COLON)
            aliases = [self.parse_alias()]
            self.accept(TokenKind.COMMA)
            while self.at(TokenKind.IDENT) and self.at(TokenKind.DOT, offset=1):
                aliases.append(self.parse_alias())
                self.accept(TokenKind.COMMA)
            decls.append(ast.CsetDecl(var_token.text, tuple(aliases), self.span_from(var_token)))
            if self.accept(TokenKind.RBRACE):
                return decls

    def parse_alias(self) -> ast.CsetAlias:
        start = self.expect(TokenKind.IDENT)
        self.expect(TokenKind.DOT)
        segments = [self.parse_static_segment(first=False)]
        while self.accept(TokenKind.DOT):
            segments.append(self.parse_static_segment(first=False))
        return ast.CsetAlias(start.text, Path(tuple(segments)), self.span_from(start))

    def parse_static_segment(self, first: bool) -> Segment:
        name = self.parse_segment_name(first)
        index = 0
        if self.accept(TokenKind.LBRACKET):
            index = self.number(self.expect(TokenKind.INT))
            self.expect(TokenKind.RBRACKET)
        return Segment(name, index)

    def parse_segment_name(self, first: bool) -> str:
        if not first and self.at(TokenKind.KEYWORD):
            return self.advance().text
        return self.expect(TokenKind.IDENT).text

    def parse_execution(self) -> ast.ExecutionMode:
        self.expect_keyword("execution")
        self.expect(TokenKind.LBRACE)
        token = self.peek()
        if token.kind == TokenKind.IDENT and token.text in ("concurrent", "sequential"):
            self.advance()
            mode = ast.ExecutionMode(token.text)
        else:
            raise self.error(["concurrent", "sequential"])
        self.expect(TokenKind.RBRACE)
        return mode

    def parse_define(self) -> ast.Procedure:
        start = self.expect_keyword("define")
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.LBRACE)
        body = self.parse_behavior()
        self.expect(TokenKind.RBRACE)
        return ast.Procedure(name, body, self.span_from(start))

    # -- behaviors ----------------------------------------------------------

    def parse_block(self) -> ast.Behavior:
        self.expect(TokenKind.LBRACE)
        body = self.parse_behavior()
        self.expect(TokenKind.RBRACE)
        return body

    def parse_behavior(self) -> ast.Behavior:
        start = self.peek()
        left = self.parse_sequence()
        if self.accept(TokenKind.PIPE):
            right = self.parse_behavior()
            return ast.Parallel(left, right, self.span_from(start))
        return left

    def parse_sequence(self) -> ast.Behavior:
        start = self.peek()
        first = self.parse_statement()
        if self.accept(TokenKind.SEMI):
            # a trailing ';' before a closing brace is tolerated
            if self.at(TokenKind.RBRACE) or self.at(TokenKind.EOF):
                return first
            second = self.parse_sequence()
            return ast.Sequence(first, second, self.span_from(start))
        return first

    def parse_statement(self) -> ast.Behavior:
        token = self.peek()

        if token.is_keyword("nil"):
            self.advance()
            return ast.Nil(token.span)
        if token.kind == TokenKind.LBRACE:
            return self.parse_block()
        if token.kind == TokenKind.LBRACKET:
            branches = self.parse_branches()
            return ast.InputChoice(branches, self.span_from(token))
        if token.is_keyword("provide"):
            self.advance()
            provide = self.parse_branches()
            self.expect_keyword("until")
            until = self.parse_branches()
            return ast.ProvideUntil(provide, until, self.span_from(token))
        if token.is_keyword("if"):
            return self.parse_if()
        if token.is_keyword("while"):
            self.advance()
            self.expect(TokenKind.LPAREN)
            condition = self.parse_expr()
            self.expect(TokenKind.RPAREN)
            body = self.parse_block()
            return ast.While(condition, body, self.span_from(token))
        if token.is_keyword("rebind"):
            self.advance()
            port = self.expect(TokenKind.IDENT).text
            location = self.parse_expr()
            protocol = self.parse_expr()
            return ast.Rebind(port, location, protocol, self.span_from(token))
        if token.is_keyword("sleep"):
            self.advance()
            self.expect(TokenKind.LPAREN)
            millis = self.parse_expr()
            self.expect(TokenKind.RPAREN)
            return ast.Sleep(millis, self.span_from(token))
        if token.is_keyword("undef"):
            self.advance()
            self.expect(TokenKind.LPAREN)
            path = self.parse_path()
            self.expect(TokenKind.RPAREN)
            return ast.Undef(path, self.span_from(token))

        if token.kind == TokenKind.IDENT:
            following = self.peek(1).kind
            if following == TokenKind.AT:
                return self.parse_send()
            if following == TokenKind.LPAREN:
                branch = self.parse_input(allow_body=True)
                return ast.InputChoice((branch,), self.span_from(token))
            if following in (TokenKind.DOT, TokenKind.LBRACKET, TokenKind.EQUALS):
                path = self.parse_path()
                self.expect(TokenKind.EQUALS)
                expr = self.parse_expr()
                return ast.Assign(path, expr, self.span_from(token))
            self.advance()
            return ast.CallProcedure(token.text, token.span)

        raise self.error(["statement"])

    def parse_if(self) -> ast.If:
        start = self.expect_keyword("if")
        self.expect(TokenKind.LPAREN)
        condition = self.parse_expr()
        self.expect(TokenKind.RPAREN)
        then = self.parse_block()
        otherwise = None
        if self.accept(TokenKind.KEYWORD, "else"):
            otherwise = self.parse_if() if self.at_keyword("if") else self.parse_block()
        return ast.If(condition, then, otherwise, self.span_from(start))

    def parse_send(self) -> ast.Behavior:
        start = self.expect(TokenKind.IDENT)
        self.expect(TokenKind.AT)
        port = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.LPAREN)
        request = None if self.at(TokenKind.RPAREN) else self.parse_expr()
        self.expect(TokenKind.RPAREN)
        if self.accept(TokenKind.LPAREN):
            response = self.parse_path()
            self.expect(TokenKind.RPAREN)
            return ast.SolicitResponse(port, start.text, request, response, self.span_from(start))
        return ast.Notify(port, start.text, request, self.span_from(start))

    def parse_branches(self) -> Tuple[ast.InputBranch, ...]:
        branches = [self.parse_branch()]
        while True:
            if self.at(TokenKind.LBRACKET):
                branches.append(self.parse_branch())
            elif self.at(TokenKind.PIPE) and self.at(TokenKind.LBRACKET, offset=1):
                self.advance()
                branches.append(self.parse_branch())
            else:
                return tuple(branches)

    def parse_branch(self) -> ast.InputBranch:
        self.expect(TokenKind.LBRACKET)
        branch = self.parse_input(allow_body=True)
        self.expect(TokenKind.RBRACKET)
        if self.at(TokenKind.LBRACE):
            if not isinstance(branch.body, ast.Nil) or branch.body.span is not ast.NO_SPAN:
                raise self.error(["statement"])
            body = self.parse_block()
            if isinstance(branch, ast.OneWayBranch):
                return ast.OneWayBranch(branch.operation, branch.request, body, branch.span)
            return ast.RequestResponseBranch(branch.operation, branch.request, branch.response, body, branch.span)
        return branch

    def parse_input(self, allow_body: bool) -> ast.InputBranch:
        start = self.expect(TokenKind.IDENT)
        self.expect(TokenKind.LPAREN)
        request = None if self.at(TokenKind.RPAREN) else self.parse_path()
        self.expect(TokenKind.RPAREN)
        is_rr = False
        response = None
        if self.accept(TokenKind.LPAREN):
            is_rr = True
            response = None if self.at(TokenKind.RPAREN) else self.parse_expr()
            self.expect(TokenKind.RPAREN)
        body: ast.Behavior = ast.Nil()
        if allow_body and self.at(TokenKind.LBRACE):
            body = self.parse_block()
        span = self.span_from(start)
        if is_rr:
            return ast.RequestResponseBranch(start.text, request, response, body, span)
        return ast.OneWayBranch(start.text, request, body, span)

    # -- expressions --------------------------------------------------------

    def parse_path(self) -> ast.PathExpr:
        start = self.peek()
        segments = [self.parse_path_segment(first=True)]
        while self.accept(TokenKind.DOT):
            segments.append(self.parse_path_segment(first=False))
        return ast.PathExpr(tuple(segments), self.span_from(start))

    def parse_path_segment(self, first: bool) -> ast.PathSegment:
        start = self.peek()
        name = self.parse_segment_name(first)
        index = None
        if self.accept(TokenKind.LBRACKET):
            index = self.parse_expr()
            self.expect(TokenKind.RBRACKET)
        return ast.PathSegment(name, index, self.span_from(start))

    def parse_expr(self):
        start = self.peek()
        left = self.parse_and()
        while self.accept(TokenKind.OR):
            left = ast.BinaryOp("||", left, self.parse_and(), self.span_from(start))
        return left

    def parse_and(self):
        start = self.peek()
        left = self.parse_not()
        while self.accept(TokenKind.AND):
            left = ast.BinaryOp("&&", left, self.parse_not(), self.span_from(start))
        return left

    def parse_not(self):
        start = self.peek()
        if self.accept(TokenKind.BANG):
            return ast.UnaryOp("!", self.parse_not(), self.span_from(start))
        return self.parse_comparison()

    def parse_comparison(self):
        start = self.peek()
        left = self.parse_additive()
        op = _COMPARISONS.get(self.peek().kind)
        if op is not None:
            self.advance()
            right = self.parse_additive()
            return ast.BinaryOp(op, left, right, self.span_from(start))
        return left

    def parse_additive(self):
        start = self.peek()
        left = self.parse_multiplicative()
        while self.peek().kind in _ADDITIVE:
            op = _ADDITIVE[self.advance().kind]
            left = ast.BinaryOp(op, left, self.parse_multiplicative(), self.span_from(start))
        return left

    def parse_multiplicative(self):
        start = self.peek()
        left = self.parse_unary()
        while self.peek().kind in _MULTIPLICATIVE:
            op = _MULTIPLICATIVE[self.advance().kind]
            left = ast.BinaryOp(op, left, self.parse_unary(), self.span_from(start))
        return left

    def parse_unary(self):
        start = self.peek()
        if self.at(TokenKind.MINUS):
            following = self.peek(1)
            if following.kind in (TokenKind.INT, TokenKind.DOUBLE):
                self.advance()
                self.advance()
                return ast.Literal(self.number(following, negative=True), self.span_from(start))
            self.advance()
            return ast.UnaryOp("-", self.parse_unary(), self.span_from(start))
        return self.parse_primary()

    def parse_primary(self):
        token = self.peek()
        if token.kind in (TokenKind.INT, TokenKind.DOUBLE):
            self.advance()
            return ast.Literal(self.number(token), token.span)
        if token.kind == TokenKind.STRING:
            self.advance()
            return ast.Literal(token.value, token.span)
        if token.is_keyword("true") or token.is_keyword("false"):
            self.advance()
            return ast.Literal(token.text == "true", token.span)
        if token.is_keyword("new"):
            self.advance()
            return ast.NewToken(token.span)
        if token.kind == TokenKind.HASH:
            self.advance()
            path = self.parse_path()
            return ast.SizeOf(path, self.span_from(token))
        if token.kind == TokenKind.IDENT:
            return self.parse_path()
        if self.accept(TokenKind.LPAREN):
            expr = self.parse_expr()
            self.expect(TokenKind.RPAREN)
            return expr
        raise self.error(["expression"])


def parse_program(tokens: Seq[Token], file: str = "<source>") -> ast.Program:
    """
    Parse a token stream into a Program

    Args:
        tokens: Tokens from `tokenize` (EOF token optional)
        file: File name recorded on the program

    Returns:
        Program AST

    Raises:
        ParseError: On the first syntax error
    """
    if tokens:
        file = tokens[0].span.file
    return Parser(tokens, file).parse_program()


def parse_source(source: str, file: str = "<source>") -> ast.Program:
    """Tokenize and parse in one go"""
    return parse_program(tokenize(source, file, include_eof=True), file)
