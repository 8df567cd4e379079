"""Tests for the parser"""

import pytest

from microlang.checker import check_program
from microlang.lang import ast, parse_source
from microlang.utils.exceptions import LexError, ParseError
from microlang.values import BasicType, FieldType, Kind, NodeType, Path, TypeRef

CUSTOMERS_PORT = """
inputPort Customers {
  Location: "socket://www.myonlineshop.it:8000"
  Protocol: http
  Interfaces: CustomersInterface
  }
"""

CUSTOMERS_INTERFACE = """
interface CustomersInterface {
  RequestResponse: getList( void )( productIdList ),
                   getPrice( productId )( double )
  }
"""

CUSTOMERS_SERVICE = (
    "type productId: void { id: string }\n"
    "type productIdList: void { id*: string }\n"
    + CUSTOMERS_INTERFACE
    + CUSTOMERS_PORT
    + "main {\n"
    "  [ getList()( list ) { list.id[0] = \"p1\" } ]\n"
    "  [ getPrice( req )( price ) { price = 2.5 } ]\n"
    "}\n"
)


def parse_main(body: str) -> ast.Behavior:
    return parse_source(f"main {{ {body} }}").main


def path(*names) -> ast.PathExpr:
    return ast.PathExpr(tuple(ast.PathSegment(name) for name in names))


def test_input_port_declaration():
    program = parse_source(CUSTOMERS_PORT + "main { nil }")
    (port,) = program.input_ports
    assert port.name == "Customers"
    assert port.direction == ast.PortDirection.INPUT
    assert port.location == "socket://www.myonlineshop.it:8000"
    assert port.protocol == ast.ProtocolSpec("http")
    assert port.interfaces == ("CustomersInterface",)


def test_customers_service_checks_clean():
    checked = check_program(parse_source(CUSTOMERS_SERVICE, "customers.ml.svc"))
    assert checked.diagnostics == []
    assert checked.routing["getPrice"] == ["Customers"]
    assert checked.starting_ops == frozenset({"getList", "getPrice"})


def test_minimal_program():
    program = parse_source("main { nil }")
    assert program.main == ast.Nil()
    assert program.execution == ast.ExecutionMode.CONCURRENT
    assert program.types == () and program.ports == ()


def test_shop_workflow(services_dir):
    program = parse_source((services_dir / "shop.ml.svc").read_text(), "shop.ml.svc")
    main = program.main
    assert isinstance(main, ast.Sequence)

    (login,) = main.first.branches
    assert isinstance(login, ast.RequestResponseBranch)
    assert login.operation == "login"
    assert login.request is None
    assert login.response == path("csets", "sid")
    assert login.body == ast.Assign(path("csets", "sid"), ast.NewToken())

    workflow = main.second
    assert isinstance(workflow, ast.ProvideUntil)
    assert [b.operation for b in workflow.provide] == ["addToCart", "removeFromCart"]
    assert [b.operation for b in workflow.until] == ["checkout", "logout"]
    checkout, logout = workflow.until
    assert checkout.body == ast.Sequence(ast.CallProcedure("pay"), ast.CallProcedure("ship"))
    assert isinstance(logout, ast.OneWayBranch) and logout.body == ast.Nil()

    assert [p.name for p in program.procedures] == ["pay", "ship"]
    assert program.csets[0].variable == "sid"
    assert [a.operation for a in program.csets[0].aliases] == ["addToCart", "removeFromCart", "checkout", "logout"]
    assert program.csets[0].aliases[0].path == Path.of("sid")


def test_types():
    program = parse_source("""
        type productIdList: void { id*: string }
        type window: int { lo?: int, hi[1,*]: int, tags[0,3]: string }
        type alias: productIdList
        main { nil }
    """)
    product_list, window, alias = (t.type for t in program.types)
    assert product_list == NodeType(Kind.VOID, (FieldType("id", BasicType(Kind.STRING), 0, None),))
    assert [(f.name, f.lo, f.hi) for f in window.fields] == [("lo", 0, 1), ("hi", 1, None), ("tags", 0, 3)]
    assert window.root == Kind.INT
    assert alias == TypeRef("productIdList")


def test_interface_literal_and_algebra_precedence():
    program = parse_source("""
        interface A { OneWay: f(int), g(string) RequestResponse: h(void)(bool) }
        interface B = A | C & D
        interface E = (A | C) & D
        main { nil }
    """)
    literal = program.interfaces[0].expr
    assert [(s.name, s.kind) for s in literal.operations] == [
        ("f", ast.OperationKind.ONE_WAY), ("g", ast.OperationKind.ONE_WAY), ("h", ast.OperationKind.REQUEST_RESPONSE),
    ]
    assert literal.operations[2].response == BasicType(Kind.BOOL)
    assert program.interfaces[1].expr == ast.InterfaceUnion(
        ast.InterfaceRef("A"), ast.InterfaceIntersection(ast.InterfaceRef("C"), ast.InterfaceRef("D"))
    )
    assert program.interfaces[2].expr == ast.InterfaceIntersection(
        ast.InterfaceUnion(ast.InterfaceRef("A"), ast.InterfaceRef("C")), ast.InterfaceRef("D")
    )


def test_protocol_parameters():
    program = parse_source("""
        outputPort Auth {
          Location: "local://auth"
          Protocol: sodep-lite { timeout = 5, delay = -1 }
          Interfaces: AuthInterface
        }
        main { nil }
    """)
    protocol = program.output_ports[0].protocol
    assert protocol.name == "sodep-lite"
    assert protocol.param("timeout") == 5
    assert protocol.param("delay") == -1
    assert protocol.param("missing", 30) == 30


def test_sequence_is_right_associative_and_parallel_binds_loosest():
    a, b, c = (ast.Assign(path(n), ast.Literal(i)) for i, n in enumerate("abc"))
    assert parse_main("a = 0; b = 1; c = 2") == ast.Sequence(a, ast.Sequence(b, c))
    assert parse_main("a = 0; b = 1 | c = 2") == ast.Parallel(ast.Sequence(a, b), c)
    assert parse_main("a = 0; { b = 1 | c = 2 }") == ast.Sequence(a, ast.Parallel(b, c))


def test_trailing_semicolon_is_tolerated():
    assert parse_main("x = 1;") == ast.Assign(path("x"), ast.Literal(1))


def test_expression_precedence():
    (assign,) = [parse_main("x = 1 + 2 * 3 == 7 && !done || -n < 0")]
    expr = assign.expr
    assert expr.op == "||"
    conjunction = expr.left
    assert conjunction.op == "&&"
    assert conjunction.left == ast.BinaryOp(
        "==", ast.BinaryOp("+", ast.Literal(1), ast.BinaryOp("*", ast.Literal(2), ast.Literal(3))), ast.Literal(7)
    )
    assert conjunction.right == ast.UnaryOp("!", path("done"))
    assert expr.right == ast.BinaryOp("<", ast.UnaryOp("-", path("n")), ast.Literal(0))


def test_negative_literals_fold():
    assert parse_main("x = -3").expr == ast.Literal(-3)
    assert parse_main("x = -(3)").expr == ast.UnaryOp("-", ast.Literal(3))
    assert parse_main("x = 1 - -2.5").expr == ast.BinaryOp("-", ast.Literal(1), ast.Literal(-2.5))


def test_int64_min_literal():
    assert parse_main("x = -9223372036854775808").expr == ast.Literal(-(2 ** 63))
    assert parse_main("x = 1 - -9223372036854775808").expr.right == ast.Literal(-(2 ** 63))
    for source in ("x = 9223372036854775808", "x = -(9223372036854775808)", "x = a[9223372036854775808]"):
        with pytest.raises(ParseError) as info:
            parse_main(source)
        assert info.value.found == "9223372036854775808"


def test_paths_with_index_and_size():
    assign = parse_main("cart.item[#cart.item] = req.id")
    (cart, item) = assign.path.segments
    assert item.name == "item"
    assert item.index == ast.SizeOf(path("cart", "item"))
    assert assign.expr == path("req", "id")


def test_communication_statements():
    notify = parse_main("log@Audit(entry)")
    assert notify == ast.Notify("Audit", "log", path("entry"))
    solicit = parse_main("getPrice@Customers(query)(price)")
    assert solicit == ast.SolicitResponse("Customers", "getPrice", path("query"), path("price"))
    assert parse_main("ping@Out()").request is None


def test_rebind_sleep_undef():
    assert parse_main('rebind Customers "local://b" "sodep-lite"') == ast.Rebind(
        "Customers", ast.Literal("local://b"), ast.Literal("sodep-lite")
    )
    assert parse_main("sleep(50)") == ast.Sleep(ast.Literal(50))
    assert parse_main("undef(cart.item[0])") == ast.Undef(
        ast.PathExpr((ast.PathSegment("cart"), ast.PathSegment("item", ast.Literal(0))))
    )


def test_input_choice_bodies_inside_or_after_brackets():
    inside = parse_main("[ a(x) { y = 1 } ] [ b()() ]")
    after = parse_main("[ a(x) ] { y = 1 } [ b()() ]")
    assert inside == after
    assert [type(b) for b in inside.branches] == [ast.OneWayBranch, ast.RequestResponseBranch]
    with pytest.raises(ParseError):
        parse_main("[ a(x) { y = 1 } ] { z = 2 }")


def test_if_else_chain_and_while():
    node = parse_main("if (a) { x = 1 } else if (b) { x = 2 } else { x = 3 }")
    assert isinstance(node.otherwise, ast.If)
    assert node.otherwise.otherwise == ast.Assign(path("x"), ast.Literal(3))
    loop = parse_main("while (i < 3) { i = i + 1 }")
    assert isinstance(loop, ast.While)


def test_cset_and_execution():
    program = parse_source("""
        cset { sid: ping.sid, push.header.sid[1]  user: ping.user }
        execution { sequential }
        main { nil }
    """)
    assert [d.variable for d in program.csets] == ["sid", "user"]
    assert program.csets[0].aliases[1].path == Path.of("header", ("sid", 1))
    assert program.execution == ast.ExecutionMode.SEQUENTIAL


def test_whitespace_and_comments_do_not_change_the_ast(services_dir):
    source = (services_dir / "shop.ml.svc").read_text()
    reflowed = "\n\n".join("/* c */ " + line.strip() for line in source.splitlines())
    assert parse_source(source) == parse_source(reflowed)


def test_missing_main():
    with pytest.raises(ParseError) as info:
        parse_source("type t: int")
    assert "main" in info.value.expected
    assert info.value.found == "end of input"


def test_error_reports_expected_and_found():
    with pytest.raises(ParseError) as info:
        parse_source("main { x = }", "bad.ml.svc")
    error = info.value
    assert error.expected == ("expression",)
    assert error.found == "'}'"
    assert str(error.span) == "bad.ml.svc:1:12"


def test_truncated_sources_fail_within_bounds(services_dir):
    source = (services_dir / "shop.ml.svc").read_text()
    line_count = source.count("\n") + 1
    for cut in range(0, len(source), 37):
        text = source[:cut]
        try:
            parse_source(text)
        except (LexError, ParseError) as e:
            assert 1 <= e.span.start_line <= line_count
            assert e.span.start_col >= 1
