"""Tests for the JSON mapping of value trees"""

import random

import pytest

from microlang.lang import parse_source
from microlang.net import decode_json, encode_json
from microlang.utils.exceptions import DecodeError, EncodeError
from microlang.values import MAX_DEPTH, BasicType, Kind, TypeRef, ValueNode

from generators import random_tree

GOLDEN = [
    (ValueNode(), "{}"),
    (ValueNode(3), '{"$":3}'),
    (ValueNode(-5), '{"$":-5}'),
    (ValueNode(2 ** 63 - 1), '{"$":9223372036854775807}'),
    (ValueNode(3.14), '{"$":3.14}'),
    (ValueNode(1.0), '{"$":1.0}'),
    (ValueNode(True), '{"$":true}'),
    (ValueNode(False), '{"$":false}'),
    (ValueNode(""), '{"$":""}'),
    (ValueNode("é"), '{"$":"é"}'),
    (ValueNode('say "hi"'), '{"$":"say \\"hi\\""}'),
    (ValueNode().add("id", ValueNode("p1")), '{"id":["p1"]}'),
    (ValueNode().add("id", ValueNode("p1")).add("id", ValueNode("p2")), '{"id":["p1","p2"]}'),
    (ValueNode().add("x", ValueNode()), '{"x":[{}]}'),
    (ValueNode(1).add("a", ValueNode(2)), '{"$":1,"a":[2]}'),
    (ValueNode().add("a", ValueNode(2).add("b", ValueNode(False))), '{"a":[{"$":2,"b":[false]}]}'),
    (ValueNode().add("cart", ValueNode().add("item", ValueNode("p1"))), '{"cart":[{"item":["p1"]}]}'),
    (ValueNode().add("b", ValueNode(1)).add("a", ValueNode(2)), '{"b":[1],"a":[2]}'),
    (ValueNode().add("total", ValueNode(2.5)).add("paid", ValueNode(True)), '{"total":[2.5],"paid":[true]}'),
    (ValueNode().add("n", ValueNode().add("m", ValueNode().add("k", ValueNode(0)))), '{"n":[{"m":[{"k":[0]}]}]}'),
]


@pytest.mark.parametrize("value,text", GOLDEN)
def test_golden_encodings(value, text):
    assert encode_json(value) == text
    assert decode_json(text) == value


def test_random_trees_survive_the_mapping():
    rng = random.Random(42)
    for _ in range(1000):
        value = random_tree(rng)
        assert decode_json(encode_json(value)) == value


def test_scalar_in_place_of_singleton_array():
    assert decode_json('{"id":"p1"}') == decode_json('{"id":["p1"]}')


def test_bare_top_level_scalars():
    assert decode_json('"hi"') == ValueNode("hi")
    assert decode_json("5") == ValueNode(5)
    assert decode_json("null") == ValueNode()


def test_expected_double_coerces_integers():
    value = decode_json('{"$":5}', BasicType(Kind.DOUBLE))
    assert isinstance(value.root, float) and value.root == 5.0
    assert decode_json('{"$":5}').root == 5
    assert isinstance(decode_json('{"$":5}').root, int)


def test_type_references_steer_nested_decoding(services_dir):
    types = parse_source((services_dir / "shop.ml.svc").read_text()).type_env()
    receipt = decode_json('{"total":5,"items":[2],"paid":[true]}', TypeRef("receipt"), types)
    assert isinstance(receipt.child("total").root, float)
    assert receipt.child("items").root == 2
    assert isinstance(receipt.child("items").root, int)
    assert receipt.child("paid").root is True


@pytest.mark.parametrize("text,reason", [
    ("not json", "invalid JSON"),
    ('{"a":[[1]]}', "arrays are only allowed as child vectors"),
    ('{"$":{"x":1}}', "root value must be a scalar"),
    ('{"$":NaN}', "non-finite number NaN"),
    ('{"$":1e400}', "non-finite number"),
    ('{"$":99999999999999999999}', "integer out of 64-bit range"),
])
def test_decode_errors(text, reason):
    with pytest.raises(DecodeError) as info:
        decode_json(text)
    assert info.value.reason.startswith(reason)


def test_decode_error_paths():
    with pytest.raises(DecodeError) as info:
        decode_json('{"a":[1,{"b":[[2]]}]}')
    assert info.value.path == "a[1].b"


def nested(depth: int) -> ValueNode:
    node = ValueNode(1)
    for _ in range(depth):
        node = ValueNode().add("c", node)
    return node


def test_nesting_limit_is_shared_by_encoder_and_decoder():
    value = nested(MAX_DEPTH)
    assert decode_json(encode_json(value)) == value
    with pytest.raises(EncodeError):
        encode_json(nested(MAX_DEPTH + 1))
    with pytest.raises(DecodeError) as info:
        decode_json('{"c":' * (MAX_DEPTH + 1) + "1" + "}" * (MAX_DEPTH + 1))
    assert info.value.reason.startswith("value nested deeper")
    assert info.value.path == ".".join(["c"] * (MAX_DEPTH + 1))


def test_runaway_nesting_is_a_decode_error():
    with pytest.raises(DecodeError) as info:
        decode_json('{"c":' * 3000 + "1" + "}" * 3000)
    assert info.value.reason.startswith("value nested deeper")
