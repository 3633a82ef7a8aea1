import pytest

from negcheck import fixtures
from negcheck.data import DataNegotiation
from negcheck.model import ValidationError
from negcheck.ngt import NgtSyntaxError, emit_ngt, parse_ngt, read_ngt

HEADER = "negotiation tiny\nprocesses p\ninit a ; fin b\n"


@pytest.mark.parametrize("name", fixtures.FILES)
def test_round_trip(name):
    neg = fixtures.load(name)
    again = parse_ngt(emit_ngt(neg))
    assert again == neg
    assert emit_ngt(again) == emit_ngt(neg)


def test_read_from_path_matches_text():
    assert read_ngt(fixtures.path("FIG1L")) == fixtures.load("FIG1L")


def test_duplicate_node_reports_its_line():
    text = HEADER + "node a { p }\nnode b { p }\nnode a { p }\n"
    with pytest.raises(NgtSyntaxError) as err:
        parse_ngt(text)
    assert err.value.line == 6
    assert "line 6" in str(err.value)


@pytest.mark.parametrize("line, message", [
    ("bogus a b", "unknown statement"),
    ("node c { p", "}"),
    ("arc a r p n1", "->"),
    ("node $ { p }", "unexpected character"),
])
def test_syntax_errors_carry_line_numbers(line, message):
    with pytest.raises(NgtSyntaxError, match=message) as err:
        parse_ngt(HEADER + line + "\n")
    assert err.value.line == 4


def test_validation_errors_are_forwarded():
    text = HEADER + "node a { p }\nnode b { p }\nout a : r\n"
    with pytest.raises(ValidationError, match=r"delta undefined for \(a,r,p\)"):
        parse_ngt(text)


def test_comments_and_semicolons():
    text = ("# header\nnegotiation t ; processes p  # trailing\ninit a ; fin b\n"
            "node a { p } ; node b { p }\nout a : r ; arc a r p -> b\n")
    neg = parse_ngt(text)
    assert neg.nodes == ("a", "b")
    assert neg.delta[("a", "r", "p")] == ("b",)


def test_hyper_arc_targets():
    assert fixtures.load("FIG1M").delta[("n0", "a", "p1")] == ("n2", "n3")


def test_data1_labels():
    dneg = fixtures.load("DATA1")
    assert isinstance(dneg, DataNegotiation)
    assert dneg.variables == ("x1", "x2")
    assert dneg.ops("n4", "b") == {("read", "x2"), ("dealloc", "x1")}
    assert dneg.ops("n5", "a") == {("dealloc", "x2")}
    assert dneg.final_result == "a"
    assert dneg.base == fixtures.load("FIG1L")


def test_label_errors():
    text = HEADER + "node a { p }\nnode b { p }\nout a : r\narc a r p -> b\nvariables x\n"
    with pytest.raises(NgtSyntaxError, match="line 9"):
        parse_ngt(text + "label a r : frobnicate x\n")
    with pytest.raises(NgtSyntaxError, match="line 9"):
        parse_ngt(text + "label a r : read x write x\n")
