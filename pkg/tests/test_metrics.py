import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelgrowth.metrics import (
    PARSE_FAILED,
    ModelDocument,
    ModelParseError,
    Section,
    count_blocks,
    count_loc,
    format_model,
    measure,
    parse_model,
)


def test_loc_basic_and_line_endings():
    assert count_loc("") == 0
    assert count_loc("a\n") == 1
    assert count_loc("a") == 1
    assert count_loc("a\nb") == 2
    assert count_loc("a\r\nb\r\n") == 2
    assert count_loc("a\rb\n") == 1
    assert count_loc("\n\n\n") == 3


_line = st.text(alphabet=st.characters(blacklist_characters="\n\r"), max_size=8)


@given(st.lists(_line, max_size=20), _line.filter(bool))
def test_loc_appending_a_line_adds_one(lines, last):
    s = "".join(line + "\n" for line in lines) + last
    assert count_loc(s) == len(lines) + 1
    assert count_loc(s + "\nx") == count_loc(s) + 1


def test_parse_single_section():
    doc = parse_model("Model {\n}\n")
    assert [s.name for s in doc.sections] == ["Model"]
    assert doc.sections[0].children == []


def test_parse_nested_one_line():
    doc = parse_model("Model { System { Block { } Block { } } }")
    model = doc.sections[0]
    system = model.children[0]
    assert system.name == "System"
    assert [c.name for c in system.children] == ["Block", "Block"]
    assert count_blocks(doc) == 2


def test_count_blocks_nested_subsystems():
    assert count_blocks(parse_model("System{ Block{} System{ Block{} Block{} } }")) == 3
    assert count_blocks(parse_model("Model {\n  Name \"x\"\n}\n")) == 0


def test_attributes_kept_verbatim():
    doc = parse_model('Model {\n   Name   "a { b }"\n  Block {\n    Gain 3\n  }\n}\n')
    model = doc.sections[0]
    assert model.attributes == ['Name   "a { b }"']
    assert model.children[0].attributes == ["Gain 3"]


@pytest.mark.parametrize("text, line, col", [
    ("{\n}\n", 1, 1),
    ("Model {\n}\n}\n", 3, 1),
    ("Model {\n  Block {\n}\n", 4, 1),
    ("x = 1\n", 1, 1),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ModelParseError) as exc:
        parse_model(text)
    assert (exc.value.line, exc.value.column) == (line, col)


def test_measure_flags_parse_failure():
    assert measure("Model {\n") == measure("Model {\n").__class__(1, PARSE_FAILED)
    m = measure("")
    assert (m.loc, m.block_count) == (0, 0)


_names = st.sampled_from(["Block", "System", "Line", "Port", "Mask"])
_attrs = st.lists(st.sampled_from(['Name "n"', "Gain 2", "Position [1, 2]", 'Tag "{x}"']), max_size=3)


def _sections(depth):
    if depth == 0:
        return st.builds(Section, _names, _attrs, st.just([]))
    return st.builds(Section, _names, _attrs, st.lists(_sections(depth - 1), max_size=3))


@given(st.lists(_sections(3), min_size=1, max_size=3))
def test_print_parse_roundtrip(sections):
    doc = ModelDocument(sections)
    text = format_model(doc)
    again = parse_model(text)
    assert again == doc
    assert count_blocks(again) == count_blocks(doc)
    assert count_loc(text) == len(text.splitlines())


@given(st.lists(st.integers(0, 4), min_size=0, max_size=25))
def test_count_blocks_matches_generator(depths):
    # place one Block at each requested depth inside a chain of Systems
    lines = ["Model {"]
    for d in depths:
        lines += ["System {"] * d + ["Block {", "}"] + ["}"] * d
    lines.append("}")
    assert count_blocks(parse_model("\n".join(lines))) == len(depths)
