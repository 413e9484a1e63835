"""Size metrics for textual model files: physical lines and block count.

Model files use a small brace grammar modelled on Simulink ``.mdl`` text::

    Model {
      Name "plant"
      System {
        Block {
          BlockType Gain
        }
      }
    }

``Name {`` opens a section, ``}`` closes one and every other non-blank
text inside a section is an attribute line. Braces inside double-quoted
strings are ignored. Several sections may share one physical line
(``System{ Block{} }``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

BLOCK = "Block"
PARSE_FAILED = -1

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.:\-]*$")
_PIECE = re.compile(r'"(?:[^"\\]|\\.)*"?|[{}]|[^"{}]+')


class ModelParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass
class Section:
    name: str
    attributes: list[str] = field(default_factory=list)
    children: list["Section"] = field(default_factory=list)


@dataclass
class ModelDocument:
    sections: list[Section] = field(default_factory=list)


@dataclass(frozen=True)
class SizeMeasurement:
    loc: int
    block_count: int


def _lines(content: str) -> list[str]:
    text = content.replace("\r\n", "\n")
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


def count_loc(content: str) -> int:
    """Physical line count; an unterminated last line still counts.

    ``\\r\\n`` pairs count as one terminator, a lone ``\\r`` is content.
    """
    return len(_lines(content))


def _split_line(line: str):
    """Yield (kind, text, column) with kind in {'{', '}', 'text'}."""
    buf = []
    buf_col = None
    for m in _PIECE.finditer(line):
        tok = m.group(0)
        if tok in ("{", "}"):
            if buf:
                yield "text", "".join(buf), buf_col
                buf, buf_col = [], None
            yield tok, tok, m.start() + 1
        else:
            if buf_col is None:
                buf_col = m.start() + 1
            buf.append(tok)
    if buf:
        yield "text", "".join(buf), buf_col


def parse_model(content: str) -> ModelDocument:
    doc = ModelDocument()
    stack: list[Section] = []
    for lineno, line in enumerate(_lines(content), start=1):
        pieces = list(_split_line(line))
        for k, (kind, text, col) in enumerate(pieces):
            if kind == "text":
                nxt = pieces[k + 1][0] if k + 1 < len(pieces) else None
                if nxt == "{":
                    continue
                attr = text.strip()
                if not attr:
                    continue
                if not stack:
                    raise ModelParseError(f"attribute {attr!r} outside any section", lineno, col)
                stack[-1].attributes.append(attr)
            elif kind == "{":
                prev = pieces[k - 1] if k > 0 else None
                if prev is None or prev[0] != "text" or not prev[1].strip():
                    raise ModelParseError("missing section name before '{'", lineno, col)
                head = prev[1].strip()
                words = head.rsplit(None, 1)
                name = words[-1]
                if not _NAME.match(name):
                    raise ModelParseError(f"invalid section name {name!r}", lineno, col)
                if len(words) == 2:
                    if not stack:
                        raise ModelParseError(f"attribute {words[0]!r} outside any section", lineno, prev[2])
                    stack[-1].attributes.append(words[0].strip())
                section = Section(name)
                (stack[-1].children if stack else doc.sections).append(section)
                stack.append(section)
            else:
                if not stack:
                    raise ModelParseError("unbalanced '}'", lineno, col)
                stack.pop()
    if stack:
        raise ModelParseError(f"unclosed section {stack[-1].name!r}", len(_lines(content)) + 1, 1)
    return doc


def format_model(doc: ModelDocument, indent: str = "  ") -> str:
    """Print a document in canonical form; attributes precede children."""
    out: list[str] = []
    todo: list[tuple[Section | None, int]] = [(s, 0) for s in reversed(doc.sections)]
    while todo:
        section, depth = todo.pop()
        if section is None:
            out.append(indent * depth + "}")
            continue
        pad = indent * depth
        out.append(f"{pad}{section.name} {{")
        out.extend(pad + indent + a for a in section.attributes)
        todo.append((None, depth))
        todo.extend((c, depth + 1) for c in reversed(section.children))
    return "".join(line + "\n" for line in out)


def iter_sections(doc: ModelDocument):
    todo = list(reversed(doc.sections))
    while todo:
        s = todo.pop()
        yield s
        todo.extend(reversed(s.children))


def count_blocks(doc: ModelDocument) -> int:
    """Sections named ``Block`` at any depth, masked subsystems included."""
    return sum(1 for s in iter_sections(doc) if s.name == BLOCK)


def measure(content: str) -> SizeMeasurement:
    """LOC and block count; a parse failure yields ``PARSE_FAILED`` blocks."""
    try:
        blocks = count_blocks(parse_model(content))
    except ModelParseError:
        blocks = PARSE_FAILED
    return SizeMeasurement(count_loc(content), blocks)
