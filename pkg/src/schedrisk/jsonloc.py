"""Minimal JSON reader that keeps line/column positions for every value.

The stdlib decoder discards positions once parsing succeeds, which makes it
impossible to point a diagnostic at an unknown key or a mistyped value. This
reader accepts exactly RFC 8259 JSON and produces a small node tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

MAX_DEPTH = 64

_NUMBER = re.compile(r"-?(?:0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?")
_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t"}


class JSONSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column


@dataclass
class Node:
    kind: str  # object, array, string, number, bool, null
    value: Any
    line: int
    column: int
    # object members as (key node, value node), in document order
    members: list = field(default_factory=list)
    items: list = field(default_factory=list)

    def plain(self) -> Any:
        if self.kind == "object":
            return {k.value: v.plain() for k, v in self.members}
        if self.kind == "array":
            return [n.plain() for n in self.items]
        return self.value


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.line_start = 0

    def _where(self, pos: Optional[int] = None) -> tuple[int, int]:
        if pos is None or pos == self.pos:
            return self.line, self.pos - self.line_start + 1
        line = self.text.count("\n", 0, pos) + 1
        start = self.text.rfind("\n", 0, pos) + 1
        return line, pos - start + 1

    def fail(self, message: str, pos: Optional[int] = None):
        line, col = self._where(pos)
        raise JSONSyntaxError(message, line, col)

    def skip_ws(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            c = text[self.pos]
            if c == "\n":
                self.pos += 1
                self.line += 1
                self.line_start = self.pos
            elif c in " \t\r":
                self.pos += 1
            else:
                break

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_document(self) -> Node:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.fail("empty document")
        node = self.parse_value(0)
        self.skip_ws()
        if self.pos < len(self.text):
            self.fail(f"unexpected trailing content {self.text[self.pos]!r}")
        return node

    def parse_value(self, depth: int) -> Node:
        if depth > MAX_DEPTH:
            self.fail(f"nesting deeper than {MAX_DEPTH} levels")
        c = self.peek()
        line, col = self._where()
        if c == "{":
            return self.parse_object(depth, line, col)
        if c == "[":
            return self.parse_array(depth, line, col)
        if c == '"':
            return Node("string", self.parse_string(), line, col)
        for word, kind, value in (("true", "bool", True), ("false", "bool", False), ("null", "null", None)):
            if self.text.startswith(word, self.pos):
                self.pos += len(word)
                return Node(kind, value, line, col)
        m = _NUMBER.match(self.text, self.pos)
        if m and m.end() > self.pos:
            self.pos = m.end()
            raw = m.group(0)
            value = float(raw) if (m.group(1) or m.group(2)) else int(raw)
            return Node("number", value, line, col)
        if not c:
            self.fail("unexpected end of document")
        self.fail(f"unexpected character {c!r}")

    def parse_object(self, depth: int, line: int, col: int) -> Node:
        node = Node("object", None, line, col)
        self.pos += 1
        self.skip_ws()
        if self.peek() == "}":
            self.pos += 1
            return node
        while True:
            self.skip_ws()
            if self.peek() != '"':
                self.fail("expected a string key")
            kline, kcol = self._where()
            key = Node("string", self.parse_string(), kline, kcol)
            self.skip_ws()
            if self.peek() != ":":
                self.fail(f"expected ':' after key {key.value!r}")
            self.pos += 1
            self.skip_ws()
            value = self.parse_value(depth + 1)
            node.members.append((key, value))
            if self._separator("}"):
                return node

    def parse_array(self, depth: int, line: int, col: int) -> Node:
        node = Node("array", None, line, col)
        self.pos += 1
        self.skip_ws()
        if self.peek() == "]":
            self.pos += 1
            return node
        while True:
            self.skip_ws()
            node.items.append(self.parse_value(depth + 1))
            if self._separator("]"):
                return node

    def _separator(self, closer: str) -> bool:
        """Consume ',' (False) or the closing bracket (True) after a member."""
        end_of_value = self.pos
        self.skip_ws()
        c = self.peek()
        if c == closer:
            self.pos += 1
            return True
        if c != ",":
            # point at the value missing its separator, not at the next token
            self.fail(f"expected ',' or {closer!r}", end_of_value)
        comma = self.pos
        self.pos += 1
        self.skip_ws()
        if self.peek() == closer:
            self.fail(f"trailing comma before {closer!r}", comma)
        return False

    def parse_string(self) -> str:
        text = self.text
        start = self.pos
        self.pos += 1
        out = []
        while True:
            if self.pos >= len(text):
                self.fail("unterminated string", start)
            c = text[self.pos]
            if c == '"':
                self.pos += 1
                return "".join(out)
            if c == "\\":
                esc = text[self.pos + 1: self.pos + 2]
                if esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                    self.pos += 2
                elif esc == "u":
                    out.append(self._unicode_escape())
                else:
                    self.fail(f"invalid escape \\{esc}")
            elif c < " ":
                self.fail("control character in string")
            else:
                out.append(c)
                self.pos += 1

    def _hex4(self) -> int:
        digits = self.text[self.pos + 2: self.pos + 6]
        if len(digits) != 4 or not all(d in "0123456789abcdefABCDEF" for d in digits):
            self.fail("invalid \\u escape")
        self.pos += 6
        return int(digits, 16)

    def _unicode_escape(self) -> str:
        cp = self._hex4()
        if 0xD800 <= cp < 0xDC00 and self.text.startswith("\\u", self.pos):
            save = self.pos
            low = self._hex4()
            if 0xDC00 <= low < 0xE000:
                return chr(0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00))
            self.pos = save
        if 0xD800 <= cp < 0xE000:
            self.fail("lone surrogate in \\u escape", self.pos - 6)
        return chr(cp)


def loads(text: str) -> Node:
    """Parse ``text`` into a positioned node tree; raises JSONSyntaxError."""
    return _Reader(text).parse_document()
