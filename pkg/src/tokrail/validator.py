"""Full-output contract validation.

This is a standalone recursive-descent parser over bytes, written without the
stage machine so the two implementations can check each other. Positions in
diagnostics are byte offsets. Semantic problems (wrong type, wrong order,
missing keys) are collected and parsing continues; syntax errors stop at the
first unparseable point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .contract import ContractSpec

CODES = ("parse_error", "missing_key", "wrong_type", "wrong_order", "extra_prefix", "extra_suffix")

_WS = frozenset(b" \t\n\r")
_HEX = frozenset(b"0123456789abcdefABCDEF")
_ESCAPES = frozenset(b'"\\/bfnrt')
NUMBER_CAP = 64


@dataclass(frozen=True)
class Diagnostic:
    code: str
    position: int
    message: str


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.diagnostics

    def add(self, code: str, position: int, message: str) -> None:
        assert code in CODES
        self.diagnostics.append(Diagnostic(code, position, message))

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "diagnostics": [
                {"code": d.code, "position": d.position, "message": d.message}
                for d in self.diagnostics
            ],
        }


class _Halt(Exception):
    """Unrecoverable syntax failure; diagnostics already recorded."""


class _Parser:
    def __init__(self, data: bytes, spec: ContractSpec, report: ValidationReport):
        self.data = data
        self.spec = spec
        self.report = report
        self.pos = 0

    # -- low-level helpers ---------------------------------------------------

    def peek(self) -> int:
        if self.pos >= len(self.data):
            return -1
        return self.data[self.pos]

    def take(self) -> int:
        b = self.peek()
        self.pos += 1
        return b

    def fail(self, message: str, code: str = "parse_error") -> None:
        self.report.add(code, self.pos, message)
        raise _Halt

    def skip_ws(self, structural: bool = True) -> None:
        if not (structural and self.spec.allow_whitespace):
            return
        while self.peek() in _WS:
            self.pos += 1

    def expect(self, byte: bytes, what: str) -> None:
        if self.peek() != byte[0]:
            self.fail(f"expected {what} at byte {self.pos}")
        self.pos += 1

    # -- grammar -------------------------------------------------------------

    def parse_string_raw(self) -> bytes:
        """Quoted JSON string; returns the raw (still escaped) content bytes."""
        start = self.pos
        self.expect(b'"', "'\"'")
        while True:
            b = self.take()
            if b == -1:
                self.fail("unterminated string")
            if b == 0x22:
                return self.data[start + 1 : self.pos - 1]
            if b == 0x5C:
                e = self.take()
                if e in _ESCAPES:
                    continue
                if e == 0x75:  # \uXXXX
                    for _ in range(4):
                        if self.take() not in _HEX:
                            self.fail("bad unicode escape")
                    continue
                self.fail(f"bad escape character 0x{e:02x}")
            if b == 0x0A and self.spec.permit_raw_newlines:
                continue
            if b < 0x20:
                self.fail(f"raw control byte 0x{b:02x} in string")

    def parse_number_raw(self) -> bytes:
        start = self.pos
        if self.peek() == 0x2D:
            self.pos += 1
        b = self.peek()
        if b == 0x30:
            self.pos += 1
        elif 0x31 <= b <= 0x39:
            while 0x30 <= self.peek() <= 0x39:
                self.pos += 1
        else:
            self.fail("expected digit in number")
        if self.peek() == 0x2E:
            self.pos += 1
            if not 0x30 <= self.peek() <= 0x39:
                self.fail("expected digit after decimal point")
            while 0x30 <= self.peek() <= 0x39:
                self.pos += 1
        if self.peek() in (0x65, 0x45):
            self.pos += 1
            if self.peek() in (0x2B, 0x2D):
                self.pos += 1
            if not 0x30 <= self.peek() <= 0x39:
                self.fail("expected digit in exponent")
            while 0x30 <= self.peek() <= 0x39:
                self.pos += 1
        raw = self.data[start : self.pos]
        if len(raw) > NUMBER_CAP:
            self.report.add("parse_error", start, f"number longer than {NUMBER_CAP} characters")
            raise _Halt
        return raw

    def parse_literal(self) -> bytes:
        for lit in (b"true", b"false", b"null"):
            if self.data[self.pos : self.pos + len(lit)] == lit:
                self.pos += len(lit)
                return lit
        self.fail("expected a JSON value")
        return b""  # unreachable

    def parse_any_value(self) -> None:
        """Parse and discard a scalar value (used after an unknown key)."""
        b = self.peek()
        if b == 0x22:
            self.parse_string_raw()
        elif b == 0x2D or 0x30 <= b <= 0x39:
            self.parse_number_raw()
        elif b in (0x74, 0x66, 0x6E):
            self.parse_literal()
        else:
            self.fail("expected a JSON value")

    def parse_typed_value(self, key_index: int) -> None:
        key = self.spec.keys[key_index]
        start = self.pos
        b = self.peek()
        if key.value_type in ("string", "const"):
            if b != 0x22:
                self.report.add("wrong_type", start, f"key {key.name!r} expects a string value")
                self.parse_any_value()
                return
            raw = self.parse_string_raw()
            if key.value_type == "const" and raw != (key.const_value or "").encode("utf-8"):
                self.report.add(
                    "wrong_type", start,
                    f"key {key.name!r} expects the constant {key.const_value!r}",
                )
            return
        if key.value_type in ("integer", "number"):
            if not (b == 0x2D or 0x30 <= b <= 0x39):
                self.report.add("wrong_type", start, f"key {key.name!r} expects a number value")
                self.parse_any_value()
                return
            raw = self.parse_number_raw()
            if key.value_type == "integer" and any(c in raw for c in (0x2E, 0x65, 0x45)):
                self.report.add("wrong_type", start, f"key {key.name!r} expects an integer value")
            return
        if key.value_type == "boolean":
            if b not in (0x74, 0x66):
                self.report.add("wrong_type", start, f"key {key.name!r} expects true or false")
                self.parse_any_value()
                return
            lit = self.parse_literal()
            if lit not in (b"true", b"false"):
                self.report.add("wrong_type", start, f"key {key.name!r} expects true or false")
            return
        raise AssertionError(key.value_type)

    def parse_object(self) -> None:
        spec = self.spec
        names = [k.name.encode("utf-8") for k in spec.keys]
        seen: list[int] = []
        self.expect(b"{", "'{'")
        self.skip_ws()
        if self.peek() == 0x7D and not spec.keys:
            self.pos += 1
            return
        first = True
        while True:
            if not first:
                self.skip_ws()
                b = self.take()
                if b == 0x7D:
                    break
                if b != 0x2C:
                    self.fail("expected ',' or '}' after value")
                self.skip_ws()
            else:
                first = False
                self.skip_ws()
                if self.peek() == 0x7D:
                    self.pos += 1
                    break
            key_pos = self.pos
            raw_key = self.parse_string_raw()
            ki = names.index(raw_key) if raw_key in names else -1
            if ki < 0 or ki in seen:
                label = "duplicate" if ki in seen and ki >= 0 else "unexpected"
                code = "wrong_order" if spec.ordered else "wrong_type"
                self.report.add(code, key_pos, f"{label} key {raw_key.decode('utf-8', 'replace')!r}")
            elif spec.ordered and ki != len(seen):
                self.report.add(
                    "wrong_order", key_pos,
                    f"expected key {spec.keys[len(seen)].name!r}, found {spec.keys[ki].name!r}",
                )
            self.skip_ws()
            self.expect(b":", "':' after key")
            self.skip_ws()
            if ki >= 0 and ki not in seen:
                self.parse_typed_value(ki)
                seen.append(ki)
            else:
                self.parse_any_value()
        for i, k in enumerate(spec.keys):
            if i not in seen:
                self.report.add("missing_key", self.pos, f"required key {k.name!r} missing")


def validate(text: bytes | str, spec: ContractSpec) -> ValidationReport:
    """Check a complete output against the contract; never raises."""
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    report = ValidationReport()
    parser = _Parser(data, spec, report)
    try:
        start = _find_object_start(parser, report)
        if start is None:
            return report
        parser.pos = start
        parser.parse_object()
        _check_suffix(parser, report)
    except _Halt:
        pass
    return report


def _find_object_start(parser: _Parser, report: ValidationReport) -> int | None:
    data, spec = parser.data, parser.spec
    brace = data.find(b"{")
    if brace < 0:
        report.add("parse_error", 0, "no object start found")
        return None
    if spec.allow_preamble:
        return brace
    i = 0
    if spec.allow_whitespace:
        while i < len(data) and data[i] in _WS:
            i += 1
    if i != brace:
        report.add("extra_prefix", i, "output does not start with the object")
    return brace


def _check_suffix(parser: _Parser, report: ValidationReport) -> None:
    data, spec = parser.data, parser.spec
    i = parser.pos
    if spec.allow_whitespace:
        while i < len(data) and data[i] in _WS:
            i += 1
    if i != len(data):
        report.add("extra_suffix", i, "trailing content after the object")
