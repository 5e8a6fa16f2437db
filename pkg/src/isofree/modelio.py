"""Model file formats: compact hex (one encoding per line) and interpretations.

An interpretation block, per model::

    interpretation( 2, [number=1], [
        function(*(_,_), [0,1,1,0]),
        relation(<(_,_), [1,0,0,1]) ]).

Tables are row-major; relations use 0/1 for False/True.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, TextIO

from .cube import Cube, EncodingError, decode, encode
from .ground import UNASSIGNED
from .syntax import Signature


class ModelFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def to_hex(cube: Cube) -> str:
    return encode(cube).hex()


def from_hex(text: str, signature: Signature) -> Cube:
    try:
        data = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise EncodingError(f"not a hex string: {exc}") from None
    return decode(data, signature)


def write_compact(cubes: Iterable[Cube], out: TextIO) -> int:
    count = 0
    for cube in cubes:
        out.write(to_hex(cube) + "\n")
        count += 1
    return count


def read_compact(lines: Iterable[str], signature: Signature) -> Iterator[Cube]:
    """Decode one model per non-blank line; errors carry the line number."""
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield from_hex(line, signature)
        except EncodingError as exc:
            raise ModelFormatError(str(exc), lineno) from None


def _pattern(name: str, arity: int) -> str:
    if arity == 0:
        return name
    return f"{name}({','.join('_' * arity)})"


def format_interpretation(cube: Cube, number: int) -> str:
    layout = cube.layout
    entries = []
    for s, (name, arity) in enumerate(layout.symbols):
        kind = "relation" if layout.is_relation(s) else "function"
        table = cube.values[layout.symbol_range(s).start:layout.symbol_range(s).stop]
        if UNASSIGNED in table:
            raise ValueError("only total models have an interpretation")
        entries.append(f"    {kind}({_pattern(name, arity)}, [{','.join(map(str, table))}])")
    return (f"interpretation( {cube.n}, [number={number}], [\n"
            + ",\n".join(entries) + " ]).\n")


def write_interpretations(cubes: Iterable[Cube], out: TextIO, start: int = 1) -> int:
    count = 0
    for i, cube in enumerate(cubes, start):
        out.write(format_interpretation(cube, i))
        count += 1
    return count


_HEADER_RE = re.compile(r"interpretation\(\s*(\d+)\s*,\s*\[number\s*=\s*(\d+)[^\]]*\]\s*,\s*\[")
_ENTRY_RE = re.compile(r"(function|relation)\(\s*(.+?)\s*,\s*\[([^\]]*)\]\s*\)")


def read_interpretations(text: str, signature: Signature) -> Iterator[Cube]:
    """Parse interpretation blocks written by ``write_interpretations``."""
    for match in _HEADER_RE.finditer(text):
        line = text.count("\n", 0, match.start()) + 1
        n = int(match.group(1))
        end = text.find("]).", match.end())
        if end < 0:
            raise ModelFormatError("unterminated interpretation", line)
        tables: dict[str, list[int]] = {}
        for entry in _ENTRY_RE.finditer(text, match.end(), end + 1):
            pattern = entry.group(2)
            name = pattern.split("(")[0] if pattern.endswith(")") else pattern
            tables[name] = [int(x) for x in entry.group(3).split(",") if x.strip()]
        values: list[int] = []
        for name, _ in signature.symbols:
            if name not in tables:
                raise ModelFormatError(f"symbol {name} missing from interpretation", line)
            values.extend(tables[name])
        cube = Cube(signature, n, values)
        try:
            cube.validate()
        except ValueError as exc:
            raise ModelFormatError(str(exc), line) from None
        yield cube
