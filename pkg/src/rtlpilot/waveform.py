"""VCD decoding, tabular waveform views and clock-relative windows."""
from __future__ import annotations

import bisect
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional, Union

from .errors import RtlPilotError, UnknownSignal

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}


class VcdFormatError(RtlPilotError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (at byte {offset})")


class DuplicateIdCode(VcdFormatError):
    pass


class AmbiguousSignal(UnknownSignal):
    def __init__(self, name: str, matches: Sequence[str]):
        self.matches = list(matches)
        self.names = [name]
        self.near_matches = {name: list(matches)}
        Exception.__init__(self, f"signal {name!r} is ambiguous: matches {', '.join(matches)}")


class NoEdges(RtlPilotError):
    pass


@dataclass(frozen=True)
class VarInfo:
    width: int
    id_code: str
    var_type: str = "wire"


@dataclass(frozen=True)
class WaveDb:
    timescale: tuple[int, str]
    signals: dict[str, VarInfo]
    changes: dict[str, tuple[tuple[int, str], ...]]
    end_time: int = 0
    _by_leaf: dict[str, list[str]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        for name in self.signals:
            parts = name.split(".")
            for k in range(len(parts)):
                self._by_leaf.setdefault(".".join(parts[k:]), []).append(name)

    @property
    def tick_seconds(self) -> float:
        mag, unit = self.timescale
        return mag * TIME_UNITS[unit]

    def resolve(self, name: str) -> str:
        """Map a full or dotted-suffix name to the unique hierarchical signal."""
        if name in self.signals:
            return name
        matches = self._by_leaf.get(name, [])
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise AmbiguousSignal(name, sorted(matches))
        raise UnknownSignal([name], [n.split(".")[-1] for n in self.signals] + list(self.signals))

    def try_resolve(self, name: str) -> Optional[str]:
        try:
            return self.resolve(name)
        except UnknownSignal:
            return None

    def value_at(self, name: str, t: int) -> str:
        """Last recorded value at or before t; all-x before the first change."""
        full = self.resolve(name)
        ch = self.changes.get(full, ())
        i = bisect.bisect_right(ch, t, key=lambda c: c[0])
        if i == 0:
            return "x" * self.signals[full].width
        return ch[i - 1][1]

    def scopes(self) -> list[str]:
        out = set()
        for name in self.signals:
            parts = name.split(".")
            for k in range(1, len(parts)):
                out.add(".".join(parts[:k]))
        return sorted(out)


# -- parsing -------------------------------------------------------------------

_WORD = re.compile(rb"\S+")
_TIMESCALE = re.compile(r"^(1|10|100)\s*(s|ms|us|ns|ps|fs)$")


def _words(data: bytes):
    for m in _WORD.finditer(data):
        yield m.group().decode("utf-8", errors="replace"), m.start()


def _normalize(value: str, width: int, offset: int) -> str:
    v = value.lower()
    if any(c not in "01xz" for c in v):
        raise VcdFormatError(f"invalid value {value!r}", offset)
    if len(v) > width:
        raise VcdFormatError(f"value {value!r} is wider than the declared {width} bits", offset)
    if len(v) < width:
        pad = v[0] if v[0] in "xz" else "0"
        v = pad * (width - len(v)) + v
    return v


def parse_vcd(data: Union[bytes, str, BinaryIO, Path]) -> WaveDb:
    if isinstance(data, Path):
        data = data.read_bytes()
    elif isinstance(data, str):
        data = data.encode("utf-8")
    elif not isinstance(data, (bytes, bytearray)):
        data = data.read()
    words = _words(bytes(data))

    timescale = (1, "s")
    scope: list[str] = []
    signals: dict[str, VarInfo] = {}
    id_width: dict[str, int] = {}
    enddefs = False

    def section_body(start_offset: int, keyword: str) -> list[tuple[str, int]]:
        body = []
        for w, off in words:
            if w == "$end":
                return body
            body.append((w, off))
        raise VcdFormatError(f"unterminated {keyword} section", start_offset)

    for w, off in words:
        if w in ("$date", "$version", "$comment"):
            section_body(off, w)
        elif w == "$timescale":
            text = " ".join(x for x, _ in section_body(off, w))
            m = _TIMESCALE.match(text)
            if not m:
                raise VcdFormatError(f"malformed $timescale {text!r}", off)
            timescale = (int(m.group(1)), m.group(2))
        elif w == "$scope":
            body = section_body(off, w)
            if len(body) != 2:
                raise VcdFormatError("malformed $scope", off)
            scope.append(body[1][0])
        elif w == "$upscope":
            section_body(off, w)
            if not scope:
                raise VcdFormatError("$upscope without matching $scope", off)
            scope.pop()
        elif w == "$var":
            body = section_body(off, w)
            if len(body) < 4:
                raise VcdFormatError("malformed $var", off)
            var_type, size, code, ref = (x for x, _ in body[:4])
            if var_type in ("real", "realtime", "shortreal"):
                raise VcdFormatError(f"real-valued variable {ref!r} is not supported", off)
            try:
                width = int(size)
            except ValueError:
                raise VcdFormatError(f"non-integer $var size {size!r}", off) from None
            if width < 1:
                raise VcdFormatError(f"invalid $var size {size!r}", off)
            sel = body[4][0] if len(body) > 4 else ""
            if sel and not re.fullmatch(r"\[\d+:\d+\]", sel):
                ref += sel
            ref = re.sub(r"\[\d+:\d+\]$", "", ref)
            name = ".".join(scope + [ref])
            if code in id_width and id_width[code] != width:
                raise DuplicateIdCode(f"id code {code!r} declared with widths {id_width[code]} and {width}", off)
            prior = signals.get(name)
            if prior is not None and prior.id_code != code:
                raise DuplicateIdCode(f"signal {name!r} declared twice with id codes {prior.id_code!r} and {code!r}", off)
            id_width[code] = width
            signals[name] = VarInfo(width, code, var_type)
        elif w == "$enddefinitions":
            section_body(off, w)
            enddefs = True
            break
        else:
            raise VcdFormatError(f"unexpected token {w!r} in header", off)
    if not enddefs:
        raise VcdFormatError("missing $enddefinitions")
    if scope:
        raise VcdFormatError("unbalanced $scope in header")

    per_id: dict[str, dict[int, str]] = {code: {} for code in id_width}
    now = 0
    end_time = 0
    pending_vector: Optional[tuple[str, int]] = None
    for w, off in words:
        if pending_vector is not None:
            value, voff = pending_vector
            pending_vector = None
            if w not in per_id:
                raise VcdFormatError(f"value change for undeclared id code {w!r}", off)
            per_id[w][now] = _normalize(value, id_width[w], voff)
            continue
        c = w[0]
        if c == "#":
            try:
                t = int(w[1:])
            except ValueError:
                raise VcdFormatError(f"malformed timestamp {w!r}", off) from None
            if t < now:
                raise VcdFormatError(f"timestamp #{t} goes backwards from #{now}", off)
            now = t
            end_time = max(end_time, t)
        elif c in "bB":
            pending_vector = (w[1:], off)
        elif c in "rR":
            raise VcdFormatError("real-valued changes are not supported", off)
        elif c in "01xXzZ":
            code = w[1:]
            if code not in per_id:
                raise VcdFormatError(f"value change for undeclared id code {code!r}", off)
            per_id[code][now] = _normalize(c, id_width[code], off)
        elif w in ("$dumpvars", "$dumpall", "$dumpon", "$dumpoff", "$end"):
            continue
        elif w == "$comment":
            section_body(off, w)
        else:
            raise VcdFormatError(f"unexpected token {w!r}", off)
    if pending_vector is not None:
        raise VcdFormatError("vector value without id code", pending_vector[1])

    by_id: dict[str, tuple[tuple[int, str], ...]] = {}
    for code, points in per_id.items():
        out: list[tuple[int, str]] = []
        for t in sorted(points):
            if not out or out[-1][1] != points[t]:
                out.append((t, points[t]))
        by_id[code] = tuple(out)
    changes = {name: by_id[info.id_code] for name, info in signals.items()}
    return WaveDb(timescale, signals, changes, end_time)


# -- serialization ---------------------------------------------------------------

def _id_code(n: int) -> str:
    chars = [chr(c) for c in range(33, 127)]
    out = ""
    n += 1
    while n:
        n, r = divmod(n - 1, len(chars))
        out = chars[r] + out
    return out


def serialize_vcd(db: WaveDb) -> str:
    """Write a WaveDb as VCD text; aliases keep sharing one id code."""
    new_codes: dict[str, str] = {}
    for name in sorted(db.signals):
        old = db.signals[name].id_code
        if old not in new_codes:
            new_codes[old] = _id_code(len(new_codes))

    lines = [f"$timescale {db.timescale[0]}{db.timescale[1]} $end"]
    current: list[str] = []
    for name in sorted(db.signals, key=lambda n: n.split(".")):
        parts = name.split(".")
        path, leaf = parts[:-1], parts[-1]
        common = 0
        while common < min(len(path), len(current)) and path[common] == current[common]:
            common += 1
        for _ in range(len(current) - common):
            lines.append("$upscope $end")
        for p in path[common:]:
            lines.append(f"$scope module {p} $end")
        current = path
        info = db.signals[name]
        lines.append(f"$var {info.var_type} {info.width} {new_codes[info.id_code]} {leaf} $end")
    for _ in current:
        lines.append("$upscope $end")
    lines.append("$enddefinitions $end")

    events: dict[int, dict[str, str]] = {}
    emitted: set[str] = set()
    for name, info in db.signals.items():
        if info.id_code in emitted:
            continue
        emitted.add(info.id_code)
        for t, v in db.changes[name]:
            events.setdefault(t, {})[new_codes[info.id_code]] = v
    for t in sorted(events):
        lines.append(f"#{t}")
        for code, v in sorted(events[t].items()):
            lines.append(f"{v}{code}" if len(v) == 1 and _width_of_code(db, code, new_codes) == 1 else f"b{v} {code}")
    if db.end_time not in events:
        lines.append(f"#{db.end_time}")
    return "\n".join(lines) + "\n"


def _width_of_code(db: WaveDb, code: str, new_codes: dict[str, str]) -> int:
    for info in db.signals.values():
        if new_codes[info.id_code] == code:
            return info.width
    raise KeyError(code)


def canonical(db: WaveDb) -> tuple:
    """Comparison key that ignores id-code naming but keeps alias structure."""
    groups: dict[str, list[str]] = {}
    for name, info in db.signals.items():
        groups.setdefault(info.id_code, []).append(name)
    alias_sets = frozenset(frozenset(g) for g in groups.values())
    widths = {n: i.width for n, i in db.signals.items()}
    return (db.timescale, widths, alias_sets, {n: tuple(c) for n, c in db.changes.items()}, db.end_time)


# -- tables ----------------------------------------------------------------------

@dataclass(frozen=True)
class WaveTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[int, tuple[str, ...]], ...]
    window: tuple[int, int]

    def render(self) -> str:
        header = ("time",) + self.columns
        body = [(str(t),) + vals for t, vals in self.rows]
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        out = []
        for r in [header] + body:
            cells = [r[0].rjust(widths[0])] + [c.ljust(w) for c, w in zip(r[1:], widths[1:])]
            out.append("  ".join(cells).rstrip())
        return "\n".join(out)


def tabulate(db: WaveDb, signals: Sequence[str], window: tuple[int, int]) -> WaveTable:
    t_start, t_end = window
    if t_start > t_end:
        raise ValueError(f"empty window: start {t_start} > end {t_end}")
    missing: list[str] = []
    full: list[str] = []
    for s in signals:
        try:
            full.append(db.resolve(s))
        except AmbiguousSignal:
            raise
        except UnknownSignal:
            missing.append(s)
    if missing:
        raise UnknownSignal(missing, [n.split(".")[-1] for n in db.signals] + list(db.signals))
    times = {t_start}
    for f in full:
        for t, _ in db.changes[f]:
            if t_start < t <= t_end:
                times.add(t)
    rows = tuple((t, tuple(db.value_at(f, t) for f in full)) for t in sorted(times))
    return WaveTable(tuple(signals), rows, (t_start, t_end))


def rising_edges(db: WaveDb, clock: str) -> list[int]:
    full = db.resolve(clock)
    edges = []
    prev: Optional[str] = None
    for t, v in db.changes[full]:
        if prev is not None and v[-1] == "1" and prev[-1] != "1":
            edges.append(t)
        prev = v
    return edges


def window_around(db: WaveDb, center: int, cycles_before: int, cycles_after: int, clock: str) -> tuple[int, int]:
    """Window from `cycles_before` rising edges before the cycle holding
    `center` to `cycles_after` edges after it (at least to the end of that
    cycle), clamped to the dump."""
    if cycles_before < 0 or cycles_after < 0:
        raise ValueError("cycle counts must be non-negative")
    edges = rising_edges(db, clock)
    if not edges:
        raise NoEdges(f"clock {clock!r} never rises")
    dump_start = min((c[0][0] for c in db.changes.values() if c), default=0)
    dump_end = max(db.end_time, edges[-1])
    i = bisect.bisect_right(edges, center) - 1  # -1: center before the first edge

    def edge(k: int) -> int:
        if k < 0:
            return min(dump_start, edges[0])
        if k >= len(edges):
            return dump_end
        return edges[k]

    return edge(i - cycles_before), edge(i + max(cycles_after, 1))


def window_by_changes(db: WaveDb, center: int, before: int, after: int, signals: Iterable[str]) -> tuple[int, int]:
    """Clockless fallback: span `before`/`after` distinct change times of `signals` around center."""
    times = sorted({t for s in signals for t, _ in db.changes[db.resolve(s)]} | {0, db.end_time})
    i = bisect.bisect_right(times, center) - 1
    lo = times[max(i - before, 0)]
    hi = times[min(i + max(after, 1), len(times) - 1)]
    return lo, max(hi, lo)


def load_vcd(path: Union[str, Path]) -> WaveDb:
    with open(path, "rb") as fh:
        return parse_vcd(fh)


__all__ = [
    "VcdFormatError", "DuplicateIdCode", "AmbiguousSignal", "NoEdges", "VarInfo", "WaveDb", "WaveTable",
    "parse_vcd", "serialize_vcd", "canonical", "tabulate", "rising_edges", "window_around",
    "window_by_changes", "load_vcd",
]
