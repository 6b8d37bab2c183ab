"""ASCII line protocol between the planner (host) and the actuator board.

Frame layout, one command per line::

    VERB[ ARG]*HH\\n

``HH`` is the XOR of every byte before ``*`` as two uppercase hex digits.
Verbs: ``MOV <dir> <speed>``, ``STP``, ``ARM <x_mm> <y_mm> <z_mm>``,
``GRP <O|C>``, ``HOM``. The actuator answers each line with ``OK*HH\\n`` or
``ERR <code>*HH\\n``.

The checksum is a parity check for a short local link, not a MAC.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

MAX_LINE = 64  # bytes, newline included

DIRECTIONS = ("F", "B", "L", "R", "CW", "CC")
GRIP_ACTIONS = ("O", "C")
SPEED_MAX = 255
COORD_MIN, COORD_MAX = -32768, 32767

# Ack error codes
MALFORMED = 1
BAD_CHECKSUM = 2
UNKNOWN_VERB = 3
OUT_OF_RANGE = 4
UNREACHABLE = 5
GRIP_EMPTY = 6

_DECIMAL = re.compile(rb"-?(?:0|[1-9][0-9]*)\Z")
_HEX = re.compile(rb"[0-9A-F]{2}\Z")
_TOKEN = re.compile(rb"[!-~]+\Z")  # printable ASCII without space


class ProtocolError(ValueError):
    """A frame failed to parse; ``code`` is the Ack error code."""

    def __init__(self, code: int, message: str = ""):
        super().__init__(message or f"protocol error {code}")
        self.code = code


@dataclass(frozen=True)
class Move:
    direction: str
    speed: int

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ProtocolError(OUT_OF_RANGE, f"bad direction {self.direction!r}")
        if not _is_int(self.speed) or not 0 <= self.speed <= SPEED_MAX:
            raise ProtocolError(OUT_OF_RANGE, f"speed {self.speed!r} outside 0-255")


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class ArmTo:
    x_mm: int
    y_mm: int
    z_mm: int

    def __post_init__(self):
        for v in (self.x_mm, self.y_mm, self.z_mm):
            if not _is_int(v) or not COORD_MIN <= v <= COORD_MAX:
                raise ProtocolError(OUT_OF_RANGE, f"coordinate {v!r} out of range")

    @classmethod
    def from_cm(cls, x: float, y: float, z: float) -> ArmTo:
        return cls(*(int(round(v * 10)) for v in (x, y, z)))

    def to_cm(self) -> tuple[float, float, float]:
        return self.x_mm / 10, self.y_mm / 10, self.z_mm / 10


@dataclass(frozen=True)
class Grip:
    action: str

    def __post_init__(self):
        if self.action not in GRIP_ACTIONS:
            raise ProtocolError(OUT_OF_RANGE, f"bad grip action {self.action!r}")


@dataclass(frozen=True)
class Home:
    pass


Command = Union[Move, Stop, ArmTo, Grip, Home]


@dataclass(frozen=True)
class Ok:
    pass


@dataclass(frozen=True)
class Err:
    code: int

    def __post_init__(self):
        if not _is_int(self.code) or not 1 <= self.code <= 99:
            raise ProtocolError(OUT_OF_RANGE, f"ack code {self.code!r} outside 1-99")


Ack = Union[Ok, Err]


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def checksum(payload: bytes) -> int:
    c = 0
    for b in payload:
        c ^= b
    return c


def _frame(payload: str) -> bytes:
    body = payload.encode("ascii")
    return body + b"*%02X\n" % checksum(body)


def encode(c: Command) -> bytes:
    if isinstance(c, Move):
        payload = f"MOV {c.direction} {c.speed}"
    elif isinstance(c, Stop):
        payload = "STP"
    elif isinstance(c, ArmTo):
        payload = f"ARM {c.x_mm} {c.y_mm} {c.z_mm}"
    elif isinstance(c, Grip):
        payload = f"GRP {c.action}"
    elif isinstance(c, Home):
        payload = "HOM"
    else:
        raise TypeError(f"not a command: {c!r}")
    return _frame(payload)


def _split_frame(line: bytes) -> list[bytes]:
    """Validate framing and checksum; return the payload tokens."""
    if len(line) > MAX_LINE:
        raise ProtocolError(MALFORMED, "line too long")
    if not line.endswith(b"\n") or line.count(b"\n") != 1:
        raise ProtocolError(MALFORMED, "expected exactly one trailing newline")
    body = line[:-1]
    if body.count(b"*") != 1:
        raise ProtocolError(MALFORMED, "expected one '*' separator")
    payload, hh = body.split(b"*")
    if not _HEX.match(hh):
        raise ProtocolError(MALFORMED, "checksum must be two uppercase hex digits")
    if not payload or any(b < 0x20 or b > 0x7E for b in payload):
        raise ProtocolError(MALFORMED, "payload must be printable ASCII")
    if checksum(payload) != int(hh, 16):
        raise ProtocolError(BAD_CHECKSUM, "checksum mismatch")
    tokens = payload.split(b" ")
    if not all(_TOKEN.match(t) for t in tokens):
        raise ProtocolError(MALFORMED, "fields must be separated by single spaces")
    return tokens


def _int_arg(tok: bytes, lo: int, hi: int) -> int:
    if not _DECIMAL.match(tok) or tok == b"-0":
        raise ProtocolError(MALFORMED, f"non-canonical decimal {tok!r}")
    v = int(tok)
    if not lo <= v <= hi:
        raise ProtocolError(OUT_OF_RANGE, f"{v} outside [{lo}, {hi}]")
    return v


_ARITY = {b"MOV": 2, b"STP": 0, b"ARM": 3, b"GRP": 1, b"HOM": 0}


def decode(line: bytes) -> Command:
    """Strictly parse one frame; raises :class:`ProtocolError` on any defect."""
    tokens = _split_frame(bytes(line))
    verb, args = tokens[0], tokens[1:]
    if verb not in _ARITY:
        raise ProtocolError(UNKNOWN_VERB, f"unknown verb {verb!r}")
    if len(args) != _ARITY[verb]:
        raise ProtocolError(MALFORMED, f"{verb.decode()} takes {_ARITY[verb]} args")
    if verb == b"STP":
        return Stop()
    if verb == b"HOM":
        return Home()
    if verb == b"MOV":
        direction = args[0].decode("ascii")
        if direction not in DIRECTIONS:
            raise ProtocolError(OUT_OF_RANGE, f"bad direction {direction!r}")
        return Move(direction, _int_arg(args[1], 0, SPEED_MAX))
    if verb == b"GRP":
        action = args[0].decode("ascii")
        if action not in GRIP_ACTIONS:
            raise ProtocolError(OUT_OF_RANGE, f"bad grip action {action!r}")
        return Grip(action)
    return ArmTo(*(_int_arg(a, COORD_MIN, COORD_MAX) for a in args))


def encode_ack(a: Ack) -> bytes:
    if isinstance(a, Ok):
        return _frame("OK")
    if isinstance(a, Err):
        return _frame(f"ERR {a.code}")
    raise TypeError(f"not an ack: {a!r}")


def decode_ack(line: bytes) -> Ack:
    tokens = _split_frame(bytes(line))
    if tokens == [b"OK"]:
        return Ok()
    if len(tokens) == 2 and tokens[0] == b"ERR":
        return Err(_int_arg(tokens[1], 1, 99))
    if tokens[0] in (b"OK", b"ERR"):
        raise ProtocolError(MALFORMED, "bad ack arity")
    raise ProtocolError(UNKNOWN_VERB, f"unknown ack {tokens[0]!r}")


def error_ack(exc: ProtocolError) -> Err:
    return Err(exc.code)


class FrameSplitter:
    """Reassembles newline-terminated lines from arbitrarily chunked input.

    Lines longer than ``MAX_LINE`` bytes are dropped and reported as
    ``Err(1)`` in the output, in stream order.
    """

    def __init__(self, max_line: int = MAX_LINE):
        self.max_line = max_line
        self._buf = bytearray()
        self._overflow = False

    def feed(self, data: bytes) -> list[bytes | Err]:
        out: list[bytes | Err] = []
        for b in data:
            if self._overflow:
                if b == 0x0A:
                    self._overflow = False
                    out.append(Err(MALFORMED))
                continue
            self._buf.append(b)
            if b == 0x0A:
                out.append(bytes(self._buf))
                self._buf.clear()
            elif len(self._buf) >= self.max_line:
                # no room left for the newline
                self._buf.clear()
                self._overflow = True
        return out

    @property
    def pending(self) -> bytes:
        return bytes(self._buf)


class LoopbackPipe:
    """One direction of an in-memory serial link.

    ``write`` queues bytes; ``read`` returns them split into chunks whose
    sizes are drawn from ``rng`` (1..max_chunk). With ``corrupt_prob`` > 0,
    each byte has that chance of one flipped bit.
    """

    def __init__(self, rng=None, max_chunk: int = 0, corrupt_prob: float = 0.0):
        if (max_chunk or corrupt_prob) and rng is None:
            raise ValueError("chunking and corruption need an rng")
        self.rng = rng
        self.max_chunk = max_chunk
        self.corrupt_prob = corrupt_prob
        self._queue = bytearray()

    def write(self, data: bytes) -> None:
        data = bytearray(data)
        if self.corrupt_prob:
            hits = self.rng.random(len(data)) < self.corrupt_prob
            for i in hits.nonzero()[0]:
                data[i] ^= 1 << int(self.rng.integers(8))
        self._queue += data

    def read(self) -> list[bytes]:
        data, self._queue = bytes(self._queue), bytearray()
        if not self.max_chunk:
            return [data] if data else []
        chunks, i = [], 0
        while i < len(data):
            n = int(self.rng.integers(1, self.max_chunk + 1))
            chunks.append(data[i:i + n])
            i += n
        return chunks
