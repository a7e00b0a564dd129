"""Byte protocol to the vibration hardware, plus a recording mock device.

Frames are newline-terminated ASCII: ``V,<SITE>,<STATE>\\n`` with site codes
LW/RW/LA/RA and state 0/1. The device answers every command with ``A\\n``.
Commands are never pipelined; at most one is in flight.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

from .controller import ActuatorIntent
from .errors import DeviceTimeoutError, ProtocolError, TimingError
from .gaze import BodySite

DEFAULT_BAUD = 115200
ACK_TIMEOUT_MS = 100

_ACK = b"A\n"

_SITE_CODES = {site: site.value for site in BodySite}
_CODE_SITES = {code: site for site, code in _SITE_CODES.items()}


@dataclass(frozen=True)
class SerialCommand:
    site: BodySite
    state: bool


def encode_command(command: SerialCommand) -> bytes:
    """Canonical byte frame for one on/off command."""
    return f"V,{_SITE_CODES[command.site]},{1 if command.state else 0}\n".encode("ascii")


def decode_command(frame: bytes) -> SerialCommand:
    """Inverse of encode_command.

    Raises:
        ProtocolError: the frame is not one of the eight canonical frames.
    """
    try:
        text = frame.decode("ascii")
    except UnicodeDecodeError:
        raise ProtocolError("non-ASCII command frame", raw=frame) from None
    parts = text[:-1].split(",") if text.endswith("\n") else None
    if parts is None or len(parts) != 3 or parts[0] != "V":
        raise ProtocolError(f"malformed command frame: {frame!r}", raw=frame)
    _, site_code, state_code = parts
    if site_code not in _CODE_SITES or state_code not in ("0", "1"):
        raise ProtocolError(f"unknown site or state in frame: {frame!r}", raw=frame)
    command = SerialCommand(site=_CODE_SITES[site_code], state=state_code == "1")
    if encode_command(command) != frame:
        raise ProtocolError(f"non-canonical command frame: {frame!r}", raw=frame)
    return command


def decode_ack(data: bytes) -> None:
    """Validate a device acknowledgement.

    Raises:
        ProtocolError: anything but the single canonical ack.
    """
    if data != _ACK:
        raise ProtocolError(f"expected ack, got {data!r}", raw=data)


def read_ack(
    read_byte: Callable[[], bytes],
    timeout_ms: int = ACK_TIMEOUT_MS,
    clock: Callable[[], float] = time.monotonic,
) -> None:
    """Read an ack line from ``read_byte`` within the timeout.

    ``read_byte`` returns one byte, or b"" when nothing is pending yet.

    Raises:
        DeviceTimeoutError: no complete line arrived in time.
        ProtocolError: the line was not an ack.
    """
    deadline = clock() + timeout_ms / 1000.0
    buf = bytearray()
    while clock() < deadline:
        chunk = read_byte()
        if not chunk:
            continue
        buf += chunk
        if buf.endswith(b"\n"):
            decode_ack(bytes(buf))
            return
    raise DeviceTimeoutError(f"no ack within {timeout_ms} ms")


class Actuator(Protocol):
    """Sink for controller intents."""

    def apply(self, intent: ActuatorIntent) -> None: ...

    def close(self) -> None: ...


@dataclass
class TimelineRecord:
    ts_ms: int
    site: BodySite
    state: bool


@dataclass
class ActuationTimeline:
    """What the (mock) device actually did, in order."""

    records: list[TimelineRecord] = field(default_factory=list)

    def append(self, record: TimelineRecord) -> None:
        if self.records and record.ts_ms < self.records[-1].ts_ms:
            raise TimingError(
                f"timeline record at {record.ts_ms} ms precedes "
                f"{self.records[-1].ts_ms} ms"
            )
        last_state = False  # every site starts off
        for prev in reversed(self.records):
            if prev.site is record.site:
                last_state = prev.state
                break
        if last_state == record.state:
            raise ProtocolError(
                f"site {record.site.value} repeated state {record.state} "
                f"at {record.ts_ms} ms (intents must alternate per site)"
            )
        self.records.append(record)

    def as_tuples(self) -> list[tuple[int, str, bool]]:
        return [(r.ts_ms, r.site.value, r.state) for r in self.records]


class MockActuator:
    """Records every intent instead of driving hardware."""

    def __init__(self) -> None:
        self.timeline = ActuationTimeline()

    def apply(self, intent: ActuatorIntent) -> None:
        self.timeline.append(
            TimelineRecord(ts_ms=intent.ts_ms, site=intent.site, state=intent.active)
        )

    def close(self) -> None:
        pass


def mock_apply(intents: Iterable[ActuatorIntent]) -> ActuationTimeline:
    """Run an intent stream through a fresh mock device."""
    device = MockActuator()
    for intent in intents:
        device.apply(intent)
    return device.timeline


class SerialActuator:
    """Drives the real device over a serial port.

    Needs pyserial; imported lazily so the mock path has no hardware
    dependency. One command in flight at a time, each acked.
    """

    def __init__(self, port: str, baud: int = DEFAULT_BAUD) -> None:
        try:
            import serial
        except ImportError as exc:
            raise RuntimeError(
                "pyserial is required for --actuator serial "
                "(pip install eyerofeedback[serial])"
            ) from exc
        self._port = serial.Serial(port, baudrate=baud, timeout=ACK_TIMEOUT_MS / 1000.0)

    def apply(self, intent: ActuatorIntent) -> None:
        command = SerialCommand(site=intent.site, state=intent.active)
        self._port.write(encode_command(command))
        self._port.flush()
        read_ack(lambda: self._port.read(1))

    def close(self) -> None:
        self._port.close()
