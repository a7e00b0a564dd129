"""Socket service: newline-delimited JSON wire around one SessionRunner.

One logical event loop per participant session. Any number of transport
connections (the task UI, observers) may deliver messages; they are
serialized through a single lock, state transitions are logged before the
resulting messages are broadcast to every connection, and controller
intents are forwarded to the configured actuator.

The clock is injectable: WallClock for live use (optionally time-scaled
for accelerated dry runs), VirtualClock for deterministic tests that
drive `step` by hand.
"""

from __future__ import annotations

import asyncio
import json
import time

from .actuator import Actuator
from .controller import ActuatorIntent, pulse_schedule
from .session import RunnerOutput, SessionRunner


class WallClock:
    """Monotonic milliseconds since construction, optionally scaled."""

    def __init__(self, time_scale: float = 1.0) -> None:
        if time_scale <= 0:
            raise ValueError(f"time_scale must be positive, got {time_scale}")
        self._t0 = time.monotonic()
        self._scale = time_scale

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000.0 * self._scale)


class VirtualClock:
    """Manually advanced clock for deterministic service tests."""

    def __init__(self, start_ms: int = 0) -> None:
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance(self, ms: int) -> int:
        self._now += ms
        return self._now

    def set(self, ms: int) -> None:
        if ms < self._now:
            raise ValueError(f"clock cannot rewind from {self._now} to {ms}")
        self._now = ms


def _encode(message: dict) -> bytes:
    return json.dumps(message, separators=(",", ":")).encode() + b"\n"


class SessionService:
    def __init__(
        self,
        runner: SessionRunner,
        clock: WallClock | VirtualClock | None = None,
        actuator: Actuator | None = None,
        tick_interval_ms: int = 25,
        pulse: bool = False,
    ) -> None:
        """``pulse=True`` runs the 1 Hz motor square wave against the
        actuator (hardware path); leave it off for mocks, which record the
        logical intent stream instead."""
        self._runner = runner
        self._clock = clock if clock is not None else WallClock()
        self._actuator = actuator
        self._tick_interval_ms = tick_interval_ms
        self._pulse = pulse and actuator is not None
        self._writers: set[asyncio.StreamWriter] = set()
        self._lock = asyncio.Lock()
        self._io_lock = asyncio.Lock()
        self._server: asyncio.base_events.Server | None = None
        self._tasks: list[asyncio.Task] = []
        self._active_site = None
        self._active_epoch_ms = 0
        self._motor_on = False

    # -- lifecycle ---------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        """Bind and serve; returns the actual (host, port)."""
        self._server = await asyncio.start_server(self._on_connect, host, port)
        if self._tick_interval_ms > 0:
            self._tasks.append(asyncio.create_task(self._tick_loop()))
        if self._pulse:
            self._tasks.append(asyncio.create_task(self._pulse_loop()))
        sockname = self._server.sockets[0].getsockname()
        return sockname[0], sockname[1]

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except asyncio.CancelledError:
                pass
        self._tasks.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        for writer in list(self._writers):
            writer.close()
        self._writers.clear()
        if self._actuator is not None:
            self._actuator.close()
        self._runner.close()

    async def serve_forever(self) -> None:
        assert self._server is not None, "call start() first"
        await self._server.serve_forever()

    # -- deterministic drive (tests, replay tooling) -----------------------

    async def step(self) -> None:
        """Run one tick at the current clock reading."""
        async with self._lock:
            out = self._runner.tick(self._clock.now_ms())
        await self._dispatch(out)

    @property
    def runner(self) -> SessionRunner:
        return self._runner

    # -- plumbing ----------------------------------------------------------

    async def _tick_loop(self) -> None:
        while True:
            await asyncio.sleep(self._tick_interval_ms / 1000.0)
            await self.step()

    async def _pulse_loop(self) -> None:
        # poll fast enough that the 500 ms half-period lands within ~20 ms
        while True:
            await asyncio.sleep(0.02)
            await self._drive_motor()

    async def _drive_motor(self) -> None:
        site = self._active_site
        if site is None:
            return  # the deactivation edge already switched the motor off
        now = self._clock.now_ms()
        want_on = pulse_schedule(site, now, self._active_epoch_ms)
        if want_on == self._motor_on:
            return
        await self._apply(ActuatorIntent(site=site, active=want_on, ts_ms=now))
        self._motor_on = want_on

    async def _apply(self, intent: ActuatorIntent) -> None:
        if self._actuator is None:
            return
        loop = asyncio.get_running_loop()
        async with self._io_lock:
            await loop.run_in_executor(None, self._actuator.apply, intent)

    async def _handle_intent(self, intent: ActuatorIntent) -> None:
        if self._pulse:
            # track the logical edge; the pulse loop owns the wire
            if intent.active:
                self._active_site = intent.site
                self._active_epoch_ms = intent.ts_ms
                await self._drive_motor()
            else:
                was_on = self._motor_on
                self._active_site = None
                if was_on:
                    await self._apply(
                        ActuatorIntent(
                            site=intent.site, active=False, ts_ms=intent.ts_ms
                        )
                    )
                    self._motor_on = False
        else:
            await self._apply(intent)

    async def _dispatch(self, out: RunnerOutput) -> None:
        for intent in out.intents:
            await self._handle_intent(intent)
        if out.outbound and self._writers:
            payload = b"".join(_encode(m) for m in out.outbound)
            dead = []
            for writer in self._writers:
                try:
                    writer.write(payload)
                    await writer.drain()
                except (ConnectionError, RuntimeError):
                    dead.append(writer)
            for writer in dead:
                self._writers.discard(writer)

    async def _on_connect(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        self._writers.add(writer)
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError:
                    writer.write(
                        _encode(
                            {
                                "type": "error",
                                "ts_ms": self._clock.now_ms(),
                                "payload": {
                                    "code": "malformed",
                                    "detail": "line is not valid JSON",
                                },
                            }
                        )
                    )
                    await writer.drain()
                    continue
                async with self._lock:
                    out = self._runner.handle_message(msg, self._clock.now_ms())
                await self._dispatch(out)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._writers.discard(writer)
            try:
                writer.close()
            except RuntimeError:
                pass
