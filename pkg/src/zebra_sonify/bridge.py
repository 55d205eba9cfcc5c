"""Local WebSocket bridge: one interactive guidance session for the browser UI.

Wire protocol (one socket, mixed frame types):

* text frames carry JSON messages ``{"type": ...}``:
  server -> client: ``hello``, ``state`` (30 Hz pose), ``instruction``,
  ``speech``, ``metrics`` (on completion or abort);
  client -> server: ``control`` {forward, turn, sidestep, pitch_rate},
  ``tap``.
* binary frames carry PCM blocks: an 8-byte header (magic ``PCMB`` plus a
  little-endian uint32 frame count) followed by interleaved 16-bit stereo
  samples.

The session thread owns the world and the scheduler and applies the latest
client control at each 30 Hz tick; socket reads run on a separate thread.
Speech events carry text only; the client performs the actual utterance.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
import time

from .audio_io import BLOCK_FRAMES, BlockStreamer, SAMPLE_RATE
from .guidance import DEFAULT_GUIDANCE, GuidanceConfig
from .simulator import (
    Control,
    DEFAULT_MAPPING,
    Scenario,
    SessionEngine,
    metrics_to_csv,
    save_control_log,
)
from .sonification import DEFAULT_PAN_LAW, MappingConfig, PanLaw

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
PCM_MAGIC = b"PCMB"

OP_CONT, OP_TEXT, OP_BINARY, OP_CLOSE, OP_PING, OP_PONG = 0, 1, 2, 8, 9, 10


class HandshakeError(RuntimeError):
    pass


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def perform_handshake(conn: socket.socket) -> None:
    """Read the HTTP upgrade request and complete the WebSocket handshake."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = conn.recv(4096)
        if not chunk:
            raise HandshakeError("client closed during handshake")
        data += chunk
        if len(data) > 65536:
            raise HandshakeError("oversized handshake request")
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    if not lines[0].startswith("GET "):
        raise HandshakeError(f"not a GET request: {lines[0]!r}")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, value = line.split(":", 1)
            headers[name.strip().lower()] = value.strip()
    if "websocket" not in headers.get("upgrade", "").lower():
        raise HandshakeError("missing websocket upgrade header")
    key = headers.get("sec-websocket-key")
    if not key:
        raise HandshakeError("missing Sec-WebSocket-Key")
    conn.sendall(
        b"HTTP/1.1 101 Switching Protocols\r\n"
        b"Upgrade: websocket\r\n"
        b"Connection: Upgrade\r\n"
        b"Sec-WebSocket-Accept: " + _accept_key(key).encode() + b"\r\n\r\n"
    )


def encode_frame(opcode: int, payload: bytes) -> bytes:
    """Server-side frame: FIN set, unmasked."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


class FrameReader:
    """Incremental frame parser handling masking and fragmentation."""

    def __init__(self, conn: socket.socket):
        self.conn = conn
        self.buffer = b""

    def _read_exact(self, n: int) -> bytes:
        while len(self.buffer) < n:
            chunk = self.conn.recv(65536)
            if not chunk:
                raise ConnectionError("socket closed")
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def read_frame(self) -> tuple[int, bytes]:
        b0, b1 = self._read_exact(2)
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        n = b1 & 0x7F
        if n == 126:
            n = struct.unpack(">H", self._read_exact(2))[0]
        elif n == 127:
            n = struct.unpack(">Q", self._read_exact(8))[0]
        mask = self._read_exact(4) if masked else b""
        payload = self._read_exact(n)
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return (opcode if fin else opcode | 0x100), payload

    def read_message(self) -> tuple[int, bytes]:
        """One complete (possibly fragmented) message or control frame."""
        opcode, payload = self.read_frame()
        if opcode & 0x100:  # fragmented: accumulate continuations
            opcode &= 0x0F
            parts = [payload]
            while True:
                op2, chunk = self.read_frame()
                if (op2 & 0x0F) in (OP_CLOSE, OP_PING, OP_PONG):
                    return op2 & 0x0F, chunk  # control frames may interleave
                parts.append(chunk)
                if not op2 & 0x100:
                    return opcode, b"".join(parts)
        return opcode, payload


class BridgeServer:
    """Serves exactly one interactive session on localhost.

    ``realtime=False`` removes wall-clock pacing (the tick/recognition/audio
    cadence in simulated time is unchanged); tests use it to run sessions at
    CPU speed over a real socket.
    """

    def __init__(
        self,
        port: int,
        scenario: Scenario,
        guidance: GuidanceConfig = DEFAULT_GUIDANCE,
        mapping: MappingConfig = DEFAULT_MAPPING,
        pan_law: PanLaw = DEFAULT_PAN_LAW,
        locale: str = "it",
        out_metrics: str | None = None,
        out_controls: str | None = None,
        realtime: bool = True,
    ):
        self.scenario = scenario
        self.guidance = guidance
        self.mapping = mapping
        self.pan_law = pan_law
        self.locale = locale
        self.out_metrics = out_metrics
        self.out_controls = out_controls
        self.realtime = realtime
        self._listener = socket.create_server(("127.0.0.1", port))
        self.port = self._listener.getsockname()[1]
        self._send_lock = threading.Lock()
        self._control_lock = threading.Lock()
        self._latest_control = Control()
        self._pending_taps = 0
        self._disconnected = threading.Event()
        self.block_emit_times: list[float] = []  # wall-clock cadence probe

    # -- socket helpers -------------------------------------------------

    def _send(self, conn, opcode: int, payload: bytes) -> None:
        with self._send_lock:
            conn.sendall(encode_frame(opcode, payload))

    def _send_json(self, conn, message: dict) -> None:
        self._send(conn, OP_TEXT, json.dumps(message, sort_keys=True).encode())

    def _send_block(self, conn, block) -> None:
        header = PCM_MAGIC + struct.pack("<I", block.frame_count)
        self._send(conn, OP_BINARY, header + block.to_bytes())
        self.block_emit_times.append(time.monotonic())

    # -- client input ----------------------------------------------------

    def _reader_loop(self, conn) -> None:
        reader = FrameReader(conn)
        try:
            while not self._disconnected.is_set():
                opcode, payload = reader.read_message()
                if opcode == OP_CLOSE:
                    self._disconnected.set()
                    return
                if opcode == OP_PING:
                    self._send(conn, OP_PONG, payload)
                    continue
                if opcode != OP_TEXT:
                    continue
                try:
                    msg = json.loads(payload.decode())
                except (UnicodeDecodeError, json.JSONDecodeError):
                    continue
                kind = msg.get("type")
                if kind == "control":
                    control = Control(
                        forward=float(msg.get("forward", 0.0)),
                        turn=float(msg.get("turn", 0.0)),
                        sidestep=float(msg.get("sidestep", 0.0)),
                        pitch_rate=float(msg.get("pitch_rate", 0.0)),
                    )
                    with self._control_lock:
                        self._latest_control = control
                elif kind == "tap":
                    with self._control_lock:
                        self._pending_taps += 1
        except (ConnectionError, OSError):
            self._disconnected.set()

    def _next_input(self) -> tuple[Control, bool]:
        with self._control_lock:
            tap = self._pending_taps > 0
            if tap:
                self._pending_taps -= 1
            return self._latest_control, tap

    # -- session ------------------------------------------------------------

    def serve(self) -> None:
        """Accept one client, run the session to completion/abort, close."""
        try:
            conn, _ = self._listener.accept()
        finally:
            self._listener.close()
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            try:
                perform_handshake(conn)
            except HandshakeError:
                conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                return
            self._run_session(conn)
        finally:
            try:
                self._send(conn, OP_CLOSE, struct.pack(">H", 1000))
            except OSError:
                pass
            conn.close()

    def _run_session(self, conn) -> None:
        engine = SessionEngine(self.scenario, self.guidance, self.mapping, self.locale)
        streamer = BlockStreamer(SAMPLE_RATE, self.pan_law, BLOCK_FRAMES)
        reader = threading.Thread(target=self._reader_loop, args=(conn,), daemon=True)
        reader.start()

        layout = self.scenario.layout
        self._send_json(conn, {
            "type": "hello",
            "sample_rate": SAMPLE_RATE,
            "block_frames": BLOCK_FRAMES,
            "mode": self.scenario.mode,
            "locale": self.locale,
            "control_rate": 1.0 / engine.dt,
            "timeout_s": self.scenario.timeout_s,
            "layout": {
                "origin": list(layout.origin),
                "orientation": layout.orientation,
                "stripe_count": layout.stripe_count,
                "stripe_width": layout.stripe_width,
                "stripe_length": layout.stripe_length,
            },
        })

        block_period = BLOCK_FRAMES / SAMPLE_RATE
        audio_horizon = 0.0
        events_sent = 0
        rows_sent = 0
        last_instruction = None
        next_wall = time.monotonic()
        aborted = False

        try:
            while not engine.finished:
                if self._disconnected.is_set():
                    aborted = True
                    break
                audio_horizon += block_period
                while engine.world.time < audio_horizon and not engine.finished:
                    control, tap = self._next_input()
                    decision = engine.tick(control, tap)
                    agent = engine.world.agent
                    self._send_json(conn, {
                        "type": "state",
                        "time": round(engine.world.time, 6),
                        "x": round(agent.x, 6),
                        "y": round(agent.y, 6),
                        "heading": round(agent.heading, 6),
                        "pitch": round(agent.pitch, 6),
                        "aligned": engine.align_time is not None,
                    })
                    if decision.instruction is not last_instruction:
                        last_instruction = decision.instruction
                        self._send_json(conn, {
                            "type": "instruction",
                            "time": round(engine.world.time, 6),
                            "name": decision.instruction.value,
                            "quantity": round(decision.quantity, 6),
                            "lateral_bias": round(decision.lateral_bias, 6),
                        })
                    for t, kind, payload in engine.event_rows[rows_sent:]:
                        if kind in ("speech", "tap"):
                            self._send_json(conn, {
                                "type": "speech",
                                "time": round(t, 6),
                                "text": payload["text"],
                                "instruction": payload["instruction"],
                            })
                    rows_sent = len(engine.event_rows)
                    streamer.add_events(engine.audio_events[events_sent:])
                    events_sent = len(engine.audio_events)
                for block in streamer.take_ready(engine.world.time):
                    self._send_block(conn, block)
                if self.realtime:
                    next_wall += block_period
                    delay = next_wall - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)

            if not aborted:
                for block in streamer.finish(engine.world.time):
                    self._send_block(conn, block)
        except (ConnectionError, OSError):
            aborted = True

        metrics = engine.metrics()
        payload = {
            "type": "metrics",
            "mode": metrics.mode,
            "seed": metrics.seed,
            "time_to_align_s": metrics.time_to_align,
            "time_to_cross_s": metrics.time_to_cross,
            "message_count": metrics.message_count,
            "tap_count": metrics.tap_count,
            "completed": metrics.completed,
            "duration_s": metrics.duration,
            "aborted": aborted,
        }
        if not aborted and not self._disconnected.is_set():
            try:
                self._send_json(conn, payload)
            except (ConnectionError, OSError):
                pass
        if self.out_metrics:
            with open(self.out_metrics, "w", encoding="utf-8") as f:
                f.write(metrics_to_csv([metrics]))
        if self.out_controls:
            save_control_log(engine.control_log, self.out_controls)
        self.last_metrics = metrics
        self.last_engine = engine
        self.aborted = aborted


def serve(port: int, scenario: Scenario, **kwargs) -> BridgeServer:
    """Run one session synchronously; returns the server for inspection."""
    server = BridgeServer(port, scenario, **kwargs)
    server.serve()
    return server
