/**
 * Line transports over the service socket.
 *
 * The service frames one JSON message per newline; transports deliver
 * exactly one complete line per callback, buffering partial chunks.
 */

export interface TransportEvents {
  onLine(line: string): void;
  onClosed(): void;
}

export interface Transport {
  send(line: string): void;
  close(): void;
}

/** Reassembles newline-framed messages from arbitrary chunk boundaries. */
export class LineSplitter {
  private buffer = "";

  constructor(private readonly emit: (line: string) => void) {}

  push(chunk: string): void {
    this.buffer += chunk;
    for (;;) {
      const at = this.buffer.indexOf("\n");
      if (at < 0) {
        return;
      }
      const line = this.buffer.slice(0, at);
      this.buffer = this.buffer.slice(at + 1);
      if (line.length > 0) {
        this.emit(line);
      }
    }
  }
}

/** Test double: deliver() plays the service side, send() records ours. */
export class ScriptedTransport implements Transport {
  readonly sent: string[] = [];
  closed = false;

  constructor(private readonly events: TransportEvents) {}

  send(line: string): void {
    if (this.closed) {
      throw new Error("send after close");
    }
    this.sent.push(line);
  }

  deliver(line: string): void {
    this.events.onLine(line);
  }

  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.events.onClosed();
    }
  }
}

/**
 * Browser transport: the socket protocol carried over a WebSocket (one
 * frame may hold several lines, or a fraction of one). The socket-like
 * object is injected so tests need no real network.
 */
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

export class WebSocketTransport implements Transport {
  private readonly splitter: LineSplitter;

  constructor(
    private readonly socket: WebSocketLike,
    events: TransportEvents
  ) {
    this.splitter = new LineSplitter((line) => events.onLine(line));
    socket.addEventListener("message", (event: { data: unknown }) => {
      if (typeof event.data === "string") {
        this.splitter.push(event.data);
      }
    });
    socket.addEventListener("close", () => events.onClosed());
  }

  send(line: string): void {
    this.socket.send(line + "\n");
  }

  close(): void {
    this.socket.close();
  }
}

/**
 * Direct TCP transport for tests and headless tooling running under
 * node. Imported lazily so browser bundles never touch "net".
 */
export class TcpTransport implements Transport {
  private socket: import("net").Socket;

  constructor(host: string, port: number, events: TransportEvents) {
    // eslint-disable-next-line @typescript-eslint/no-var-requires
    const net: typeof import("net") = require("net");
    const splitter = new LineSplitter((line) => events.onLine(line));
    this.socket = net.createConnection({ host, port });
    this.socket.setEncoding("utf-8");
    this.socket.on("data", (chunk: string) => splitter.push(chunk));
    this.socket.on("close", () => events.onClosed());
  }

  waitConnected(timeoutMs = 5000): Promise<void> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("connect timeout")),
        timeoutMs
      );
      this.socket.once("connect", () => {
        clearTimeout(timer);
        resolve();
      });
      this.socket.once("error", (err: Error) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  close(): void {
    this.socket.destroy();
  }
}
