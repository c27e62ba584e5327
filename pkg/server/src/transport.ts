// Newline-framed transports: the parent process's stdio, or a TCP
// listener handling one connection at a time.

import * as net from "node:net";
import * as readline from "node:readline";
import { LineHandler, isShutdown } from "./session.js";

export function serveStdio(session: LineHandler): Promise<void> {
  return new Promise((resolve) => {
    const reader = readline.createInterface({ input: process.stdin, terminal: false });
    reader.on("line", (line) => {
      const trimmed = line.trim();
      if (!trimmed) return;
      if (isShutdown(trimmed)) {
        reader.close();
        resolve();
        return;
      }
      process.stdout.write(session.handleLine(trimmed) + "\n");
    });
    reader.on("close", () => resolve());
  });
}

export function serveTcp(session: LineHandler, host: string, port: number): Promise<void> {
  return new Promise((resolve, reject) => {
    const server = net.createServer((socket) => {
      const reader = readline.createInterface({ input: socket, terminal: false });
      reader.on("line", (line) => {
        const trimmed = line.trim();
        if (!trimmed) return;
        if (isShutdown(trimmed)) {
          socket.end();
          server.close(() => resolve());
          return;
        }
        socket.write(session.handleLine(trimmed) + "\n");
      });
      socket.on("error", () => reader.close());
    });
    server.on("error", reject);
    server.listen(port, host, () => {
      const address = server.address() as net.AddressInfo;
      process.stderr.write(`listening on ${host}:${address.port}\n`);
    });
  });
}
