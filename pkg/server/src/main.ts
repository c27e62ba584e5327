// Entry point: load the model spec and serve the wire protocol.
//
//   node dist/main.js --model trace.json [--transport stdio|tcp]
//                     [--host 127.0.0.1] [--port 0]
//                     [--temperature 1.0] [--seed N]

import { loadTrace } from "./model.js";
import { RefusingSession, Session } from "./session.js";
import { serveStdio, serveTcp } from "./transport.js";

interface Args {
  model: string;
  transport: "stdio" | "tcp";
  host: string;
  port: number;
  temperature: number;
  seed?: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    model: "",
    transport: "stdio",
    host: "127.0.0.1",
    port: 0,
    temperature: 1.0,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      const value = argv[++i];
      if (value === undefined) {
        throw new Error(`flag ${flag} needs a value`);
      }
      return value;
    };
    switch (flag) {
      case "--model":
        args.model = next();
        break;
      case "--transport": {
        const value = next();
        if (value !== "stdio" && value !== "tcp") {
          throw new Error(`unknown transport '${value}'`);
        }
        args.transport = value;
        break;
      }
      case "--host":
        args.host = next();
        break;
      case "--port":
        args.port = parseInt(next(), 10);
        break;
      case "--temperature":
        args.temperature = parseFloat(next());
        break;
      case "--seed":
        args.seed = parseInt(next(), 10);
        break;
      default:
        throw new Error(`unknown flag '${flag}'`);
    }
  }
  if (!args.model) {
    throw new Error("--model <trace.json> is required");
  }
  return args;
}

async function main(): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  let session: Session | RefusingSession;
  try {
    const model = loadTrace(args.model, args.seed);
    session = new Session(model, args.temperature);
  } catch (err) {
    // a failed model load refuses every request (including init) with an
    // error record instead of killing the session
    const message = (err as Error).message;
    process.stderr.write(`error: ${message}\n`);
    session = new RefusingSession(`model load failed: ${message}`);
  }
  if (args.transport === "stdio") {
    await serveStdio(session);
  } else {
    await serveTcp(session, args.host, args.port);
  }
  return session instanceof RefusingSession ? 1 : 0;
}

main().then((code) => {
  process.exitCode = code;
});
