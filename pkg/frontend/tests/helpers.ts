/** Test utilities: spawn the real arena server / simulator as subprocesses
 * and talk to them over loopback HTTP, exactly as a browser would.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

const execFileAsync = promisify(execFile);

export const SERVER_BIN = process.env["MATHARENA_BIN"] ?? "matharena";
export const ADMIN_TOKEN = "console-test-admin";

export interface LiveServer {
  baseUrl: string;
  journalDir: string;
  stop(): Promise<void>;
}

export async function makeTempDir(prefix: string): Promise<string> {
  return mkdtemp(join(tmpdir(), prefix));
}

/** Run one scripted tournament and keep its journal; returns the CLI's JSON. */
export async function runSimulation(
  seed: number,
  profiles: string,
  journalPath: string,
): Promise<{
  tournament_id: string;
  totals_tenths: Record<string, number>;
  journal_records: number;
}> {
  const { stdout } = await execFileAsync(SERVER_BIN, [
    "simulate",
    "--seed",
    String(seed),
    "--profiles",
    profiles,
    "--journal",
    journalPath,
    "--json",
  ]);
  return JSON.parse(stdout);
}

/** Start `matharena serve` on the given port and wait until it answers. */
export async function startServer(port: number, journalDir: string): Promise<LiveServer> {
  const child: ChildProcess = spawn(
    SERVER_BIN,
    ["serve", "--port", String(port), "--journal-dir", journalDir],
    {
      env: { ...process.env, MATHARENA_ADMIN_TOKEN: ADMIN_TOKEN },
      stdio: ["ignore", "pipe", "pipe"],
    },
  );
  let output = "";
  child.stdout?.on("data", (chunk: Buffer) => (output += chunk.toString()));
  child.stderr?.on("data", (chunk: Buffer) => (output += chunk.toString()));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early (code ${child.exitCode}):\n${output}`);
    }
    try {
      const probe = await fetch(`${baseUrl}/v1/tournaments`);
      if (probe.ok) {
        break;
      }
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`server did not come up in time:\n${output}`);
    }
    await sleep(100);
  }

  return {
    baseUrl,
    journalDir,
    async stop() {
      child.kill("SIGTERM");
      const gone = new Promise<void>((resolve) => child.once("exit", () => resolve()));
      await Promise.race([gone, sleep(3_000).then(() => child.kill("SIGKILL"))]);
      await rm(journalDir, { recursive: true, force: true });
    },
  };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Multiset compare of (rule, delta) pairs, order-independent. */
export function sortedPairs(pairs: Iterable<readonly [string, number]>): string {
  return JSON.stringify([...pairs].sort((a, b) => a[0].localeCompare(b[0]) || a[1] - b[1]));
}

const verdicts: string[] = [];

export function recordVerdict(line: string): void {
  verdicts.push(line);
  console.log(line);
}

export function criterionLine(num: number, label: string, seconds: number): string {
  return `[acceptance] ${num} ${label} ... PASS (${seconds.toFixed(1)}s)`;
}
