// Shared plumbing for the golden-path tests: a live sandbox backend spawned
// from the repo root, plus small DOM drivers for the jsdom page.

import { spawn, ChildProcess } from "node:child_process";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";

const repoRoot = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");

export interface LiveServer {
  base: string;
  proc: ChildProcess;
  stop(): void;
}

export async function startServer(): Promise<LiveServer> {
  const port = 8400 + Math.floor(Math.random() * 400);
  const base = `http://127.0.0.1:${port}`;
  const proc = spawn(
    "python3",
    ["-m", "securemart.cli", "serve", "--sandbox",
      "--seed", "src/securemart/fixtures/demo.json",
      "--port", String(port)],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk) => { stderr += String(chunk); });

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const resp = await fetch(`${base}/health`);
      if (resp.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error(`backend did not come up on ${base}\n${stderr}`);
    }
    await sleep(150);
  }
  return { base, proc, stop: () => { proc.kill(); } };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

export async function until(
  cond: () => boolean, what = "condition", timeoutMs = 10_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    // a mid-render poll may find the view half-built; that's "not yet", not a failure
    try {
      if (cond()) return;
      lastError = null;
    } catch (err) {
      lastError = err;
    }
    await sleep(25);
  }
  const detail = lastError ? ` (last error: ${String(lastError)})` : "";
  throw new Error(`timed out waiting for ${what}${detail}`);
}

export function $(testid: string): HTMLElement {
  const el = document.querySelector(`[data-testid="${testid}"]`);
  if (!el) throw new Error(`no element with data-testid=${testid}`);
  return el as HTMLElement;
}

export function maybe(testid: string): HTMLElement | null {
  return document.querySelector(`[data-testid="${testid}"]`) as HTMLElement | null;
}

export function text(testid: string): string {
  return $(testid).textContent ?? "";
}

export function setValue(testid: string, value: string): void {
  const input = $(testid) as HTMLInputElement;
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

export function click(testid: string): void {
  $(testid).dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

export function freshRoot(): HTMLElement {
  document.body.innerHTML = '<div id="root"></div>';
  location.hash = "";
  return document.getElementById("root") as HTMLElement;
}
