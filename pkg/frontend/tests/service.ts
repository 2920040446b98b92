/** Spawns the real rating service for round-trip tests.
 *
 * Writes a six-point catalog manifest to a temp directory, starts the
 * Python service on a random local port, and waits until /scale answers.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RunningService {
  baseUrl: string;
  pointIds: string[];
  stop: () => Promise<void>;
}

const POSITIONS = ["head", "center", "tail"] as const;

function manifestLines(): { lines: string[]; pointIds: string[] } {
  const lines: string[] = [];
  const pointIds: string[] = [];
  let pointIndex = 0;
  for (let street = 0; street < 2; street++) {
    for (const position of POSITIONS) {
      const pointId = `p${pointIndex}`;
      pointIds.push(pointId);
      for (const angle of [0, 1]) {
        lines.push(
          JSON.stringify({
            frame_id: `${pointId}_a${angle}`,
            point_id: pointId,
            street_id: `s${street}`,
            position,
            angle_index: angle,
            lat: 45.5 + pointIndex * 0.001,
            lon: -73.6,
            image_path: `images/${pointId}_a${angle}.png`,
          }),
        );
      }
      pointIndex += 1;
    }
  }
  return { lines, pointIds };
}

async function waitReady(
  baseUrl: string,
  child: ChildProcessWithoutNullStreams,
  logs: string[],
): Promise<void> {
  const deadline = Date.now() + 30_000;
  let exited = false;
  child.once("exit", () => {
    exited = true;
  });
  while (Date.now() < deadline) {
    if (exited) {
      throw new Error(`service exited during startup:\n${logs.join("")}`);
    }
    try {
      const response = await fetch(`${baseUrl}/scale`);
      if (response.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error(`service did not become ready:\n${logs.join("")}`);
}

export interface StartOptions {
  /** Called with the base URL before the first readiness probe — lets a
   * DOM test move its page onto the service origin, as in production
   * where the UI is static-mounted on the service itself. */
  onBaseUrl?: (baseUrl: string) => void;
}

export async function startService(options: StartOptions = {}): Promise<RunningService> {
  const dir = mkdtempSync(join(tmpdir(), "rating-ui-"));
  const manifest = join(dir, "manifest.jsonl");
  const { lines, pointIds } = manifestLines();
  writeFileSync(manifest, lines.join("\n") + "\n");

  const port = 8300 + Math.floor(Math.random() * 2000);
  const baseUrl = `http://127.0.0.1:${port}`;
  options.onBaseUrl?.(baseUrl);
  const child = spawn(
    "python3",
    [
      "-m",
      "streetgauge.cli",
      "serve",
      "--catalog",
      manifest,
      "--data-dir",
      join(dir, "store"),
      "--port",
      String(port),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const logs: string[] = [];
  child.stdout.on("data", (chunk: Buffer) => logs.push(chunk.toString()));
  child.stderr.on("data", (chunk: Buffer) => logs.push(chunk.toString()));

  await waitReady(baseUrl, child, logs);

  const stop = (): Promise<void> =>
    new Promise((resolve) => {
      child.once("exit", () => resolve());
      child.kill("SIGTERM");
      const hardKill = setTimeout(() => {
        child.kill("SIGKILL");
        resolve();
      }, 5_000);
      hardKill.unref();
    });

  return { baseUrl, pointIds, stop };
}
