/** Round trip against the real annotation service over HTTP: one FINE unit
 * answered Yes and one COARSE rating with a comment, then the export is
 * checked for matching values. Skipped when the Python service is not
 * importable in this environment. */
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { connect, createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationSession } from "../src/session.js";

const PYTHON = "python3";
const pythonReady =
  spawnSync(PYTHON, ["-c", "import faithkit"], { timeout: 30000 }).status === 0;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

/** Raw TCP poll so happy-dom does not log refused connections during startup. */
function waitForPort(port: number, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const attempt = () => {
      const socket = connect({ port, host: "127.0.0.1" }, () => {
        socket.end();
        resolve();
      });
      socket.on("error", () => {
        socket.destroy();
        if (Date.now() > deadline) reject(new Error("service did not start"));
        else setTimeout(attempt, 150);
      });
    };
    attempt();
  });
}

const DOC_TEXT = "The probe reached orbit. The relay failed at dawn.";

function projectPayloads() {
  const documents = [
    {
      doc_id: "d1",
      text: DOC_TEXT,
      sentences: [
        { text: "The probe reached orbit. ", span: [0, 25] },
        { text: "The relay failed at dawn.", span: [25, 50] },
      ],
    },
  ];
  const fine = {
    project_id: "ui-fine",
    mode: "FINE",
    documents,
    summaries: [
      { summary_id: "s1", doc_id: "d1", system_id: "sys", text: "Probe in orbit, but relay failed." },
    ],
    units: [
      { summary_id: "s1", unit_index: 0, text: "Probe in orbit,", span: [0, 15] },
      { summary_id: "s1", unit_index: 1, text: "but relay failed.", span: [16, 33] },
    ],
    assignments: [
      {
        summary_id: "s1",
        annotator_slot: 0,
        mode: "FINE",
        unit_indices: [0, 1],
        hint_mode: "ALGORITHMIC",
        seed: 1,
        fraction: 1.0,
      },
    ],
    hints: [
      { summary_id: "s1", unit_index: 0, highlights: [0] },
      { summary_id: "s1", unit_index: 1, highlights: [1] },
    ],
  };
  const coarse = {
    project_id: "ui-coarse",
    mode: "COARSE",
    documents,
    summaries: [
      { summary_id: "s1", doc_id: "d1", system_id: "sys", text: "Probe in orbit, but relay failed." },
    ],
    scale: { min: 0, max: 5 },
    assignments: [
      {
        summary_id: "s1",
        annotator_slot: 0,
        mode: "COARSE",
        unit_indices: [],
        hint_mode: "NONE",
        seed: 1,
        fraction: 1.0,
      },
    ],
  };
  return { fine, coarse };
}

describe.skipIf(!pythonReady)("live service round trip", () => {
  let proc: ReturnType<typeof spawn>;
  let base: string;

  beforeAll(async () => {
    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    // happy-dom's fetch enforces the same-origin policy; align the window
    // origin with the service under test.
    (window as unknown as { happyDOM?: { setURL(url: string): void } }).happyDOM?.setURL(base);
    proc = spawn(PYTHON, [
      "-m",
      "faithkit.cli",
      "serve",
      "--port",
      String(port),
      "--data-dir",
      mkdtempSync(join(tmpdir(), "faithkit-ui-")),
    ]);
    await waitForPort(port, 20000);
    const health = await fetch(`${base}/health`);
    if (!health.ok) throw new Error("service unhealthy");
  });

  afterAll(() => {
    proc?.kill("SIGKILL");
  });

  it("completes one FINE unit (Yes) and one COARSE rating (4 + comment)", async () => {
    const { fine, coarse } = projectPayloads();
    const tokens: Record<string, string> = {};
    for (const payload of [fine, coarse]) {
      const response = await fetch(`${base}/projects`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
      expect(response.status).toBe(201);
      tokens[payload.project_id] = (await response.json()).slots["0"];
    }

    // FINE: answer Yes on the first delivered unit.
    const fineRoot = document.createElement("div");
    document.body.appendChild(fineRoot);
    const fineSession = new AnnotationSession(
      new ApiClient(base, "ui-fine", 0, tokens["ui-fine"]!),
      fineRoot,
    );
    await fineSession.start();
    await vi.waitFor(() => expect(fineRoot.querySelector("button.yes")).not.toBeNull());
    fineRoot.querySelector<HTMLButtonElement>("button.yes")!.click();
    await vi.waitFor(async () => {
      const exported = await (await fetch(`${base}/projects/ui-fine/export`)).json();
      expect(exported.judgments).toHaveLength(1);
    });

    // COARSE: rate 4 with a comment.
    const coarseRoot = document.createElement("div");
    document.body.appendChild(coarseRoot);
    const coarseSession = new AnnotationSession(
      new ApiClient(base, "ui-coarse", 0, tokens["ui-coarse"]!),
      coarseRoot,
    );
    await coarseSession.start();
    await vi.waitFor(() => expect(coarseRoot.querySelector("button.submit")).not.toBeNull());
    const four = [...coarseRoot.querySelectorAll<HTMLButtonElement>("button.rating-option")].find(
      (b) => b.textContent === "4",
    )!;
    four.click();
    coarseRoot.querySelector<HTMLTextAreaElement>("textarea.comment")!.value = "mostly faithful";
    coarseRoot.querySelector<HTMLButtonElement>("button.submit")!.click();
    await vi.waitFor(async () => {
      const exported = await (await fetch(`${base}/projects/ui-coarse/export`)).json();
      expect(exported.judgments).toHaveLength(1);
    });

    const fineExport = await (await fetch(`${base}/projects/ui-fine/export`)).json();
    const fineRecord = fineExport.judgments[0];
    expect(fineRecord.kind).toBe("fine");
    expect(fineRecord.label).toBe(1);
    expect(fineRecord.elapsed_ms).toBeGreaterThan(0);

    const coarseExport = await (await fetch(`${base}/projects/ui-coarse/export`)).json();
    const coarseRecord = coarseExport.judgments[0];
    expect(coarseRecord.kind).toBe("coarse");
    expect(coarseRecord.rating).toBe(4);
    expect(coarseRecord.comment).toBe("mostly faithful");
  });
});
