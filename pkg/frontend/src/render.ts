/**
 * Batch orchestration: feed manifest entries one at a time to a render
 * thread, enforce the per-formula timeout by terminating and respawning
 * the thread, and write one layout line per entry in manifest order.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import { Worker } from 'node:worker_threads';

import {
  failedLayout,
  GlyphLayout,
  layoutToJson,
  ManifestEntry,
  readManifest,
  WorkerConfig,
} from './types';

export interface BatchSummary {
  rendered: number;
  failed: number;
}

interface ThreadReply {
  layout: GlyphLayout;
  svg: string | null;
}

class RenderThread {
  private worker: Worker;
  private ready: Promise<void>;

  constructor(private macros: Record<string, string>) {
    this.worker = new Worker(path.join(__dirname, 'render_worker.js'), {
      workerData: { macros },
    });
    this.ready = new Promise((resolve, reject) => {
      this.worker.once('message', () => resolve());
      this.worker.once('error', reject);
    });
  }

  async render(entry: ManifestEntry, timeoutMs: number): Promise<ThreadReply | 'timeout'> {
    await this.ready;
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        cleanup();
        resolve('timeout');
      }, timeoutMs);
      const onMessage = (reply: ThreadReply) => {
        cleanup();
        resolve(reply);
      };
      const onError = (err: Error) => {
        cleanup();
        reject(err);
      };
      const cleanup = () => {
        clearTimeout(timer);
        this.worker.off('message', onMessage);
        this.worker.off('error', onError);
      };
      this.worker.on('message', onMessage);
      this.worker.on('error', onError);
      this.worker.postMessage(entry);
    });
  }

  async terminate(): Promise<void> {
    await this.worker.terminate();
  }

  respawn(): RenderThread {
    return new RenderThread(this.macros);
  }
}

function sanitizeId(recordId: string): string {
  return recordId.replace(/[^A-Za-z0-9._:-]/g, '_');
}

export async function renderBatch(cfg: WorkerConfig): Promise<BatchSummary> {
  const entries = readManifest(cfg.inputPath);
  if (cfg.svgDir) {
    fs.mkdirSync(cfg.svgDir, { recursive: true });
  }
  let thread = new RenderThread(cfg.macros);
  const lines: string[] = [];
  let failed = 0;
  try {
    for (const entry of entries) {
      let layout: GlyphLayout;
      let svg: string | null = null;
      let reply: ThreadReply | 'timeout';
      try {
        reply = await thread.render(entry, cfg.timeoutMs);
      } catch (err) {
        // thread crashed; restart it and record the failure
        await thread.terminate();
        thread = thread.respawn();
        reply = {
          layout: failedLayout(entry.record_id, `render thread error: ${err}`),
          svg: null,
        };
      }
      if (reply === 'timeout') {
        await thread.terminate();
        thread = thread.respawn();
        layout = failedLayout(
          entry.record_id,
          `render timed out after ${cfg.timeoutMs}ms`
        );
      } else {
        layout = reply.layout;
        svg = reply.svg;
      }
      if (!layout.render_ok) {
        failed += 1;
      }
      lines.push(layoutToJson(layout));
      if (cfg.svgDir && svg !== null) {
        fs.writeFileSync(
          path.join(cfg.svgDir, `${sanitizeId(entry.record_id)}.svg`),
          svg,
          'utf-8'
        );
      }
    }
  } finally {
    await thread.terminate();
  }
  fs.writeFileSync(cfg.outputPath, lines.join('\n') + (lines.length ? '\n' : ''), 'utf-8');
  return { rendered: entries.length - failed, failed };
}
