/** Render thread: loads the MathJax engine once, renders one manifest
 * entry per message.  Kept separate so the parent can enforce timeouts by
 * terminating the thread. */

import { parentPort, workerData } from 'node:worker_threads';

import { Engine } from './engine';
import { ManifestEntry } from './types';

const engine = new Engine((workerData?.macros as Record<string, string>) ?? {});
const port = parentPort;
if (port === null) {
  throw new Error('render_worker must run as a worker thread');
}

port.on('message', (entry: ManifestEntry) => {
  port.postMessage(engine.render(entry));
});

port.postMessage({ ready: true });
