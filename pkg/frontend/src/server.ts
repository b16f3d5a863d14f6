// Dashboard server: serves the single-file UI and proxies /api/* to the
// testbed so the browser never deals with cross-origin setup. Optional
// replay data (label windows plus detector alerts) is loaded from disk
// at startup for the post-mortem timeline panel.

import * as fs from 'node:fs';
import * as http from 'node:http';
import * as readline from 'node:readline';

import { dashboardHtml } from './dashboard.js';

export interface ReplayData {
  truth: { label: string; start_tick: number; end_tick: number }[];
  alerts: { detector: string; tick: number }[];
  total_ticks: number;
}

export interface ServerOptions {
  apiBase: string; // e.g. http://127.0.0.1:8080
  replay?: ReplayData | null;
}

export async function loadReplayData(alertsPath: string,
                                     datasetDir: string): Promise<ReplayData> {
  const alerts = fs.readFileSync(alertsPath, 'utf-8')
    .split('\n')
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as { detector: string; tick: number });
  const truth: ReplayData['truth'] = [];
  let lastTick = 0;
  const stream = fs.createReadStream(`${datasetDir}/trace.jsonl`, 'utf-8');
  const rl = readline.createInterface({ input: stream, crlfDelay: Infinity });
  for await (const line of rl) {
    if (!line) continue;
    // ground-truth records are rare; cheap substring check before parsing
    if (line.includes('"ground_truth"')) {
      const rec = JSON.parse(line);
      truth.push({ label: rec.label, start_tick: rec.start_tick,
                   end_tick: rec.end_tick });
    }
    const tickMatch = /"tick":(\d+)/.exec(line);
    if (tickMatch) lastTick = Math.max(lastTick, +tickMatch[1]);
  }
  return { truth, alerts, total_ticks: lastTick };
}

function proxy(apiBase: string, req: http.IncomingMessage,
               res: http.ServerResponse, path: string): void {
  const target = new URL(apiBase + path);
  const chunks: Buffer[] = [];
  req.on('data', (c) => chunks.push(c));
  req.on('end', () => {
    // buffered with an explicit length: the testbed reads Content-Length
    const body = Buffer.concat(chunks);
    const upstream = http.request(
      target,
      {
        method: req.method,
        headers: {
          'content-type': 'application/json',
          'content-length': body.length,
          accept: req.headers.accept ?? '*/*',
        },
      },
      (up) => {
        res.writeHead(up.statusCode ?? 502, {
          'content-type': up.headers['content-type'] ?? 'application/json',
          'cache-control': 'no-cache',
        });
        up.pipe(res);
      },
    );
    upstream.on('error', () => {
      res.writeHead(502, { 'content-type': 'application/json' });
      res.end(JSON.stringify({ error: 'testbed unreachable' }));
    });
    upstream.end(body);
  });
}

export function createServer(options: ServerOptions): http.Server {
  return http.createServer((req, res) => {
    const url = req.url ?? '/';
    if (url === '/' || url === '/index.html') {
      res.writeHead(200, { 'content-type': 'text/html; charset=utf-8' });
      res.end(dashboardHtml());
      return;
    }
    if (url === '/replay') {
      if (!options.replay) {
        res.writeHead(404, { 'content-type': 'application/json' });
        res.end(JSON.stringify({ error: 'no replay data loaded' }));
        return;
      }
      res.writeHead(200, { 'content-type': 'application/json' });
      res.end(JSON.stringify(options.replay));
      return;
    }
    if (url.startsWith('/api/')) {
      proxy(options.apiBase, req, res, url.slice(4));
      return;
    }
    res.writeHead(404, { 'content-type': 'application/json' });
    res.end(JSON.stringify({ error: 'not found' }));
  });
}
