import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { AddressInfo } from 'node:net';
import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { createServer, loadReplayData } from '../src/server.js';
import { MockTestbed } from './mock_testbed.js';

let bed: MockTestbed;
let server: ReturnType<typeof createServer>;
let base: string;

async function startServer(replay: any = null): Promise<void> {
  server = createServer({ apiBase: `http://127.0.0.1:${bed.port}`, replay });
  await new Promise<void>((r) => server.listen(0, '127.0.0.1', () => r()));
  base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
}

beforeEach(async () => {
  bed = new MockTestbed();
  await bed.start();
});

afterEach(async () => {
  await new Promise<void>((r) => server.close(() => r()));
  await bed.stop();
});

describe('dashboard server', () => {
  it('serves the dashboard page', async () => {
    await startServer();
    const resp = await fetch(base + '/');
    const html = await resp.text();
    expect(resp.headers.get('content-type')).toContain('text/html');
    expect(html).toContain('operator dashboard');
    expect(html).toContain('place order');
  });

  it('proxies /api/state to the testbed', async () => {
    await startServer();
    const resp = await fetch(base + '/api/state');
    const snap = await resp.json();
    expect(snap.inventory).toEqual([{ x: 1, y: 1, color: 'red' }]);
  });

  it('proxies POST bodies and status codes', async () => {
    await startServer();
    const resp = await fetch(base + '/api/orders', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ color: 'blue' }),
    });
    expect(resp.status).toBe(409);
  });

  it('answers 502 when the testbed is down', async () => {
    await startServer();
    await bed.stop();
    const resp = await fetch(base + '/api/state');
    expect(resp.status).toBe(502);
    bed = new MockTestbed();
    await bed.start(); // so afterEach can stop something
  });

  it('404s /replay without replay data', async () => {
    await startServer();
    expect((await fetch(base + '/replay')).status).toBe(404);
  });

  it('serves loaded replay data', async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'replay-'));
    fs.writeFileSync(path.join(dir, 'trace.jsonl'), [
      '{"kind":"process_sample","tick":1,"seq":1,"station":"vc","values":{}}',
      '{"kind":"ground_truth","tick":90,"seq":2,"label":"scan","attack":"modbus_scan",'
      + '"target":"furnace","start_tick":50,"end_tick":90}',
      '{"kind":"process_sample","tick":200,"seq":3,"station":"vc","values":{}}',
    ].join('\n') + '\n');
    const alertsPath = path.join(dir, 'alerts.jsonl');
    fs.writeFileSync(alertsPath,
      '{"detector":"iat","tick":51,"subject":"s","observed":0,"bound":"b","message":"m"}\n');
    const replay = await loadReplayData(alertsPath, dir);
    expect(replay.truth).toEqual([{ label: 'scan', start_tick: 50, end_tick: 90 }]);
    expect(replay.alerts).toHaveLength(1);
    expect(replay.total_ticks).toBe(200);
    await startServer(replay);
    const resp = await fetch(base + '/replay');
    expect((await resp.json()).truth[0].label).toBe('scan');
  });
});
