// A miniature stand-in for the testbed HTTP API, implementing the
// documented endpoints with a scriptable factory state. Used to test
// the client, view model and proxy without the real kernel.

import * as http from 'node:http';
import { AddressInfo } from 'node:net';

import { Order, Snapshot } from '../src/types.js';

function baseSnapshot(): Snapshot {
  const station = (values: Record<string, number>) => ({
    fresh: true, tick: 0, values, params: {},
  });
  return {
    tick: 0,
    snapshot_tick: 0,
    time_s: 0,
    stations: {
      vc: station({ horizontal: 0, vertical: 0, rotation: 0, has_cylinder: 0,
                    cyl_at_arrival: 0, cyl_at_warehouse_io: 0 }),
      warehouse: station({ cantilever_x: 0, cantilever_y: 0, color_reading: 900,
                           carrying: 0 }),
      furnace: { fresh: true, tick: 0,
                 values: { cyl_unfired: 0, cyl_fired: 0, platform_inside: 0,
                           platform_outside: 1, oven_led: 0 },
                 params: { firing_time_ms: 1000 } },
      mill: { fresh: true, tick: 0,
              values: { fired_on_platform: 0, cyl_at_mill: 0, transport_pos: 0,
                        mill_motor: 0 },
              params: { milling_time_ms: 1000 } },
      sorting: station({ belt_pos: 0, barrier_entry: 0, barrier_exit: 0,
                         color_reading: 900, bay_white: 0, bay_red: 0,
                         bay_blue: 0 }),
    },
    inventory: [{ x: 1, y: 1, color: 'red' }],
    orders: [],
    alerts: 0,
    links: { vc: 'fresh', warehouse: 'fresh', furnace: 'fresh', mill: 'fresh',
             sorting: 'fresh' },
  };
}

export class MockTestbed {
  snapshot: Snapshot = baseSnapshot();
  orders: Order[] = [];
  jammed = false;
  paramWriteBehavior: 'ok' | 'timeout' = 'ok';
  private nextId = 1;
  private server: http.Server;
  private sseClients: http.ServerResponse[] = [];
  port = 0;

  constructor() {
    this.server = http.createServer((req, res) => this.handle(req, res));
  }

  start(): Promise<string> {
    return new Promise((resolve) => {
      this.server.listen(0, '127.0.0.1', () => {
        this.port = (this.server.address() as AddressInfo).port;
        resolve(`http://127.0.0.1:${this.port}`);
      });
    });
  }

  stop(): Promise<void> {
    for (const res of this.sseClients) res.end();
    return new Promise((resolve) => this.server.close(() => resolve()));
  }

  setJammed(on: boolean): void {
    this.jammed = on;
    for (const key of Object.keys(this.snapshot.links)) {
      this.snapshot.links[key] = on ? 'stale' : 'fresh';
    }
    for (const st of Object.values(this.snapshot.stations)) st.fresh = !on;
  }

  advanceOrder(id: number, status: string): void {
    const order = this.orders.find((o) => o.order_id === id);
    if (order) {
      order.status = status;
      order.status_ticks[status] = this.snapshot.tick;
    }
  }

  pushSnapshot(): void {
    this.snapshot.tick += 5;
    this.snapshot.snapshot_tick = this.snapshot.tick;
    this.snapshot.orders = this.orders;
    const payload = `event: snapshot\ndata: ${JSON.stringify(this.snapshot)}\n\n`;
    for (const res of this.sseClients) res.write(payload);
  }

  pushAlert(detector: string, message: string): void {
    const alert = { detector, tick: this.snapshot.tick, subject: 'x',
                    observed: 0, bound: 'b', message };
    const payload = `event: alert\ndata: ${JSON.stringify(alert)}\n\n`;
    for (const res of this.sseClients) res.write(payload);
  }

  private body(req: http.IncomingMessage): Promise<any> {
    return new Promise((resolve) => {
      let data = '';
      req.on('data', (c) => { data += c; });
      req.on('end', () => resolve(data ? JSON.parse(data) : {}));
    });
  }

  private json(res: http.ServerResponse, code: number, payload: unknown): void {
    res.writeHead(code, { 'content-type': 'application/json' });
    res.end(JSON.stringify(payload));
  }

  private async handle(req: http.IncomingMessage,
                       res: http.ServerResponse): Promise<void> {
    const url = req.url ?? '/';
    if (url === '/state') return this.json(res, 200, this.snapshot);
    if (url === '/orders' && req.method === 'GET') {
      return this.json(res, 200, this.orders);
    }
    if (url === '/orders' && req.method === 'POST') {
      const body = await this.body(req);
      if (this.jammed) {
        // orders admitted during a jam fail on write timeouts
        const order = this.makeOrder(body, 'failed', 'write to furnace failed');
        return this.json(res, 201, order);
      }
      const inStock = this.snapshot.inventory.some((s) => s.color === body.color);
      if (!inStock) return this.json(res, 409, { error: 'out_of_stock' });
      if (body.firing_time_ms > 60000) {
        return this.json(res, 422, { error: 'invalid_parameter' });
      }
      return this.json(res, 201, this.makeOrder(body, 'queued', null));
    }
    if (url === '/alerts') return this.json(res, 200, []);
    if (url.startsWith('/plcs/') && req.method === 'PUT') {
      const body = await this.body(req);
      const [, , plc, , name] = url.split('/');
      if (this.paramWriteBehavior === 'timeout') {
        return this.json(res, 504, { error: 'timeout' });
      }
      if (plc === 'furnace' && name === 'firing_time_ms') {
        if (body.value > 60000) {
          return this.json(res, 422, { error: 'out_of_bounds', bounds: [0, 60000] });
        }
        this.snapshot.stations['furnace'].params!['firing_time_ms'] = body.value;
        return this.json(res, 200, { written: true });
      }
      return this.json(res, 404, { error: 'unknown_parameter' });
    }
    if (url === '/events') {
      res.writeHead(200, { 'content-type': 'text/event-stream',
                           'cache-control': 'no-cache' });
      this.sseClients.push(res);
      res.write(`event: snapshot\ndata: ${JSON.stringify(this.snapshot)}\n\n`);
      return;
    }
    this.json(res, 404, { error: 'not found' });
  }

  private makeOrder(body: any, status: string, error: string | null): Order {
    const order: Order = {
      order_id: this.nextId++,
      color: body.color,
      firing_time_ms: body.firing_time_ms ?? 1000,
      milling_time_ms: body.milling_time_ms ?? 1000,
      status,
      created_tick: this.snapshot.tick,
      status_ticks: { queued: this.snapshot.tick },
      error,
    };
    this.orders.push(order);
    return order;
  }
}
