// Typed client for the testbed HTTP API. Works in Node 20+ (global
// fetch); the browser dashboard uses the same endpoints directly.

import { Alert, Order, Snapshot } from './types.js';
import { SseParser } from './sse.js';

export class ApiError extends Error {
  constructor(public status: number, public body: unknown) {
    super(`api error ${status}`);
  }
}

async function asJson(resp: Response): Promise<unknown> {
  const text = await resp.text();
  let body: unknown = text;
  try {
    body = JSON.parse(text);
  } catch {
    // non-json error bodies surface as raw text
  }
  if (!resp.ok) throw new ApiError(resp.status, body);
  return body;
}

export class ApiClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
  }

  async state(): Promise<Snapshot> {
    return (await asJson(await fetch(`${this.baseUrl}/state`))) as Snapshot;
  }

  async orders(): Promise<Order[]> {
    return (await asJson(await fetch(`${this.baseUrl}/orders`))) as Order[];
  }

  async alerts(): Promise<Alert[]> {
    return (await asJson(await fetch(`${this.baseUrl}/alerts`))) as Alert[];
  }

  async placeOrder(color: string, firingMs: number, millingMs: number): Promise<Order> {
    const resp = await fetch(`${this.baseUrl}/orders`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        color,
        firing_time_ms: firingMs,
        milling_time_ms: millingMs,
      }),
    });
    return (await asJson(resp)) as Order;
  }

  async setParam(plc: string, name: string, value: number): Promise<unknown> {
    const resp = await fetch(`${this.baseUrl}/plcs/${plc}/params/${name}`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ value }),
    });
    return asJson(resp);
  }

  /**
   * Subscribe to the /events stream. Returns an abort function.
   * onEvent receives (eventName, parsedPayload).
   */
  subscribe(onEvent: (event: string, payload: unknown) => void,
            onError?: (err: unknown) => void): () => void {
    const controller = new AbortController();
    const parser = new SseParser();
    (async () => {
      try {
        const resp = await fetch(`${this.baseUrl}/events`, {
          signal: controller.signal,
          headers: { Accept: 'text/event-stream' },
        });
        if (!resp.ok || !resp.body) throw new ApiError(resp.status, null);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const ev of parser.feed(decoder.decode(value, { stream: true }))) {
            onEvent(ev.event, JSON.parse(ev.data));
          }
        }
        onError?.(new Error('event stream ended'));
      } catch (err) {
        if (!controller.signal.aborted) onError?.(err);
      }
    })();
    return () => controller.abort();
  }
}
