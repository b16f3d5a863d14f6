import { describe, expect, it } from 'vitest';

import { SseParser } from '../src/sse.js';

describe('SseParser', () => {
  it('parses a complete event', () => {
    const p = new SseParser();
    const events = p.feed('event: snapshot\ndata: {"tick":1}\n\n');
    expect(events).toEqual([{ event: 'snapshot', data: '{"tick":1}' }]);
  });

  it('reassembles events split across chunks', () => {
    const p = new SseParser();
    expect(p.feed('event: al')).toEqual([]);
    expect(p.feed('ert\ndata: {"x"')).toEqual([]);
    const events = p.feed(':2}\n\nevent: snapshot\ndata: {}\n\n');
    expect(events).toEqual([
      { event: 'alert', data: '{"x":2}' },
      { event: 'snapshot', data: '{}' },
    ]);
  });

  it('ignores keepalive comments', () => {
    const p = new SseParser();
    expect(p.feed(': keepalive\n\n')).toEqual([]);
  });

  it('joins multi-line data fields', () => {
    const p = new SseParser();
    const events = p.feed('data: a\ndata: b\n\n');
    expect(events).toEqual([{ event: 'message', data: 'a\nb' }]);
  });

  it('defaults the event name to message', () => {
    const p = new SseParser();
    expect(p.feed('data: 1\n\n')[0].event).toBe('message');
  });
});
