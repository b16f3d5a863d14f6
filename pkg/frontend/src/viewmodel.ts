// Pure view-model reducers: everything the dashboard shows derives from
// these, so they carry the staleness and ordering rules and stay
// testable without a browser.
//
// Invariants: every displayed value keeps the tick it was sampled at,
// and staleness is always explicit — a dead link shows as stale data,
// never as silently frozen numbers.

import { Alert, Order, Snapshot, STATIONS } from './types.js';

export type Connection = 'connecting' | 'live' | 'stale' | 'lost';

export interface ViewModel {
  connection: Connection;
  lastSnapshot: Snapshot | null;
  lastEventAt: number | null; // ms timestamp of the last server push
  alerts: Alert[];
  pendingOrders: Order[]; // optimistic rows not yet seen in a snapshot
}

export function initialViewModel(): ViewModel {
  return {
    connection: 'connecting',
    lastSnapshot: null,
    lastEventAt: null,
    alerts: [],
    pendingOrders: [],
  };
}

export function applySnapshot(vm: ViewModel, snap: Snapshot, nowMs: number): ViewModel {
  const links = Object.values(snap.links ?? {});
  const allStale = links.length > 0 && links.every((s) => s === 'stale');
  const known = new Set(snap.orders.map((o) => o.order_id));
  return {
    ...vm,
    connection: allStale ? 'stale' : 'live',
    lastSnapshot: snap,
    lastEventAt: nowMs,
    pendingOrders: vm.pendingOrders.filter((o) => !known.has(o.order_id)),
  };
}

export function applyAlert(vm: ViewModel, alert: Alert, maxFeed = 200): ViewModel {
  const alerts = [alert, ...vm.alerts];
  if (alerts.length > maxFeed) alerts.length = maxFeed;
  return { ...vm, alerts };
}

export function applyOptimisticOrder(vm: ViewModel, order: Order): ViewModel {
  return { ...vm, pendingOrders: [...vm.pendingOrders, order] };
}

/** Mark the connection lost when no push arrived within the deadline. */
export function applyTimeout(vm: ViewModel, nowMs: number, deadlineMs: number): ViewModel {
  if (vm.lastEventAt !== null && nowMs - vm.lastEventAt <= deadlineMs) return vm;
  if (vm.connection === 'connecting') return vm;
  return { ...vm, connection: 'lost' };
}

export interface StationRow {
  station: string;
  fresh: boolean;
  sampledTick: number;
  values: Record<string, number>;
}

export function stationRows(vm: ViewModel): StationRow[] {
  const snap = vm.lastSnapshot;
  if (!snap) return [];
  return STATIONS.map((station) => {
    const st = snap.stations[station];
    return {
      station,
      fresh: !!st?.fresh && vm.connection !== 'lost',
      sampledTick: st?.tick ?? -1,
      values: st?.values ?? {},
    };
  });
}

export interface OrderRow extends Order {
  pending: boolean;
}

export function orderRows(vm: ViewModel): OrderRow[] {
  const seen: OrderRow[] = (vm.lastSnapshot?.orders ?? []).map((o) => ({
    ...o,
    pending: false,
  }));
  const optimistic: OrderRow[] = vm.pendingOrders.map((o) => ({ ...o, pending: true }));
  return [...seen, ...optimistic].sort((a, b) => a.order_id - b.order_id);
}

/** 3x3 rack as rows of (color | null), y=1 on top. */
export function rackGrid(vm: ViewModel): (string | null)[][] {
  const grid: (string | null)[][] = [1, 2, 3].map(() => [null, null, null]);
  for (const slot of vm.lastSnapshot?.inventory ?? []) {
    if (slot.x >= 1 && slot.x <= 3 && slot.y >= 1 && slot.y <= 3) {
      grid[slot.y - 1][slot.x - 1] = slot.color;
    }
  }
  return grid;
}

export function ovenLit(vm: ViewModel): boolean {
  return (vm.lastSnapshot?.stations['furnace']?.values['oven_led'] ?? 0) === 1;
}

export interface BayCounts {
  white: number;
  red: number;
  blue: number;
}

export function bayCounts(vm: ViewModel): BayCounts {
  const v = vm.lastSnapshot?.stations['sorting']?.values ?? {};
  return {
    white: v['bay_white'] ?? 0,
    red: v['bay_red'] ?? 0,
    blue: v['bay_blue'] ?? 0,
  };
}

export function validateOrderForm(color: string, firingMs: number, millingMs: number):
    string | null {
  if (!['red', 'white', 'blue'].includes(color)) return 'pick a color';
  for (const [label, v] of [['firing', firingMs], ['milling', millingMs]] as const) {
    if (!Number.isInteger(v) || v < 0 || v > 60000) {
      return `${label} time must be an integer in 0..60000 ms`;
    }
  }
  return null;
}
