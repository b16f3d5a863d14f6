// Payload shapes of the testbed HTTP API (GET /state, /orders, /alerts).

export interface StationState {
  fresh: boolean;
  tick: number;
  values: Record<string, number>;
  params?: Record<string, number>;
}

export interface InventorySlot {
  x: number;
  y: number;
  color: string;
}

export interface Order {
  order_id: number;
  color: string;
  firing_time_ms: number;
  milling_time_ms: number;
  status: string;
  created_tick: number;
  status_ticks: Record<string, number>;
  error: string | null;
}

export interface Snapshot {
  tick: number;
  snapshot_tick: number;
  time_s: number | null;
  stations: Record<string, StationState>;
  inventory: InventorySlot[];
  orders: Order[];
  alerts: number;
  links: Record<string, 'fresh' | 'stale'>;
}

export interface Alert {
  detector: string;
  tick: number;
  subject: string;
  observed: number;
  bound: string;
  message: string;
}

export const STATIONS = ['vc', 'warehouse', 'furnace', 'mill', 'sorting'] as const;

export const ORDER_PIPELINE = [
  'queued', 'fetching', 'firing', 'milling', 'sorting', 'done',
] as const;
