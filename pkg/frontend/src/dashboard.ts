// Single-file dashboard served at /. Talks to the testbed through this
// server's /api proxy, so no CORS setup is needed anywhere. All times
// shown are simulation ticks from the server; the browser clock is only
// used to notice a dead event stream.

export function dashboardHtml(): string {
  return `<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width,initial-scale=1">
<title>factory line — operator dashboard</title>
<style>
  *{box-sizing:border-box;margin:0;padding:0}
  body{font-family:'Cascadia Code','SF Mono',Consolas,monospace;background:#0d1117;color:#c9d1d9;font-size:13px}
  header{background:#161b22;border-bottom:1px solid #30363d;padding:8px 14px;display:flex;gap:14px;align-items:center;flex-wrap:wrap}
  h1{font-size:14px;color:#f0f6fc}
  .dot{width:8px;height:8px;border-radius:50%;display:inline-block;margin-right:5px}
  .dot.live{background:#3fb950;animation:pulse 2s infinite}
  .dot.stale{background:#d29922}
  .dot.lost,.dot.connecting{background:#f85149}
  @keyframes pulse{0%,100%{opacity:1}50%{opacity:.4}}
  .muted{color:#8b949e;font-size:11px}
  main{display:grid;grid-template-columns:repeat(auto-fit,minmax(300px,1fr));gap:10px;padding:10px}
  .card{background:#161b22;border:1px solid #30363d;border-radius:6px;padding:10px}
  .card h2{font-size:12px;color:#8b949e;text-transform:uppercase;letter-spacing:.8px;margin-bottom:8px}
  .card.stale{opacity:.55;border-color:#d29922}
  .card .staleflag{color:#d29922;font-size:10px;float:right}
  .bar{background:#0d1117;border:1px solid #30363d;height:14px;border-radius:3px;overflow:hidden;margin:3px 0}
  .bar>i{display:block;height:100%;background:#1f6feb}
  .kv{display:flex;justify-content:space-between;font-size:11px;color:#8b949e}
  .kv b{color:#c9d1d9}
  .led{width:16px;height:16px;border-radius:50%;background:#21262d;display:inline-block;vertical-align:middle;border:1px solid #30363d}
  .led.on{background:#f85149;box-shadow:0 0 10px #f85149}
  table{width:100%;border-collapse:collapse;font-size:11px}
  th,td{text-align:left;padding:3px 6px;border-bottom:1px solid #21262d}
  th{color:#8b949e}
  .rack{display:grid;grid-template-columns:repeat(3,40px);gap:4px}
  .slot{width:40px;height:28px;border:1px solid #30363d;border-radius:3px;background:#0d1117;display:flex;align-items:center;justify-content:center;font-size:9px;color:#484f58}
  .slot.red{background:#6e1b1b;color:#ffb3b3}.slot.white{background:#6b6b5f;color:#fff}.slot.blue{background:#173a5e;color:#a5c8f0}
  .bays{display:flex;gap:8px}
  .bay{flex:1;text-align:center;border:1px solid #30363d;border-radius:4px;padding:6px}
  .bay b{font-size:18px;display:block}
  form{display:flex;gap:6px;flex-wrap:wrap;align-items:center}
  input,select,button{background:#0d1117;color:#c9d1d9;border:1px solid #30363d;border-radius:4px;padding:4px 8px;font:inherit}
  button{cursor:pointer;background:#1f6feb;border-color:#1f6feb;color:#fff}
  button:disabled{opacity:.5;cursor:default}
  .err{color:#f85149;font-size:11px;min-height:14px}
  .ok{color:#3fb950;font-size:11px}
  .feed{max-height:220px;overflow-y:auto}
  .alert{border-left:3px solid #f85149;padding:2px 6px;margin:3px 0;font-size:11px;background:#0d1117}
  .status-queued{color:#8b949e}.status-fetching{color:#d29922}.status-firing{color:#f85149}
  .status-milling{color:#bc8cff}.status-sorting{color:#58a6ff}.status-done{color:#3fb950}
  .status-failed{color:#f85149;font-weight:700}
  canvas{width:100%;height:140px;background:#0d1117;border:1px solid #30363d;border-radius:4px}
</style>
</head>
<body>
<header>
  <h1>factory line</h1>
  <span><i id="conn-dot" class="dot connecting"></i><span id="conn-text">connecting</span></span>
  <span class="muted">tick <b id="tick">—</b> · sampled <b id="snap-tick">—</b> · sim <b id="sim-time">—</b>s</span>
  <span class="muted" id="alert-count"></span>
</header>
<main>
  <div class="card" id="card-vc">
    <h2>vacuum gripper <span class="staleflag"></span></h2>
    <div class="kv"><span>rotation</span><b data-v="vc.rotation">—</b></div><div class="bar"><i data-bar="vc.rotation" data-max="1000"></i></div>
    <div class="kv"><span>horizontal</span><b data-v="vc.horizontal">—</b></div><div class="bar"><i data-bar="vc.horizontal" data-max="600"></i></div>
    <div class="kv"><span>vertical</span><b data-v="vc.vertical">—</b></div><div class="bar"><i data-bar="vc.vertical" data-max="900"></i></div>
    <div class="kv"><span>holding workpiece</span><b data-v="vc.has_cylinder">—</b></div>
  </div>
  <div class="card" id="card-warehouse">
    <h2>warehouse <span class="staleflag"></span></h2>
    <div style="display:flex;gap:12px">
      <div><div class="muted">rack (x →, y ↓)</div><div class="rack" id="rack"></div></div>
      <div style="flex:1">
        <div class="kv"><span>cantilever x</span><b data-v="warehouse.cantilever_x">—</b></div>
        <div class="kv"><span>cantilever y</span><b data-v="warehouse.cantilever_y">—</b></div>
        <div class="kv"><span>color sensor</span><b data-v="warehouse.color_reading">—</b></div>
        <div class="kv"><span>carrying</span><b data-v="warehouse.carrying">—</b></div>
      </div>
    </div>
  </div>
  <div class="card" id="card-furnace">
    <h2>furnace <span class="staleflag"></span></h2>
    <p>oven <span id="oven-led" class="led"></span>
       <span class="muted">platform <b data-v="furnace.platform_inside">—</b>=in <b data-v="furnace.platform_outside">—</b>=out</span></p>
    <form id="param-form" style="margin-top:8px">
      <label class="muted">firing ms</label>
      <input id="param-value" type="number" value="1000" min="0" max="60000" style="width:90px">
      <button type="submit">write</button>
      <span id="param-msg" class="err"></span>
    </form>
    <div class="kv"><span>confirmed firing_time_ms</span><b id="param-readback">—</b></div>
  </div>
  <div class="card" id="card-mill">
    <h2>mill <span class="staleflag"></span></h2>
    <div class="kv"><span>transport</span><b data-v="mill.transport_pos">—</b></div><div class="bar"><i data-bar="mill.transport_pos" data-max="600"></i></div>
    <div class="kv"><span>motor</span><b data-v="mill.mill_motor">—</b></div>
    <div class="kv"><span>workpiece at mill</span><b data-v="mill.cyl_at_mill">—</b></div>
  </div>
  <div class="card" id="card-sorting">
    <h2>sorting <span class="staleflag"></span></h2>
    <div class="bays">
      <div class="bay">white<b id="bay-white">—</b></div>
      <div class="bay">red<b id="bay-red">—</b></div>
      <div class="bay">blue<b id="bay-blue">—</b></div>
    </div>
    <div class="kv" style="margin-top:6px"><span>belt</span><b data-v="sorting.belt_pos">—</b></div>
    <div class="kv"><span>color sensor</span><b data-v="sorting.color_reading">—</b></div>
  </div>
  <div class="card">
    <h2>place order</h2>
    <form id="order-form">
      <select id="order-color"><option>red</option><option>white</option><option>blue</option></select>
      <label class="muted">fire ms</label><input id="order-firing" type="number" value="1000" min="0" max="60000" style="width:80px">
      <label class="muted">mill ms</label><input id="order-milling" type="number" value="1000" min="0" max="60000" style="width:80px">
      <button type="submit" id="order-btn">order</button>
      <span id="order-msg" class="err"></span>
    </form>
    <table style="margin-top:8px"><thead><tr><th>#</th><th>color</th><th>status</th><th>placed</th></tr></thead>
    <tbody id="orders"></tbody></table>
  </div>
  <div class="card">
    <h2>alert feed</h2>
    <div class="feed" id="alerts"><div class="muted">no alerts</div></div>
  </div>
  <div class="card" id="replay-card" style="display:none">
    <h2>replay: alerts vs ground truth</h2>
    <canvas id="replay-canvas" width="900" height="140"></canvas>
    <div class="muted" id="replay-legend"></div>
  </div>
</main>
<script>
const api = (p) => '/api' + p;
let vm = {connection:'connecting', snap:null, lastEventAt:null, alerts:[]};

function setConn(state){
  vm.connection = state;
  document.getElementById('conn-dot').className = 'dot ' + state;
  document.getElementById('conn-text').textContent = state;
}

function fmt(v){ return v === undefined ? '—' : v; }

function render(){
  const snap = vm.snap;
  if(!snap) return;
  document.getElementById('tick').textContent = snap.tick;
  document.getElementById('snap-tick').textContent = snap.snapshot_tick;
  document.getElementById('sim-time').textContent = (snap.time_s ?? 0).toFixed(1);
  document.getElementById('alert-count').textContent = vm.alerts.length ? vm.alerts.length + ' alerts' : '';
  const links = Object.values(snap.links || {});
  if(links.length && links.every(s => s === 'stale')) setConn('stale');
  else if(vm.connection !== 'lost') setConn('live');
  for(const el of document.querySelectorAll('[data-v]')){
    const [st, name] = el.dataset.v.split('.');
    el.textContent = fmt(snap.stations[st]?.values?.[name]);
  }
  for(const el of document.querySelectorAll('[data-bar]')){
    const [st, name] = el.dataset.bar.split('.');
    const v = snap.stations[st]?.values?.[name] ?? 0;
    el.style.width = Math.min(100, 100 * v / (+el.dataset.max)) + '%';
  }
  for(const st of ['vc','warehouse','furnace','mill','sorting']){
    const card = document.getElementById('card-' + st);
    const fresh = snap.stations[st]?.fresh && vm.connection !== 'lost';
    card.classList.toggle('stale', !fresh);
    card.querySelector('.staleflag').textContent =
      fresh ? '' : 'stale @' + (snap.stations[st]?.tick ?? '?');
  }
  document.getElementById('oven-led').classList.toggle('on',
    (snap.stations.furnace?.values?.oven_led ?? 0) === 1);
  document.getElementById('param-readback').textContent =
    fmt(snap.stations.furnace?.params?.firing_time_ms);
  const rack = document.getElementById('rack');
  const grid = [[null,null,null],[null,null,null],[null,null,null]];
  for(const s of snap.inventory || []) grid[s.y-1][s.x-1] = s.color;
  rack.innerHTML = grid.map((row,y) => row.map((c,x) =>
    '<div class="slot ' + (c||'') + '">' + (c || (x+1)+','+(y+1)) + '</div>').join('')).join('');
  const bays = snap.stations.sorting?.values || {};
  for(const c of ['white','red','blue'])
    document.getElementById('bay-'+c).textContent = fmt(bays['bay_'+c]);
  document.getElementById('orders').innerHTML = (snap.orders || []).map(o =>
    '<tr><td>' + o.order_id + '</td><td>' + o.color + '</td>' +
    '<td class="status-' + o.status + '">' + o.status + (o.error ? ' ('+o.error+')' : '') + '</td>' +
    '<td>@' + o.created_tick + '</td></tr>').join('') ||
    '<tr><td colspan="4" class="muted">none</td></tr>';
}

function renderAlerts(){
  const feed = document.getElementById('alerts');
  if(!vm.alerts.length){ feed.innerHTML = '<div class="muted">no alerts</div>'; return; }
  feed.innerHTML = vm.alerts.slice(0, 100).map(a =>
    '<div class="alert"><b>' + a.detector + '</b> @' + a.tick + ' — ' + a.message + '</div>').join('');
}

document.getElementById('order-form').addEventListener('submit', async (e) => {
  e.preventDefault();
  const msg = document.getElementById('order-msg');
  msg.className = 'err'; msg.textContent = '';
  const body = {
    color: document.getElementById('order-color').value,
    firing_time_ms: +document.getElementById('order-firing').value,
    milling_time_ms: +document.getElementById('order-milling').value,
  };
  try {
    const resp = await fetch(api('/orders'), {method:'POST',
      headers:{'Content-Type':'application/json'}, body: JSON.stringify(body)});
    const payload = await resp.json();
    if(resp.status === 201){ msg.className='ok'; msg.textContent='order #' + payload.order_id + ' queued'; }
    else if(resp.status === 409) msg.textContent = 'out of stock: ' + body.color;
    else if(resp.status === 422) msg.textContent = 'invalid: ' + (payload.detail || 'parameters');
    else msg.textContent = 'failed (' + resp.status + ')';
  } catch(err){ msg.textContent = 'request failed — link down?'; }
});

document.getElementById('param-form').addEventListener('submit', async (e) => {
  e.preventDefault();
  const msg = document.getElementById('param-msg');
  msg.className = 'err'; msg.textContent = '';
  const value = +document.getElementById('param-value').value;
  try {
    const resp = await fetch(api('/plcs/furnace/params/firing_time_ms'),
      {method:'PUT', headers:{'Content-Type':'application/json'}, body: JSON.stringify({value})});
    const payload = await resp.json();
    if(resp.ok){ msg.className='ok'; msg.textContent='written; awaiting read-back'; }
    else if(resp.status === 422) msg.textContent = 'bounds ' + JSON.stringify(payload.bounds);
    else if(resp.status === 504){ msg.textContent = 'timed out — retry?'; }
    else msg.textContent = 'failed (' + resp.status + ')';
  } catch(err){ msg.textContent = 'request failed — link down?'; }
});

async function refresh(){
  try {
    const resp = await fetch(api('/state'));
    vm.snap = await resp.json();
    vm.lastEventAt = Date.now();
    render();
  } catch(err){ setConn('lost'); }
}

function connectEvents(){
  const es = new EventSource(api('/events'));
  es.addEventListener('snapshot', (e) => {
    vm.snap = JSON.parse(e.data); vm.lastEventAt = Date.now(); render();
  });
  es.addEventListener('alert', (e) => {
    vm.alerts.unshift(JSON.parse(e.data)); renderAlerts(); render();
  });
  es.onerror = () => { setConn('lost'); };
}

setInterval(() => {
  if(vm.lastEventAt && Date.now() - vm.lastEventAt > 3000) setConn('lost');
}, 1000);
setInterval(refresh, 2000);  // snapshot poll backstop for missed pushes

async function loadReplay(){
  try {
    const resp = await fetch('/replay');
    if(!resp.ok) return;
    const replay = await resp.json();
    if(!replay.truth || !replay.truth.length) return;
    document.getElementById('replay-card').style.display = '';
    const canvas = document.getElementById('replay-canvas');
    const ctx = canvas.getContext('2d');
    const detectors = [...new Set(replay.alerts.map(a => a.detector))].sort();
    const maxTick = replay.total_ticks ||
      Math.max(...replay.truth.map(t => t.end_tick));
    const x = (tick) => 40 + (canvas.width - 50) * tick / maxTick;
    ctx.fillStyle = '#f85149';
    for(const t of replay.truth) {
      ctx.fillRect(x(t.start_tick), 8, Math.max(2, x(t.end_tick) - x(t.start_tick)), 10);
    }
    detectors.forEach((d, i) => {
      const y = 30 + i * 24;
      ctx.fillStyle = '#8b949e'; ctx.font = '10px monospace';
      ctx.fillText(d, 2, y + 8);
      ctx.fillStyle = '#58a6ff';
      for(const a of replay.alerts.filter(a => a.detector === d))
        ctx.fillRect(x(a.tick), y, 1.5, 12);
    });
    document.getElementById('replay-legend').textContent =
      'red: labeled attack windows · blue: detector alerts · ' +
      replay.truth.map(t => t.label).join(', ');
  } catch(err) { /* replay data is optional */ }
}

refresh();
connectEvents();
loadReplay();
</script>
</body>
</html>`;
}
