// Entry point: vfactory-hmi [--port 8081] [--api http://127.0.0.1:8080]
//              [--replay-alerts alerts.jsonl --replay-dataset data/test]

import { createServer, loadReplayData, ReplayData } from './server.js';

function argValue(name: string): string | undefined {
  const idx = process.argv.indexOf(name);
  return idx >= 0 ? process.argv[idx + 1] : undefined;
}

async function main(): Promise<void> {
  const port = Number(argValue('--port') ?? 8081);
  const apiBase = argValue('--api') ?? 'http://127.0.0.1:8080';
  const alertsPath = argValue('--replay-alerts');
  const datasetDir = argValue('--replay-dataset');
  let replay: ReplayData | null = null;
  if (alertsPath && datasetDir) {
    replay = await loadReplayData(alertsPath, datasetDir);
    console.log(`replay: ${replay.truth.length} labeled windows, ` +
                `${replay.alerts.length} alerts`);
  }
  const server = createServer({ apiBase, replay });
  server.listen(port, () => {
    console.log(`dashboard on http://127.0.0.1:${port} -> testbed at ${apiBase}`);
  });
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
