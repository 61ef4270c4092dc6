from __future__ import annotations

import json
import random
import re
import threading
import time
from collections import Counter
from datetime import date, timedelta
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

# -- synthetic raw data -----------------------------------------------------------


def write_daily_csv(
    path: Path,
    start: date,
    n_days: int,
    keys: list[str],
    value_fn=None,
    header=("object", "timestamp", "value"),
    delimiter=",",
) -> Path:
    """One row per (key, day); values default to a deterministic integer pattern."""
    if value_fn is None:
        value_fn = lambda k, i, d: float((i * 7 + k * 13) % 90 - 20)  # noqa: E731
    lines = [delimiter.join(header)]
    for k, key in enumerate(keys):
        for i in range(n_days):
            d = start + timedelta(days=i)
            lines.append(delimiter.join([key, d.isoformat(), repr(value_fn(k, i, d))]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_config(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def synthetic_experiment(
    root: Path,
    scenarios: dict[str, dict],
    backends: list[dict] | None = None,
    seeds: list[int] | None = None,
    protocol: dict | None = None,
    **extra,
) -> Path:
    """Write raw CSVs plus a JSON config; returns the config path.

    Each scenario entry takes ``start``, ``days``, ``objects`` and optionally
    ``template``, ``split``, ``extra_objects`` (complete objects beyond the
    selection) and ``value_fn``.
    """
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, sc in scenarios.items():
        start = sc["start"]
        n_obj = sc["objects"] + sc.get("extra_objects", 0)
        keys = [f"{name}-key-{k:04d}" for k in range(n_obj)]
        write_daily_csv(root / f"{name}.csv", start, sc["days"], keys, sc.get("value_fn"))
        entries.append(
            {
                "name": name,
                "template": sc.get("template", name),
                "input": {"path": f"{name}.csv"},
                "ingest": {
                    "collection_start": start.isoformat(),
                    "collection_end": (start + timedelta(days=sc["days"] - 1)).isoformat(),
                    "objects": sc["objects"],
                    "selection_seed": sc.get("selection_seed", 0),
                },
                "split": sc.get("split", {"ratio": [7, 1, 2]}),
            }
        )
    data = {
        "output_dir": "out",
        "seeds": seeds or [0],
        "scenarios": entries,
        "backends": backends or [{"name": "cy"}],
        "protocol": protocol or {"kind": "standard"},
        **extra,
    }
    return write_config(root / "config.json", data)


# -- stub generation service -------------------------------------------------------


class StubState:
    """Behaviour knobs for the stub server, shared with the handler threads."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.requests: Counter[str] = Counter()
        self.transient: dict[str, int] = {}  # prompt -> failures still to inject
        self.permanent: set[str] = set()
        self.reply = lambda prompt: "OK"
        self.max_delay = 0.0
        self.payloads: list[dict] = []
        self.headers: list[dict] = []


class _Handler(BaseHTTPRequestHandler):
    state: StubState

    def log_message(self, *args) -> None:  # silence test output
        pass

    def do_POST(self) -> None:
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        prompt = body["prompt"]
        st = self.state
        with st.lock:
            st.requests[prompt] += 1
            st.payloads.append(body)
            st.headers.append(dict(self.headers))
            fail = prompt in st.permanent
            if not fail and st.transient.get(prompt, 0) > 0:
                st.transient[prompt] -= 1
                fail = True
        if st.max_delay:
            time.sleep(random.uniform(0, st.max_delay))
        if fail:
            self.send_response(503)
            self.end_headers()
            return
        data = json.dumps({"text": st.reply(prompt)}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_server():
    state = StubState()
    handler = type("Handler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}/generate"
    yield url, state
    server.shutdown()
    server.server_close()


def prompt_number(prompt: str) -> int:
    return int(re.search(r"-?\d+", prompt).group())


# -- acceptance summary ---------------------------------------------------------------

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        prev = _acceptance.get(name)
        if prev != "failed":
            _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
