from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from railabel.config import load_config
from railabel.service import create_app

_acceptance_results: dict[str, str] = {}


class LiveServer:
    """A real uvicorn server on an ephemeral port, for HTTP-level tests."""

    def __init__(self, data_dir, config=None):
        self.data_dir = data_dir
        self.app = create_app(config or load_config(), data_dir)
        self._server = uvicorn.Server(
            uvicorn.Config(self.app, host="127.0.0.1", port=0, log_level="warning")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.url = None

    def start(self) -> "LiveServer":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)
        self.app.state.service.close()


@pytest.fixture
def live_server(tmp_path):
    server = LiveServer(tmp_path / "data").start()
    yield server
    server.stop()


def pytest_runtest_logreport(report):
    nodeid = getattr(report, "nodeid", "")
    if "test_acceptance.py::test_c" not in nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        if report.passed:
            outcome = "PASS"
        elif report.skipped:
            outcome = "SKIP"
        else:
            outcome = "FAIL"
        _acceptance_results[nodeid.split("::")[-1]] = outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in sorted(_acceptance_results.items()):
        terminalreporter.write_line(f"{name}: {outcome}")
