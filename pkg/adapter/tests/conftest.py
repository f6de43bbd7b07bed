import contextlib
import threading
import time

import pytest
import uvicorn

from speechcorpus_adapter.app import create_app
from speechcorpus_adapter.config import AdapterConfig


@contextlib.contextmanager
def running_adapter(config: AdapterConfig | None = None):
    """Serve the adapter on an ephemeral port in a background thread and
    yield its base URL."""
    app = create_app(config or AdapterConfig())
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if not thread.is_alive() or time.monotonic() > deadline:
            raise RuntimeError("adapter server failed to start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)


@pytest.fixture
def serve_adapter():
    return running_adapter


@pytest.fixture(scope="module")
def stub_adapter_url():
    with running_adapter() as url:
        yield url
