#!/usr/bin/env python3
"""Serve the synthetic test world on an ephemeral port (integration tests).

Prints `PORT <n>` on stdout once the socket is bound, then streams in
fast-forward mode until killed.
"""

import asyncio
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent.parent / "tests"))

import worldbuild  # noqa: E402
from splatphys.runtime.bundle import build_bundle  # noqa: E402
from splatphys.runtime.service import serve_bundle  # noqa: E402


async def main():
    with tempfile.TemporaryDirectory() as tmp:
        config_path = worldbuild.write_world(Path(tmp))
        bundle = build_bundle(config_path)

    def announce(port):
        print(f"PORT {port}", flush=True)

    await serve_bundle(bundle, port=0, realtime=False, on_ready=announce)


if __name__ == "__main__":
    asyncio.run(main())
