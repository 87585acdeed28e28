"""Shared fixtures: real toolkit artifacts produced through its CLI.

The search package must interoperate with the packing toolkit purely
through files, so the fixtures shell out to ``dsppack`` to build the
throughput tables the tests consume.
"""

import json
import shutil
import subprocess

import pytest

from bitsearch.supernet import toy_network

DSPPACK = shutil.which("dsppack")


def run_dsppack(*args):
    assert DSPPACK, "dsppack CLI not on PATH"
    return subprocess.run([DSPPACK, *args], capture_output=True, text=True)


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    if DSPPACK is None:
        pytest.skip("dsppack CLI not installed")
    d = tmp_path_factory.mktemp("artifacts")
    for shape in ("3x3", "1x1"):
        res = run_dsppack("pack-table", "--kernel", shape,
                          "--allow-overpack", "--allow-separation",
                          "--exhaustive-bits", "16", "--samples", "20000",
                          "-o", str(d / f"lut{shape}.json"))
        assert res.returncode == 0, res.stderr
    net_doc = {"version": 1, "layers": toy_network()}
    (d / "net.json").write_text(json.dumps(net_doc, indent=2) + "\n")
    return d


@pytest.fixture(scope="session")
def lut_paths(artifacts):
    return [str(artifacts / "lut3x3.json"), str(artifacts / "lut1x1.json")]
