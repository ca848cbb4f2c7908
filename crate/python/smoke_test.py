#!/usr/bin/env python3
"""Smoke test for the coaplab_py extension module.

Build the module first, then run this script from the repository root:

    cargo build --release -p coaplab-py
    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libcoaplab_py.so",
        REPO / "target" / "debug" / "libcoaplab_py.so",
        REPO / "target" / "release" / "libcoaplab_py.dylib",
        REPO / "target" / "debug" / "libcoaplab_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build --release -p coaplab-py")
    stage = Path(tempfile.mkdtemp(prefix="coaplab_py_"))
    shutil.copy(built, stage / "coaplab_py.so")
    sys.path.insert(0, str(stage))
    import coaplab_py

    return coaplab_py


def main():
    lab = load_module()
    print(f"coaplab_py {lab.__version__}")

    # CoAP codec: a bare confirmable GET has the canonical 4-byte header.
    get_bytes = lab.make_request("GET", b"", 1)
    assert get_bytes == bytes([0x40, 0x01, 0x00, 0x01]), get_bytes.hex()
    decoded = json.loads(lab.decode_message(get_bytes))
    assert decoded["code"] == "Get" and decoded["message_id"] == 1, decoded
    assert lab.encode_message(json.dumps(decoded)) == get_bytes

    put_bytes = lab.make_request("PUT", b"A" * 9203, 7)
    assert len(put_bytes) == 4 + 1 + 9203
    try:
        lab.make_request("GET", b"x", 0)
        raise AssertionError("GET with payload must fail")
    except ValueError:
        pass

    # Preprocessing primitives.
    normed = lab.frobenius_normalize([[3.0, 4.0]])
    assert math.isclose(normed[0][0], 0.6) and math.isclose(normed[0][1], 0.8)
    try:
        lab.frobenius_normalize([[0.0, 0.0]])
        raise AssertionError("zero matrix must fail")
    except ValueError:
        pass

    padded = lab.pad_windows([[[1.0, 2.0]], [[3.0, 4.0], [5.0, 6.0]]], [0.0, 0.0])
    assert [len(w) for w in padded] == [2, 2]
    assert padded[0][1] == [0.0, 0.0]

    tokens, table = lab.tokenize_column(["ack", "get", "ack", "put", "get"])
    assert tokens == [1, 2, 1, 3, 2]
    assert table == ["ack", "get", "put"]

    frac = lab.attack_fraction(661304, 138011 + 123012)
    assert abs(frac * 100 - 39.47) < 0.01, frac

    # Scenario generation and labeling at a tiny scale.
    out = Path(tempfile.mkdtemp(prefix="coaplab_run_"))
    config = json.loads(lab.default_config_json())
    config["duration"] = 120
    summary = json.loads(lab.generate_capture(json.dumps(config), str(out)))
    assert summary["attack_events"] == 2, summary
    assert summary["attack_packets"] == 600
    assert lab.pcap_packet_count(str(out / "capture.pcap")) == summary["total_packets"]

    label_summary = json.loads(
        lab.label_capture(
            str(out / "capture.pcap"),
            str(out / "attacks.json"),
            str(out / "labels.ndjson"),
        )
    )
    assert label_summary["malicious"] == 1, label_summary
    assert label_summary["disagreements"] == 0

    # A small end-to-end pipeline with the two fastest models.
    config["duration"] = 1300
    config["models"] = ["nb", "tree"]
    report = json.loads(lab.run_pipeline(json.dumps(config), str(out / "pipeline")))
    assert report["dataset"]["malicious_windows"] == 3, report["dataset"]
    for model in report["models"]:
        assert model["accuracy"] >= 0.99, model
        print(f"  {model['model']}: {model['accuracy_pct']}%")

    print("smoke test passed")


if __name__ == "__main__":
    main()
