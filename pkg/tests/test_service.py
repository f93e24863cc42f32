import json
import threading

import pytest
from fastapi.testclient import TestClient

from bubbleseg.config import PipelineConfig, pipeline_config_from_dict
from bubbleseg.core import read_image
from bubbleseg.pipeline import segment_image
from bubbleseg.service import create_app
from bubbleseg.synth import SynthConfig, generate_dataset


@pytest.fixture(scope="module")
def root(tmp_path_factory):
    out = tmp_path_factory.mktemp("dataset")
    cfg = SynthConfig(width=48, height=48, n_bubbles=(3, 5), seed=21)
    generate_dataset(cfg, 3, out, train_count=2)
    return out


@pytest.fixture
def client(root):
    return TestClient(create_app(str(root), PipelineConfig()))


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "images": 3}


def test_list_images(client):
    r = client.get("/api/images")
    assert r.status_code == 200
    entries = {e["id"]: e for e in r.json()}
    assert set(entries) == {"train_000", "train_001", "test_002"}
    assert entries["test_002"]["split"] == "test"
    assert entries["test_002"]["image"].endswith("test_002.png")


def test_image_bytes(client, root):
    r = client.get("/api/images/test_002")
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.content == (root / "images" / "test_002.png").read_bytes()


def test_unknown_image_404(client):
    assert client.get("/api/images/nope").status_code == 404
    assert client.get("/api/annotations/nope").status_code == 404
    assert client.put("/api/annotations/nope", json={}).status_code == 404
    assert client.post("/api/segment/nope").status_code == 404


def test_get_annotation_has_revision(client, root):
    r = client.get("/api/annotations/test_002")
    assert r.status_code == 200
    obj = r.json()
    assert obj["revision"] == 0
    on_disk = json.loads((root / "annotations" / "test_002.json").read_text())
    assert obj["instances"] == on_disk["instances"]


def test_put_round_trip(client):
    obj = client.get("/api/annotations/train_000").json()
    base = obj["revision"]
    saved = client.put("/api/annotations/train_000", json=obj)
    assert saved.status_code == 200
    assert saved.json()["revision"] == base + 1
    again = client.get("/api/annotations/train_000").json()
    body = saved.json()
    assert again == body
    # the annotation payload survives untouched, only the revision moves
    assert {k: v for k, v in again.items() if k != "revision"} == \
        {k: v for k, v in obj.items() if k != "revision"}


def test_stale_revision_409_no_data_loss(client):
    obj = client.get("/api/annotations/train_001").json()
    first = dict(obj)
    assert client.put("/api/annotations/train_001", json=first).status_code == 200
    # a second writer based on the old revision must be rejected
    stale = dict(obj)
    stale["instances"] = []
    r = client.put("/api/annotations/train_001", json=stale)
    assert r.status_code == 409
    current = client.get("/api/annotations/train_001").json()
    assert current["instances"] == obj["instances"]


def test_put_requires_revision(client):
    obj = client.get("/api/annotations/test_002").json()
    obj.pop("revision")
    assert client.put("/api/annotations/test_002", json=obj).status_code == 400


def test_put_malformed_body(client):
    obj = client.get("/api/annotations/test_002").json()
    obj["instances"] = [{"id": 1}]   # missing rle/source/size_class
    assert client.put("/api/annotations/test_002", json=obj).status_code == 400
    assert client.put("/api/annotations/test_002",
                      json={"revision": 0}).status_code == 400


def test_concurrent_puts_single_winner(root):
    app = create_app(str(root), PipelineConfig())
    client = TestClient(app)
    obj = client.get("/api/annotations/test_002").json()
    statuses = []

    def writer():
        statuses.append(
            client.put("/api/annotations/test_002", json=dict(obj)).status_code)

    threads = [threading.Thread(target=writer) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert statuses.count(200) == 1
    assert statuses.count(409) == 5
    assert client.get("/api/annotations/test_002").json()["revision"] == \
        obj["revision"] + 1


def test_segment_matches_library_call(client, root):
    overrides = {"small_only": True}
    r = client.post("/api/segment/test_002", json=overrides)
    assert r.status_code == 200
    img = read_image(root / "images" / "test_002.png")
    expected = segment_image(img, None, None,
                             pipeline_config_from_dict(overrides),
                             image_id="test_002")
    assert r.json() == expected.to_json()


def test_segment_rejects_bad_overrides(client):
    r = client.post("/api/segment/test_002", json={"not_a_key": 1})
    assert r.status_code == 400
    r = client.post("/api/segment/test_002",
                    json={"checkpoint": "/nonexistent.mtnp"})
    assert r.status_code == 400
