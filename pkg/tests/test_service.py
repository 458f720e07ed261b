"""HTTP facade: phase machine, optimistic concurrency, what-if isolation."""

import hashlib
import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sprayopt import campaign as camp
from sprayopt import oracle, service
from sprayopt.process import ControllableInputs


@pytest.fixture(scope="module")
def sim():
    return oracle.SimulatedProcess(
        state=oracle.EquipmentState(voltage_offset=2.0))


@pytest.fixture(scope="module")
def init_csv(sim):
    design = oracle.load_default_design()[:25]
    history = sim.generate_initialization(design, seed=0)
    return camp.history_to_csv(history)


@pytest.fixture()
def client(tmp_path):
    app = service.create_app(tmp_path / "store")
    with TestClient(app) as c:
        c.store_dir = tmp_path / "store"
        yield c


def create_campaign(client, init_csv, cid="c1", batch_size=3):
    r = client.post("/campaigns", json={
        "id": cid, "initial_csv": init_csv, "seed": 3,
        "config": {"candidate_count": 300,
                   "optimizer": {"batch_size": batch_size}}})
    assert r.status_code == 200, r.text
    return r.json()


def ignite(client, cid, revision):
    r = client.post(f"/campaigns/{cid}/session", json={
        "revision": revision, "settings_index": 0, "voltage": 64.0})
    assert r.status_code == 200, r.text
    return r.json()


def measured_rows(client, cid, sim, seed=0):
    state = client.get(f"/campaigns/{cid}").json()
    rows = []
    rng = np.random.default_rng(seed)
    for i, cand in enumerate(state["pending"]["proposal"]["candidates"]):
        x_c = ControllableInputs.from_array(cand["x"][:6])
        e = sim.measure(x_c, "A", rng)
        rows.append({
            "batch_id": state["pending"]["batch_id"],
            "candidate_index": str(i),
            "microhardness_HV": repr(e.measurements["microhardness_HV"]),
            "porosity_pct": repr(e.measurements["porosity_pct"]),
            "measured_voltage_V": repr(e.x.voltage),
            "dropped_flag": "",
        })
    return rows, state["pending"]["batch_id"]


def file_hash(client, cid):
    return hashlib.sha256(
        (client.store_dir / f"{cid}.json").read_bytes()).hexdigest()


class TestPhaseMachine:
    def test_happy_path_drives_phases(self, client, init_csv, sim):
        created = create_campaign(client, init_csv)
        assert created["phase"] == "NeedsIgnition"
        ig = ignite(client, "c1", created["revision"])
        assert ig["phase"] == "ReadyToPropose"
        pr = client.post("/campaigns/c1/batch",
                         json={"revision": ig["revision"]})
        assert pr.status_code == 200
        assert pr.json()["phase"] == "AwaitingResults"
        rows, _ = measured_rows(client, "c1", sim)
        r = client.post("/campaigns/c1/results", json={
            "revision": pr.json()["revision"], "rows": rows})
        assert r.status_code == 200
        assert r.json()["phase"] in ("ReadyToPropose", "Terminated")
        assert all(rep["status"] == "accepted"
                   for rep in r.json()["reports"])

    def test_propose_in_wrong_phase_is_409(self, client, init_csv):
        created = create_campaign(client, init_csv, cid="c2")
        r = client.post("/campaigns/c2/batch",
                        json={"revision": created["revision"]})
        assert r.status_code == 409

    def test_unknown_campaign_is_404(self, client):
        assert client.get("/campaigns/nope").status_code == 404
        r = client.post("/campaigns/nope/batch", json={"revision": 0})
        assert r.status_code == 404

    def test_drop_then_partial_ingest(self, client, init_csv, sim):
        created = create_campaign(client, init_csv, cid="c3")
        ig = ignite(client, "c3", created["revision"])
        pr = client.post("/campaigns/c3/batch",
                         json={"revision": ig["revision"]}).json()
        dr = client.post("/campaigns/c3/batch/1/drop",
                         json={"revision": pr["revision"]})
        assert dr.status_code == 200
        rows, _ = measured_rows(client, "c3", sim)
        rows = [r for i, r in enumerate(rows) if i != 1]
        r = client.post("/campaigns/c3/results", json={
            "revision": dr.json()["revision"], "rows": rows})
        assert r.status_code == 200
        assert r.json()["phase"] in ("ReadyToPropose", "Terminated")

    def test_csv_body_ingestion(self, client, init_csv, sim):
        created = create_campaign(client, init_csv, cid="c4")
        ig = ignite(client, "c4", created["revision"])
        pr = client.post("/campaigns/c4/batch",
                         json={"revision": ig["revision"]}).json()
        rows, batch_id = measured_rows(client, "c4", sim)
        cols = ["batch_id", "candidate_index", "microhardness_HV",
                "porosity_pct", "measured_voltage_V", "dropped_flag"]
        lines = [",".join(cols)]
        for row in rows:
            lines.append(",".join(row.get(c, "") for c in cols))
        r = client.post(
            f"/campaigns/c4/results?revision={pr['revision']}",
            content="\n".join(lines),
            headers={"content-type": "text/csv"})
        assert r.status_code == 200, r.text
        assert all(rep["status"] == "accepted"
                   for rep in r.json()["reports"])

    def test_validation_error_has_row_detail(self, client, init_csv, sim):
        created = create_campaign(client, init_csv, cid="c5")
        ig = ignite(client, "c5", created["revision"])
        pr = client.post("/campaigns/c5/batch",
                         json={"revision": ig["revision"]}).json()
        rows, _ = measured_rows(client, "c5", sim)
        rows[0]["porosity_pct"] = "garbage"
        r = client.post("/campaigns/c5/results", json={
            "revision": pr["revision"], "rows": rows})
        assert r.status_code == 200
        reports = r.json()["reports"]
        assert reports[0]["status"] == "rejected"
        assert "garbage" in reports[0]["message"] or \
            "could not convert" in reports[0]["message"]

    def test_finish_returns_incumbent(self, client, init_csv):
        created = create_campaign(client, init_csv, cid="c6")
        r = client.post("/campaigns/c6/finish",
                        json={"revision": created["revision"]})
        assert r.status_code == 200
        assert r.json()["phase"] == "Terminated"
        assert r.json()["incumbent_present"] is False


class TestConcurrencyAndIsolation:
    def test_stale_revision_rejected(self, client, init_csv):
        created = create_campaign(client, init_csv, cid="c7")
        ignite(client, "c7", created["revision"])
        # the revision advanced; replaying the old one must fail
        r = client.post("/campaigns/c7/session", json={
            "revision": created["revision"], "settings_index": 0,
            "voltage": 64.0})
        assert r.status_code == 409

    def test_exactly_one_of_two_concurrent_ingests_wins(self, client,
                                                        init_csv, sim):
        created = create_campaign(client, init_csv, cid="c8")
        ig = ignite(client, "c8", created["revision"])
        pr = client.post("/campaigns/c8/batch",
                         json={"revision": ig["revision"]}).json()
        rows, _ = measured_rows(client, "c8", sim)
        results = []

        def submit():
            r = client.post("/campaigns/c8/results", json={
                "revision": pr["revision"], "rows": rows})
            results.append(r.status_code)

        threads = [threading.Thread(target=submit) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == [200, 409]

    def test_get_and_whatif_do_not_mutate_persisted_state(self, client,
                                                          init_csv, sim):
        created = create_campaign(client, init_csv, cid="c9")
        ig = ignite(client, "c9", created["revision"])
        client.post("/campaigns/c9/batch", json={"revision": ig["revision"]})
        h0 = file_hash(client, "c9")
        client.get("/campaigns/c9")
        rows, _ = measured_rows(client, "c9", sim)
        rows[0]["microhardness_HV"] = "650.0"
        rows[0]["porosity_pct"] = "7.0"
        w = client.post("/campaigns/c9/whatif", json={"rows": rows})
        assert w.status_code == 200
        assert w.json()["incumbent_present"] is True
        assert file_hash(client, "c9") == h0
        # state endpoint still shows the untouched pending batch
        state = client.get("/campaigns/c9").json()
        assert state["pending"] is not None
        assert state["incumbent"]["present"] is False

    def test_whatif_incumbent_not_worse_than_current(self, client, init_csv,
                                                     sim):
        created = create_campaign(client, init_csv, cid="c10")
        ig = ignite(client, "c10", created["revision"])
        pr = client.post("/campaigns/c10/batch",
                         json={"revision": ig["revision"]}).json()
        rows, _ = measured_rows(client, "c10", sim)
        for row in rows:
            row["microhardness_HV"] = "650.0"
            row["porosity_pct"] = "7.0"
        w = client.post("/campaigns/c10/whatif", json={"rows": rows}).json()
        costs = [c["cost"] for c in pr["proposal"]["candidates"]]
        assert w["incumbent_cost"] == pytest.approx(min(costs))

    def test_config_endpoint_serves_bands(self, client, init_csv):
        create_campaign(client, init_csv, cid="c11")
        r = client.get("/campaigns/c11/config")
        assert r.status_code == 200
        bands = r.json()["constraints"]
        assert bands["microhardness_HV"] == [635.0, 675.0]
        assert bands["porosity_pct"] == [6.0, 8.2]
