import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from rackalloc.rackplacement import DemandConfig
from rackalloc.rackplacement.demand import TruncatedLognormal
from rackalloc.service import SessionConfig, create_app
from rackalloc.service.session import replay

from test_rackplacement import mini_topology


def tiny_demand(batch=2):
    return DemandConfig(
        rack_counts=(1, 2),
        rack_probs=(0.6, 0.4),
        power=TruncatedLognormal(0.0, 0.3, 0.5, 2.0),
        cooling=TruncatedLognormal(-0.5, 0.2, 0.2, 1.0),
        batch_size=batch,
    )


@pytest.fixture()
def client():
    cfg = SessionConfig(
        sample_paths=1,
        time_limit=20.0,
        max_horizon=2,
        default_horizon=1,
        demand=tiny_demand(),
        test_mode=True,
    )
    app = create_app(default_config=cfg)
    return TestClient(app)


def make_session(client, topology="simulated", **config):
    body = {"topology": topology}
    if config:
        body["config"] = config
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()["id"]


def mini_topology_doc(**kw):
    return json.loads(mini_topology(**kw).to_json())


class TestSessions:
    def test_create_simulated_empty(self, client):
        sid = make_session(client)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["status"] == "open"
        assert all(row["occupied"] == 0 for row in state["rows"])

    def test_idempotent_create(self, client):
        r1 = client.post("/sessions", json={"topology": "simulated", "idempotency_key": "k1"})
        r2 = client.post("/sessions", json={"topology": "simulated", "idempotency_key": "k1"})
        assert r1.json()["id"] == r2.json()["id"]

    def test_malformed_topology_rejected(self, client):
        doc = mini_topology_doc()
        # same UPS on both sides of a tile group breaks the redundancy rule
        bad_psus = [d["id"] for d in doc["devices"] if d["level"] == "psu"][:1]
        doc["groups"][0]["psus"] = [bad_psus[0], bad_psus[0]]
        r = client.post("/sessions", json={"topology": doc})
        assert r.status_code == 422

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/state").status_code == 404

    def test_reason_taxonomy_endpoint(self, client):
        r = client.get("/reasons").json()
        assert "engineering_group" in r["reasons"]
        assert "other" in r["reasons"]


class TestSuggestions:
    def test_ample_capacity_all_placed(self, client):
        sid = make_session(client, topology=mini_topology_doc(ups_regular=500, ups_failover=800, tiles=5))
        r = client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"racks": 1, "power": 10.0}, {"racks": 2, "power": 5.0}]},
        )
        assert r.status_code == 201
        suggestions = r.json()["suggestions"]
        assert all(s["row"] is not None for s in suggestions)

    def test_oversized_request_rejected_for_space(self, client):
        sid = make_session(client, topology=mini_topology_doc(tiles=2))
        r = client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"racks": 5, "power": 1.0}]},
        )
        s = r.json()["suggestions"][0]
        assert s["row"] is None
        assert "space" in s["reject_reason"]

    def test_failover_replica_rejected_with_explanation(self, client):
        # the failover-risk scenario: 120 W regular / 180 W failover UPS caps,
        # two 80 W racks committed, an incoming 80 W rack cannot fit anywhere
        sid = make_session(client, topology=mini_topology_doc())
        for rid, row in (("a", "row0"), ("b", "row1")):
            r = client.post(
                f"/sessions/{sid}/batches",
                json={"requests": [{"id": rid, "racks": 1, "power": 80.0}]},
            )
            sug = r.json()["suggestions"][0]
            # force the scenario's layout with manual placements
            r = client.post(
                f"/sessions/{sid}/decisions",
                json={
                    "suggestion_id": sug["id"],
                    "verdict": "manual",
                    "placement": {"row": row, "groups": {f"{row}/g0": 1}},
                },
            )
            assert r.status_code == 200, r.text
        r = client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"id": "new", "racks": 1, "power": 80.0}]},
        )
        s = r.json()["suggestions"][0]
        assert s["row"] is None
        assert "failover" in s["reject_reason"]


class TestDecisions:
    def _one_suggestion(self, client, sid, rid="r1", racks=1, power=10.0):
        r = client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"id": rid, "racks": racks, "power": power}]},
        )
        return r.json()["suggestions"][0]

    def test_accept_increases_occupancy_exactly(self, client):
        sid = make_session(client, topology=mini_topology_doc(ups_regular=500, ups_failover=800, tiles=5))
        sug = self._one_suggestion(client, sid, racks=2)
        r = client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "accept"},
        )
        assert r.status_code == 200
        state = r.json()["state"]
        assert sum(row["occupied"] for row in state["rows"]) == 2
        placed = state["placements"][0]
        assert placed["row"] == sug["row"]
        assert placed["groups"] == sug["groups"]

    def test_reject_requires_reason(self, client):
        sid = make_session(client, topology=mini_topology_doc())
        sug = self._one_suggestion(client, sid)
        r = client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "reject"},
        )
        assert r.status_code == 422

    def test_manual_infeasible_names_constraint(self, client):
        sid = make_session(client, topology=mini_topology_doc())
        sug = self._one_suggestion(client, sid, power=200.0)  # > 120 regular everywhere
        r = client.post(
            f"/sessions/{sid}/decisions",
            json={
                "suggestion_id": sug["id"],
                "verdict": "manual",
                "placement": {"row": "row0", "groups": {"row0/g0": 1}},
            },
        )
        assert r.status_code == 422
        assert "power" in r.text or "failover" in r.text

    def test_double_decide_conflicts(self, client):
        sid = make_session(client, topology=mini_topology_doc())
        sug = self._one_suggestion(client, sid)
        first = client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "accept"},
        )
        assert first.status_code == 200
        second = client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "reject", "reason": "other"},
        )
        assert second.status_code == 409

    def test_new_batch_expires_pending(self, client):
        sid = make_session(client, topology=mini_topology_doc(tiles=5))
        sug = self._one_suggestion(client, sid, rid="old")
        self._one_suggestion(client, sid, rid="newer")
        r = client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "accept"},
        )
        assert r.status_code == 409

    def test_reject_then_manual_adoption_accounting(self, client):
        sid = make_session(client, topology=mini_topology_doc(ups_regular=500, ups_failover=800, tiles=6))
        sug = self._one_suggestion(client, sid, rid="x1")
        client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "reject", "reason": "engineering_group"},
        )
        m = client.get(f"/sessions/{sid}/metrics").json()
        assert m["adoption_rate"] is None  # nothing placed yet
        sug2 = self._one_suggestion(client, sid, rid="x2")
        client.post(
            f"/sessions/{sid}/decisions",
            json={
                "suggestion_id": sug2["id"],
                "verdict": "manual",
                "placement": {"row": sug2["row"], "groups": sug2["groups"]},
            },
        )
        m = client.get(f"/sessions/{sid}/metrics").json()
        assert m["adoption_rate"] == 0.0
        assert m["decisions"]["rejected_by_reason"] == {"engineering_group": 1}


class TestMetrics:
    def test_fresh_session(self, client):
        sid = make_session(client)
        m = client.get(f"/sessions/{sid}/metrics").json()
        assert m["adoption_rate"] is None
        assert m["stranding"] == 0.0

    def test_three_accepts_one_manual(self, client):
        sid = make_session(client, topology=mini_topology_doc(ups_regular=500, ups_failover=800, tiles=10))
        for k in range(4):
            r = client.post(
                f"/sessions/{sid}/batches",
                json={"requests": [{"id": f"q{k}", "racks": 1, "power": 5.0}]},
            )
            sug = r.json()["suggestions"][0]
            if k < 3:
                body = {"suggestion_id": sug["id"], "verdict": "accept"}
            else:
                body = {
                    "suggestion_id": sug["id"],
                    "verdict": "manual",
                    "placement": {"row": sug["row"], "groups": sug["groups"]},
                }
            assert client.post(f"/sessions/{sid}/decisions", json=body).status_code == 200
        m = client.get(f"/sessions/{sid}/metrics").json()
        assert m["adoption_rate"] == 0.75

    def test_reason_histogram_sums_to_rejections(self, client):
        sid = make_session(client, topology=mini_topology_doc(tiles=8))
        reasons = ["engineering_group", "power_balancing", "other"]
        for k, reason in enumerate(reasons):
            r = client.post(
                f"/sessions/{sid}/batches",
                json={"requests": [{"id": f"q{k}", "racks": 1, "power": 1.0}]},
            )
            sug = r.json()["suggestions"][0]
            client.post(
                f"/sessions/{sid}/decisions",
                json={"suggestion_id": sug["id"], "verdict": "reject", "reason": reason},
            )
        m = client.get(f"/sessions/{sid}/metrics").json()
        d = m["decisions"]
        assert sum(d["rejected_by_reason"].values()) == d["rejected_total"] == 3


class TestEventSourcing:
    def test_replay_matches_live_after_mixed_session(self, client):
        sid = make_session(client, topology=mini_topology_doc(ups_regular=500, ups_failover=800, tiles=8))
        session = client.app.state.store.get(sid)
        rng = np.random.default_rng(0)
        for k in range(6):
            r = client.post(
                f"/sessions/{sid}/batches",
                json={"requests": [{"id": f"q{k}", "racks": int(rng.integers(1, 3)), "power": 3.0}]},
            )
            sug = r.json()["suggestions"][0]
            if sug["row"] is None:
                continue
            roll = rng.random()
            if roll < 0.5:
                body = {"suggestion_id": sug["id"], "verdict": "accept"}
            elif roll < 0.75:
                body = {"suggestion_id": sug["id"], "verdict": "reject", "reason": "other",
                        "reason_text": "fuzz"}
            else:
                body = {
                    "suggestion_id": sug["id"],
                    "verdict": "manual",
                    "placement": {"row": sug["row"], "groups": sug["groups"]},
                }
            client.post(f"/sessions/{sid}/decisions", json=body)
        session.verify_replay()
        state, _, _, _ = replay(session.topology, session.log)
        state.verify_consistency()
        assert np.allclose(state.occupancy, session.state.occupancy)

    def test_events_stream(self, client):
        sid = make_session(client, topology=mini_topology_doc())
        client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"id": "q", "racks": 1, "power": 5.0}]},
        )
        r = client.get(f"/sessions/{sid}/events")
        assert r.status_code == 200
        payloads = [ln for ln in r.text.splitlines() if ln.startswith("data: ")]
        kinds = [json.loads(p[6:])["kind"] for p in payloads]
        assert kinds[0] == "session_created"
        assert "batch_arrived" in kinds and "suggested" in kinds

    def test_events_resume_from_seq(self, client):
        sid = make_session(client, topology=mini_topology_doc())
        client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"id": "q", "racks": 1, "power": 5.0}]},
        )
        r = client.get(f"/sessions/{sid}/events", params={"from_seq": 1})
        payloads = [ln for ln in r.text.splitlines() if ln.startswith("data: ")]
        assert json.loads(payloads[0][6:])["seq"] == 1

    def test_persistence_round_trip(self, tmp_path):
        cfg = SessionConfig(
            sample_paths=1, time_limit=20.0, max_horizon=1, default_horizon=1,
            demand=tiny_demand(), test_mode=True,
        )
        app = create_app(persist_dir=tmp_path, default_config=cfg)
        client = TestClient(app)
        sid = make_session(client, topology=mini_topology_doc(tiles=5))
        r = client.post(
            f"/sessions/{sid}/batches",
            json={"requests": [{"id": "q", "racks": 1, "power": 5.0}]},
        )
        sug = r.json()["suggestions"][0]
        client.post(
            f"/sessions/{sid}/decisions",
            json={"suggestion_id": sug["id"], "verdict": "accept"},
        )
        log_file = tmp_path / f"{sid}.events.jsonl"
        assert log_file.exists()
        lines = [json.loads(ln) for ln in log_file.read_text().splitlines()]
        assert lines[0]["kind"] == "session_created"
        assert lines[-1]["kind"] == "accepted"
        assert "stranding" in lines[-1]["payload"]
