"""HTTP service contract: envelopes, status codes, determinism, finiteness."""

import json
import math

import pytest
from fastapi.testclient import TestClient

from panelpower.api import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def body(P=8, S=(4, 6), mt=(0.25, 0.25), mc=(0.25, 0.25), N=100, family="DID",
         estimand=None, rho=0.4, structure="AR1", kind="CROSS_SECTIONAL", psi=0.0,
         mde=0.20, covariates=None):
    est = {"family": family}
    if estimand:
        est["estimand"] = estimand
    if covariates:
        est["covariates"] = covariates
    return {
        "design": {"P": P, "S": list(S), "M_T_k": list(mt), "M_C_k": list(mc), "N": N},
        "error_model": {"ICC_theta": 0.05, "rho": rho, "corr_structure": structure,
                        "design_kind": kind, "psi": psi},
        "estimator": est,
        "query": {"alpha": 0.05, "lambda": 0.8, "mde": mde},
    }


def assert_finite(obj):
    if isinstance(obj, float):
        assert math.isfinite(obj)
    elif isinstance(obj, dict):
        for v in obj.values():
            assert_finite(v)
    elif isinstance(obj, list):
        for v in obj:
            assert_finite(v)


class TestHealthAndPresets:
    def test_health(self, client):
        r = client.get("/v1/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"
        assert "version" in r.json()

    def test_presets(self, client):
        r = client.get("/v1/presets")
        assert r.status_code == 200
        assert "table3-base" in r.json()["presets"]


class TestEnvelope:
    def test_exactly_one_of_result_error(self, client):
        ok = client.post("/v1/clusters", json=body()).json()
        assert ok["result"] is not None and ok["error"] is None
        bad = client.post("/v1/clusters", json=body(S=(2, 4), family="CITS_FULL")).json()
        assert bad["result"] is None and bad["error"] is not None

    def test_request_echoed(self, client):
        b = body()
        r = client.post("/v1/clusters", json=b).json()
        assert r["request"]["design"]["S"] == [4, 6]
        assert r["request"]["query"]["lambda"] == 0.8

    def test_determinism(self, client):
        b = body(family="CITS_FULL")
        r1 = client.post("/v1/clusters", json=b)
        r2 = client.post("/v1/clusters", json=b)
        assert r1.json() == r2.json()


class TestClusters:
    def test_benchmark_value(self, client):
        r = client.post("/v1/clusters", json=body())
        assert r.status_code == 200
        assert abs(r.json()["result"]["M"] - 37) <= 1

    def test_default_mde_target(self, client):
        b = body()
        b["query"].pop("mde")
        r = client.post("/v1/clusters", json=b)
        assert r.status_code == 200
        assert abs(r.json()["result"]["M"] - 37) <= 1

    def test_its_warning(self, client):
        r = client.post("/v1/clusters", json=body(family="ITS_FULL", mt=(0.5, 0.5), mc=(0, 0)))
        assert any("ITS" in w for w in r.json()["warnings"])


class TestMdeEndpoint:
    def test_fixed_design(self, client):
        r = client.post("/v1/mde", json=body(mt=(10, 10), mc=(10, 10), mde=None))
        assert r.status_code == 200
        res = r.json()["result"]
        assert res["mde"] == pytest.approx(res["factor"] * math.sqrt(res["variance"]["total"]), rel=1e-12)

    def test_nonpositive_df_is_422(self, client):
        b = body(mt=(2, 2), mc=(2, 2), mde=None,
                 covariates={"R2_YX": 0.0, "R2_TX": 0.0, "v": 60})
        r = client.post("/v1/mde", json=b)
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "NONPOSITIVE_DF"


class TestVariance:
    def test_structure_irrelevant_at_rho0(self, client):
        a = client.post("/v1/variance", json=body(mt=(10, 10), mc=(10, 10), rho=0.0, structure="AR1"))
        b = client.post("/v1/variance", json=body(mt=(10, 10), mc=(10, 10), rho=0.0, structure="CONSTANT"))
        assert a.json()["result"] == b.json()["result"]

    def test_terms_exposed(self, client):
        r = client.post("/v1/variance", json=body(mt=(10, 10), mc=(10, 10), family="CITS_FULL"))
        terms = r.json()["result"]["terms"]
        assert all("theta_block" in t for t in terms)

    def test_validation_error_code_and_field(self, client):
        r = client.post("/v1/variance", json=body(mt=(0, 10), mc=(10, 10)))
        assert r.status_code == 400
        err = r.json()["error"]
        assert err["code"] == "EMPTY_GROUP"
        assert err["field"] == "M_T_k"


class TestDesignEffect:
    def test_identical_designs(self, client):
        b = body()
        payload = {
            "design_a": b["design"], "error_model_a": b["error_model"],
            "design_b": b["design"], "error_model_b": b["error_model"],
            "estimator": b["estimator"], "query": b["query"],
        }
        r = client.post("/v1/design-effect", json=payload)
        assert r.status_code == 200
        assert r.json()["result"]["design_effect"] == pytest.approx(1.0, rel=1e-12)

    def test_staggered_vs_reference(self, client):
        b = body()
        ref = dict(b["design"], S=[5], M_T_k=[0.5], M_C_k=[0.5])
        err0 = dict(b["error_model"], rho=0.0)
        payload = {
            "design_a": b["design"], "error_model_a": err0,
            "design_b": ref, "error_model_b": err0,
            "estimator": b["estimator"], "query": b["query"],
        }
        r = client.post("/v1/design-effect", json=payload)
        assert r.json()["result"]["design_effect"] == pytest.approx(1.132, abs=5e-3)


class TestGrid:
    def test_rho_sweep_deterministic_monotone_df(self, client):
        values = [round(0.05 * i, 2) for i in range(10)]
        g = {**body(), "sweep": {"parameter": "rho", "values": values}, "target": "clusters"}
        r1 = client.post("/v1/grid", json=g)
        r2 = client.post("/v1/grid", json=g)
        assert r1.status_code == 200
        rows = r1.json()["result"]["rows"]
        assert len(rows) == 10
        assert r1.json() == r2.json()
        dfs = [row["df"] for row in rows]
        assert all(a <= b for a, b in zip(dfs, dfs[1:]))
        ms = [row["M"] for row in rows]
        assert all(a <= b for a, b in zip(ms, ms[1:]))

    def test_mde_target_sweep(self, client):
        g = {**body(mt=(10, 10), mc=(10, 10)), "sweep": {"parameter": "l", "values": [1, 2, 3]},
             "target": "mde"}
        r = client.post("/v1/grid", json=g)
        rows = r.json()["result"]["rows"]
        assert [row["l"] for row in rows] == [1, 2, 3]
        assert all("mde" in row for row in rows)

    def test_cap_413(self, client):
        g = {**body(), "sweep": {"parameter": "rho", "values": [0.0] * 10_001}}
        r = client.post("/v1/grid", json=g)
        assert r.status_code == 413
        assert r.json()["error"]["code"] == "GRID_TOO_LARGE"

    def test_row_level_error_keeps_stream_valid(self, client):
        g = {**body(), "sweep": {"parameter": "l", "values": [1, 6]}, "target": "clusters"}
        r = client.post("/v1/grid", json=g)
        rows = r.json()["result"]["rows"]
        assert "M" in rows[0]
        assert rows[1].get("error") == "NO_GROUP_INCLUDED"


class TestFiniteness:
    def test_payload_numbers_finite(self, client):
        for family in ("DID", "CITS_FULL", "CITS_COMMON_SLOPES"):
            r = client.post("/v1/clusters", json=body(family=family))
            assert_finite(r.json()["result"])
