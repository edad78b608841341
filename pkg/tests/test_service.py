"""Tests for the HTTP service, one thin wrapper per library operation."""

from __future__ import annotations

import dataclasses
import json

from fastapi.testclient import TestClient

import fedcarbon
from fedcarbon.emissions import EmissionFactor
from fedcarbon.service import create_app
from fedcarbon.simulator import compare_runs, live_seed_study, run_scenario
from fedcarbon.stores import Stores, load_scenario
from fedcarbon.sweep import load_grid, sweep

STORES = Stores.load()
CLIENT = TestClient(create_app())


def scenario_body(name: str) -> dict:
    with open(STORES.scenario_path(name)) as handle:
        return json.load(handle)


def grid_body() -> dict:
    with open(STORES.data_dir / "grids" / "cifar10_setup_grid.json") as handle:
        return json.load(handle)


class TestHealth:
    def test_reports_ok_and_version(self):
        body = CLIENT.get("/health").json()
        assert body == {"status": "ok", "version": fedcarbon.__version__}


class TestCatalog:
    def test_factors_listing_matches_store(self):
        rows = CLIENT.get("/factors").json()
        by_region = {row["region_code"]: row["kg_co2_per_kwh"] for row in rows}
        assert by_region["CN"] == 0.9746
        assert len(rows) == len(STORES.factors)
        assert [row["region_code"] for row in rows] == sorted(by_region)

    def test_hardware_listing_includes_power_and_pue(self):
        rows = {row["name"]: row for row in CLIENT.get("/hardware").json()}
        assert rows["tegra_x2_cifar"]["watts"] == 5.0
        assert rows["tegra_x2_cifar"]["pue"] is None
        assert rows["v100_cifar"]["pue"] == 1.67
        assert rows["v100_cifar"]["tdp_watts"] == 250.0

    def test_trace_listing_summarizes_each_setup(self):
        rows = {row["setup_id"]: row for row in CLIENT.get("/traces").json()}
        assert len(rows) == len(STORES.traces)
        summary = rows["cifar10_fl_iid_1ep_n01"]
        assert summary["clients_per_round"] == 1
        assert summary["local_epochs"] == 1
        assert summary["partitioning"] == "IID"
        assert summary["max_accuracy"] > 0.6
        assert summary["last_round"] >= summary["points"]

    def test_factory_accepts_injected_store(self):
        slim = dataclasses.replace(STORES, factors={"XX": EmissionFactor("XX", 0.5)})
        rows = TestClient(create_app(slim)).get("/factors").json()
        assert rows == [{"region_code": "XX", "kg_co2_per_kwh": 0.5}]


class TestEstimate:
    def test_returns_library_result_verbatim(self):
        body = CLIENT.post("/estimate", json={"scenario": scenario_body("cifar10_fl_iid_5ep_cn")}).json()
        assert abs(body["total_co2_g"] - 11.6342875) < 1e-9
        assert body["rounds_to_target"] == 9
        assert body["reached"] is True
        assert body["logs"] is None

    def test_logs_included_on_request(self):
        body = CLIENT.post(
            "/estimate",
            json={"scenario": scenario_body("cifar10_fl_iid_5ep_cn"), "include_logs": True},
        ).json()
        assert len(body["logs"]) == 9
        last = body["logs"][-1]
        assert last["round"] == 9
        assert abs(last["cum_co2_g"] - body["total_co2_g"]) < 1e-12
        assert len(last["selected"]) == 5

    def test_unreached_target_is_still_a_result(self):
        scenario = scenario_body("cifar10_fl_iid_5ep_cn")
        scenario["target_accuracy"] = 0.99
        response = CLIENT.post("/estimate", json={"scenario": scenario})
        assert response.status_code == 200
        assert response.json()["reached"] is False
        assert response.json()["rounds_to_target"] is None

    def test_unknown_region_is_422(self):
        scenario = scenario_body("cifar10_fl_iid_5ep_cn")
        scenario["region"] = "ZZ"
        response = CLIENT.post("/estimate", json={"scenario": scenario})
        assert response.status_code == 422
        assert "ZZ" in response.json()["detail"]

    def test_invalid_body_is_422(self):
        assert CLIENT.post("/estimate", json={}).status_code == 422
        assert (
            CLIENT.post(
                "/estimate",
                json={"scenario": scenario_body("cifar10_fl_iid_5ep_cn"), "extra": 1},
            ).status_code
            == 422
        )

    def test_centralized_scenarios_estimate_too(self):
        body = CLIENT.post(
            "/estimate", json={"scenario": scenario_body("cifar10_centralized_v100_google_us")}
        ).json()
        expected = run_scenario(
            load_scenario(STORES.scenario_path("cifar10_centralized_v100_google_us")), STORES
        )
        assert body["mode"] == "CENTRALIZED"
        assert abs(body["total_co2_g"] - expected.total_co2_grams) < 1e-12


class TestCompare:
    def test_ratios_match_library(self):
        body = CLIENT.post(
            "/compare",
            json={
                "fl": scenario_body("cifar10_fl_iid_1ep_us"),
                "centralized": scenario_body("cifar10_centralized_v100_google_us"),
            },
        ).json()
        fl = run_scenario(load_scenario(STORES.scenario_path("cifar10_fl_iid_1ep_us")), STORES)
        centralized = run_scenario(
            load_scenario(STORES.scenario_path("cifar10_centralized_v100_google_us")), STORES
        )
        expected = compare_runs(fl, centralized)
        assert abs(body["co2_ratio"] - expected.co2_ratio) < 1e-12
        assert abs(body["wall_time_ratio"] - expected.wall_time_ratio) < 1e-12
        assert body["fl"]["logs"] is None

    def test_same_scenario_gives_unit_ratio(self):
        scenario = scenario_body("cifar10_fl_iid_1ep_us")
        body = CLIENT.post("/compare", json={"fl": scenario, "centralized": scenario}).json()
        assert body["co2_ratio"] == 1.0
        assert body["wall_time_ratio"] == 1.0

    def test_missing_trace_is_422(self):
        scenario = scenario_body("cifar10_fl_iid_1ep_us")
        scenario["source"]["trace"] = "no_such_setup"
        response = CLIENT.post(
            "/compare",
            json={"fl": scenario, "centralized": scenario_body("cifar10_centralized_v100_google_us")},
        )
        assert response.status_code == 422


class TestSweep:
    def test_full_grid_counts_and_best_point(self):
        body = CLIENT.post(
            "/sweep", json={"grid": grid_body(), "base": scenario_body("cifar10_fl_iid_1ep_us")}
        ).json()
        assert len(body["points"]) == 80
        assert body["scored"] == 77
        assert body["na"] == 3
        best = body["best"]
        assert (best["partitioning"], best["local_epochs"], best["n"]) == ("IID", 1, 1)
        assert best["target"] == 0.6
        assert best["rounds"] == 28
        assert abs(best["carbon_cost"] - 1.3543314814814817) < 1e-12
        assert body["points"][0] == best

    def test_na_rows_name_the_unreachable_cells(self):
        body = CLIENT.post(
            "/sweep", json={"grid": grid_body(), "base": scenario_body("cifar10_fl_iid_1ep_us")}
        ).json()
        na_rows = [point for point in body["points"] if point["na_reason"] is not None]
        assert {(row["partitioning"], row["local_epochs"], row["n"]) for row in na_rows} == {
            ("NON_IID", 1, 8),
            ("NON_IID", 1, 9),
            ("NON_IID", 1, 10),
        }
        assert {row["na_reason"] for row in na_rows} == {"target_unreachable"}

    def test_points_match_library_sweep(self):
        body = CLIENT.post(
            "/sweep", json={"grid": grid_body(), "base": scenario_body("cifar10_fl_iid_1ep_us")}
        ).json()
        grid = load_grid(STORES.data_dir / "grids" / "cifar10_setup_grid.json")
        base = load_scenario(STORES.scenario_path("cifar10_fl_iid_1ep_us"))
        expected = sweep(grid, base, STORES)
        for got, want in zip(body["points"], expected.points):
            assert got["trace_id"] == want.trace_id
            assert got["co2_g"] == want.co2_grams
            assert got["carbon_cost"] == want.carbon_cost

    def test_non_fl_base_is_422(self):
        response = CLIENT.post(
            "/sweep",
            json={"grid": grid_body(), "base": scenario_body("cifar10_centralized_v100_google_us")},
        )
        assert response.status_code == 422


class TestSimulate:
    def test_deterministic_and_equal_to_library(self):
        request = {"scenario": scenario_body("live_toy"), "seeds": 3}
        first = CLIENT.post("/simulate", json=request).json()
        second = CLIENT.post("/simulate", json=request).json()
        assert first == second
        iid, non_iid = live_seed_study(
            load_scenario(STORES.scenario_path("live_toy")), STORES, 3
        )
        assert first["iid"]["partitioning"] == "IID"
        assert first["non_iid"]["partitioning"] == "NON_IID"
        assert first["iid"]["rounds"] == list(iid.rounds)
        assert first["non_iid"]["rounds"] == list(non_iid.rounds)
        assert first["iid"]["seeds"] == 3
        assert first["iid"]["mean_rounds"] == iid.mean_rounds

    def test_trace_scenario_is_422(self):
        response = CLIENT.post(
            "/simulate", json={"scenario": scenario_body("cifar10_fl_iid_1ep_us"), "seeds": 2}
        )
        assert response.status_code == 422

    def test_zero_seeds_is_422(self):
        response = CLIENT.post(
            "/simulate", json={"scenario": scenario_body("live_toy"), "seeds": 0}
        )
        assert response.status_code == 422
