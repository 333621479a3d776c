import json

import pytest

from uipt_percolation import __version__, cli


def test_make_spec_fills_defaults():
    spec = cli.make_spec("crossing2", seed=5, samples=10, b=7)
    assert spec.parameters["a"] == 2
    assert spec.parameters["b"] == 7
    with pytest.raises(ValueError):
        cli.make_spec("crossing2", colour="black")
    with pytest.raises(NotImplementedError):
        cli.make_spec("render")


def test_spec_validation():
    with pytest.raises(ValueError):
        cli.ExperimentSpec(command="tables", seed=-1)
    with pytest.raises(ValueError):
        cli.ExperimentSpec(command="tables", seed=2 ** 64)
    with pytest.raises(ValueError):
        cli.ExperimentSpec(command="tables", workers=0)
    with pytest.raises(NotImplementedError):
        cli.ExperimentSpec(command="tables", format="xml")


def test_spec_ignores_placement():
    one = cli.make_spec("crossing2", seed=1, samples=10, workers=1)
    many = cli.make_spec("crossing2", seed=1, samples=10, workers=8, output="x.json")
    assert one == many
    assert "workers" not in many.to_dict()
    assert cli.ExperimentSpec.from_dict(many.to_dict()) == many


def test_pk_table_csv():
    spec = cli.make_spec("tables", format="csv", table="pk", max_k=3)
    text = cli.render(cli.run(spec))
    lines = text.splitlines()
    meta = json.loads(lines[0][2:])
    assert meta["tool"] == cli.TOOL
    assert meta["version"] == __version__
    assert meta["spec"]["parameters"]["max_k"] == 3
    assert lines[1] == "k,p_k,tail_mass"
    assert lines[2] == "1,1/8,1/24"
    assert lines[3] == "2,1/48,1/48"
    assert len(lines) == 5


def test_other_tables():
    zm = cli.run(cli.make_spec("tables", table="zm", max_k=4))["results"]
    assert zm["rows"][0] == [2, "9/8", "1/9"]
    tail = cli.run(cli.make_spec("tables", table="tail", max_k=1))["results"]
    assert tail["rows"] == [[0, "1/6", "1/3"], [1, "1/24", "5/24"]]
    overshoot = cli.run(cli.make_spec("tables", table="overshoot", a=2, max_k=5,
                                      truncation=300))["results"]
    assert overshoot["columns"] == ["j", "probability", "survival"]
    assert overshoot["rows"][0][2] == pytest.approx(1.0 - overshoot["escape_mass"], abs=1e-9)
    with pytest.raises(NotImplementedError):
        cli.run(cli.make_spec("tables", table="zeta"))


def test_crossing2_against_solver():
    spec = cli.make_spec("crossing2", seed=3, samples=20_000, a=2, b=5, truncation=200)
    results = cli.run(spec)["results"]
    counts = results["counts"]
    assert counts["black"] + counts["white"] + counts["undetermined"] == 20_000
    assert results["exact"]["truncation"] == 200
    assert results["z_score"] <= 4.0
    resolved = results["resolved"]
    assert abs(resolved["value"] - results["untruncated"]) <= 4 * resolved["stderr"]


def test_crossing2_dual_mode():
    spec = cli.make_spec("crossing2", seed=3, samples=20_000, a=2, b=5, truncation=200, dual=True)
    results = cli.run(spec)["results"]
    assert results["z_score"] <= 4.0


def test_json_output_is_worker_invariant():
    one = cli.make_spec("crossing2", seed=9, samples=20_000, workers=1, truncation=100)
    two = cli.make_spec("crossing2", seed=9, samples=20_000, workers=2, truncation=100)
    assert cli.render(cli.run(one)) == cli.render(cli.run(two))


def test_crossing2_needs_samples():
    with pytest.raises(ValueError):
        cli.run(cli.make_spec("crossing2", samples=0))


def test_crossing3_modes():
    spec = cli.make_spec("crossing3", seed=1, samples=5_000, a=3, b=2, c=3, mode="race,mirrored",
                         budget=10 ** 6)
    results = cli.run(spec)["results"]
    assert set(results["modes"]) == {"race", "mirrored"}
    assert "z_score" in results["modes"]["mirrored"]
    with pytest.raises(NotImplementedError):
        cli.ThreeSegmentModeName.parse("race,sideways")
    assert [m.value for m in cli.ThreeSegmentModeName.parse("all")] == ["race", "mirrored", "outer"]


def test_mixed_command():
    spec = cli.make_spec("mixed", seed=2, samples=10_000, a=2, b=5, rate_ratio=3.0,
                         truncation=500)
    results = cli.run(spec)["results"]
    reference = results["two_segment"]
    assert reference["truncation"] == 500
    counts = reference["counts"]
    assert counts["black"] + counts["white"] + counts["undetermined"] == 10_000
    assert results["z_score"] <= 4.0
    for estimate in (results["resolved"], reference["resolved"]):
        assert abs(estimate["value"] - results["untruncated"]) <= 4 * estimate["stderr"]
    with pytest.raises(ValueError):
        cli.run(cli.make_spec("mixed", samples=10, rate_ratio=0.0))


def test_asp_verify_command():
    spec = cli.make_spec("asp-verify", seed=4, samples=2_000, identity="ratio", t_values="1,8",
                         lattice_scale=50, tolerance=0.06)
    results = cli.run(spec)["results"]
    assert len(results["reports"]) == 2
    assert results["pass"]
    with pytest.raises(NotImplementedError):
        cli.run(cli.make_spec("asp-verify", samples=10, identity="unknown"))


def test_boltzmann_command():
    spec = cli.make_spec("boltzmann", seed=6, samples=4_000, a=1, b=1, c=1, d=1,
                         estimator="direct")
    results = cli.run(spec)["results"]
    assert results["polygon"] == {"a": 1, "b": 1, "c": 1, "d": 1}
    assert results["direct"]["estimate"]["value"] == pytest.approx(0.5, abs=0.04)
    with pytest.raises(NotImplementedError):
        cli.run(cli.make_spec("boltzmann", samples=10, estimator="magic"))


def test_scaling_command():
    spec = cli.make_spec("scaling", a=1.0, b=1.0, lambdas="1,10,30")
    report = cli.run(spec)["results"]["reports"][0]
    assert report["pass"]
    assert len(report["details"]["rows"]) == 3


def test_w_dist_command():
    spec = cli.make_spec("w-dist", seed=8, samples=500, a=1, b=1, c=1, format="csv")
    payload = cli.run(spec)
    assert payload["results"]["rows"] == [[1, 500]]
    assert cli.render(payload).splitlines()[1] == "position,count"


def test_rates_check_command():
    results = cli.run(cli.make_spec("rates-check"))["results"]
    assert results["pass"]
    assert results["gamma_prime"]["relative_error"] < 0.005


def test_csv_needs_a_table():
    spec = cli.make_spec("rates-check", format="csv")
    with pytest.raises(ValueError):
        cli.render(cli.run(spec))


def test_main_writes_and_rereads(tmp_path):
    path = tmp_path / "pk.csv"
    assert cli.main(["tables", "--pk", "--max-k", "4", "--output", str(path)]) == cli.EXIT_OK
    payload = cli.read_payload(str(path))
    spec = cli.spec_from_payload(payload)
    assert spec.command == "tables"
    assert spec.format == "csv"
    assert spec.parameters["max_k"] == 4
    assert cli.render(cli.run(spec)) == path.read_text()


def test_main_json_output(tmp_path):
    path = tmp_path / "scaling.json"
    code = cli.main(["scaling", "--lambdas", "1,10", "--output", str(path)])
    assert code == cli.EXIT_OK
    payload = json.loads(path.read_text())
    assert payload["spec"]["command"] == "scaling"
    assert payload["results"]["pass"] is True


def test_main_exit_codes(capsys):
    assert cli.main(["crossing2", "--samples", "0"]) == cli.EXIT_USAGE
    assert cli.main(["crossing2", "--seed", "-4", "--samples", "10"]) == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["render"])
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["crossing2", "--a", "two"])
    assert exc.value.code == cli.EXIT_USAGE


def test_profiles():
    quick = cli.load_profile("quick")
    default = cli.load_profile("default")
    assert quick["sampler"]["lattice_scale"] < default["sampler"]["lattice_scale"]
    assert set(quick) == set(default)
    with pytest.raises(NotImplementedError):
        cli.load_profile("thorough")


def test_profile_downgrades():
    default = cli.load_profile("default")
    for number, _, _ in cli.ACCEPTANCE_CHECKS:
        assert cli.profile_downgrades(default, number) == []
    quick = cli.load_profile("quick")
    assert {d["setting"] for d in cli.profile_downgrades(quick, 6)} == {
        "sampler.lattice_scale", "symmetry.samples", "symmetry.tolerance",
    }
    assert [d["setting"] for d in cli.profile_downgrades(quick, 12)] == ["chain.max_length"]
    workers = cli.profile_downgrades(quick, 14)
    assert workers == [{"setting": "reproducibility.workers", "value": [1, 2],
                        "reference": [1, 4, 16]}]
    assert cli.profile_downgrades(quick, 1) == []
    assert cli.profile_downgrades({}, 2)[0]["value"] is None


def test_derived_seeds_differ():
    seeds = {cli._derived_seed(0, c, i) for c in range(1, 15) for i in range(3)}
    assert len(seeds) == 42


def test_exact_acceptance_checks():
    payload = cli.verify_all("quick", seed=0, only={1, 2, 3, 12})
    criteria = payload["results"]["criteria"]
    assert [c["id"] for c in criteria] == [1, 2, 3, 12]
    assert payload["results"]["pass"]
    assert [c["id"] for c in criteria if c["downgrades"]] == [12]
    assert payload["results"]["reduced"]
    assert payload["spec"]["command"] == "verify-all"


@pytest.mark.slow
def test_quick_acceptance_suite():
    payload = cli.verify_all("quick", seed=0, workers=2)
    failed = [c["name"] for c in payload["results"]["criteria"] if not c["pass"]]
    assert not failed


def test_trajectory_dump(tmp_path):
    path = tmp_path / "run.csv"
    spec = cli.make_spec("crossing2", seed=5, samples=1_000, truncation=100, trace=str(path))
    trace = cli.run(spec)["results"]["trace"]
    lines = path.read_text().splitlines()
    assert lines[0] == "step_index,event_kind,k,black_len,white_len"
    assert len(lines) == trace["steps"] + 1
    assert trace["steps"] <= cli.TRACE_BUDGET
