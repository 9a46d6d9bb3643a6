import pytest

from climbgen import generative, learning, pipeline
from climbgen.performance import default_catalog_path, load_performance

_ACCEPTANCE_LINES = []


@pytest.fixture()
def acceptance_log():
    """Recorder for per-criterion pass/fail lines, echoed in the summary."""

    def record(name: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f" - {detail}" if detail else "")
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def catalog():
    return load_performance(default_catalog_path())


@pytest.fixture(scope="session")
def nbjt(catalog):
    return catalog["NBJT"]


@pytest.fixture(scope="session")
def small_world(catalog, tmp_path_factory):
    """A small simulated fleet with a fitted model, shared across tests.

    Returns (model, split, csv_path, truth_path).
    """
    tmp = tmp_path_factory.mktemp("small_world")
    scenario = pipeline.FleetScenario(
        types={
            "NBJT": pipeline.TypeScenario(
                count=80, thrust_bias_n=-2000.0, mode_sds=(1.0e5, 0.6e5, 0.3e5)
            )
        },
        alt_noise_ft=0.0,
        quantization_ft=0.0,
    )
    csv_path = tmp / "blips.csv"
    truth_path = tmp / "truth.json"
    pipeline.simulate_fleet(catalog, scenario, seed=424, csv_path=csv_path,
                            truth_path=truth_path)
    trajectories = pipeline.filter_climbs(pipeline.ingest(csv_path))
    split_data = pipeline.split(trajectories, seed=5)
    perf = catalog["NBJT"]
    grid = learning.default_grid()
    profiles = [learning.profile_from_flight(perf, tr, grid) for tr in split_data.train]
    basis = learning.fit_fpca(profiles)
    weights = [learning.project_weights(basis, p) for p in profiles]
    model = generative.GenerativeClimbModel(
        type_code="NBJT",
        basis=basis,
        weights=generative.fit_weight_distribution(weights),
        interval_fl=(150.0, 325.0),
        n_flights_fit=len(profiles),
    )
    return model, split_data, csv_path, truth_path
