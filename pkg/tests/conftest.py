import pytest

_criteria = {}   # nodeid -> (num, desc)
_outcomes = {}   # nodeid -> "PASS" | "FAIL" | "SKIP"


@pytest.fixture(scope="session")
def coinflip_meta_results():
    """Meta-analysis of the bundled coin-flip study table, computed once:
    shared H1 denominator, joint MEE on the default grid, and the two
    marginal MEEs.  Several tests read different slices of this."""
    from bff import GridSpec, find_mee
    from bff.binomial import TruncBetaPrior
    from bff.datasets import load_coinflip_meta
    from bff.meta import (
        MetaPriors,
        meta_joint_bff,
        meta_log_denominator,
        meta_marginal_tau_bff,
        meta_marginal_theta_bff,
    )

    data = load_coinflip_meta()
    priors = MetaPriors(TruncBetaPrior(5100.0, 4900.0, 0.5, 1.0), tau_scale=0.02)
    denom = meta_log_denominator(data, priors)
    joint = meta_joint_bff(data, priors, log_denominator=denom)
    joint_grid = GridSpec.two_dim((0.5, 0.0), (0.52, 0.05), (101, 101))
    return {
        "data": data,
        "priors": priors,
        "denominator": denom,
        "joint_model": joint,
        "joint_grid": joint_grid,
        "joint_mee": find_mee(joint, joint_grid),
        "theta_mee": find_mee(
            meta_marginal_theta_bff(data, priors, log_denominator=denom),
            GridSpec.one_dim(0.5, 0.52, points=201),
        ),
        "tau_mee": find_mee(
            meta_marginal_tau_bff(data, priors, log_denominator=denom),
            GridSpec.one_dim(0.0, 0.05, points=201),
        ),
        "log_bf_null": joint.log_bff((0.5, 0.0)),
    }


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _criteria[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.when == "call":
        _outcomes[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and not report.passed:
        _outcomes[report.nodeid] = "SKIP" if report.skipped else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    rows = sorted(
        (num, desc, _outcomes.get(nodeid, "SKIP"))
        for nodeid, (num, desc) in _criteria.items()
    )
    for num, desc, state in rows:
        tr.write_line(f"ACCEPTANCE {num}: {state} - {desc}")
