from casebound.checks import check_population, render_report, run_identity_suite
from casebound.fixtures import top_income_population


def test_identity_suite_passes_on_small_run():
    results = run_identity_suite(seed=1, n_populations=12)
    assert len(results) == 14
    failures = [r for r in results if not r.passed]
    assert failures == []
    exact = [r for r in results if "identity" in r.name or "invariance" in r.name]
    assert exact and all(r.worst_error < 1e-10 for r in exact)


def test_negative_control_present():
    results = run_identity_suite(seed=2, n_populations=8)
    names = [r.name for r in results]
    assert any("negative control" in n for n in names)


def test_render_report_format():
    results = run_identity_suite(seed=3, n_populations=5)
    text = render_report(results)
    assert text.count("[PASS]") == len(results)
    assert "worst error" in text


def test_check_population_on_bundled_table():
    results = check_population(top_income_population())
    assert all(r.passed for r in results)
    # the single-cell completion satisfies both monotonicity assumptions
    names = " ".join(r.name for r in results)
    assert "odds-ratio invariance" in names
    assert "monotone" in names
