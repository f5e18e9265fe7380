from singscat import PotentialClass, matching_solution


def unit_class(tag, **params):
    """Unit lengths, sigma0 = 5 and the smallest round sigma2 the class allows."""
    kw = {"sigma0": 5.0}
    if tag[2] == "P":
        kw["sigma2"] = 10.0 if tag[1] == "E" else 5.0
    kw.update(params)
    return PotentialClass.from_tag(tag, **kw)


def unit_solution(tag, R, l=0, k=1.0):
    return matching_solution(unit_class(tag), k, l, R)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
