from tests import acceptance_log


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.summary()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
