def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        import _acceptance_log
    except ImportError:
        return
    if _acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_log.LINES:
            terminalreporter.write_line(line)
