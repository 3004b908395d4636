# Acceptance runs are opt-in: python3 acceptance_test.py
collect_ignore = ["acceptance_test.py"]
collect_ignore_glob = ["examples/*"]
