"""
cfamc tests

Run everything with ``pytest tests`` or ``python -m tests.run_all``.
Desk-scale learning checks are skipped unless ``CFAMC_SLOW_TESTS=1``.

"""
