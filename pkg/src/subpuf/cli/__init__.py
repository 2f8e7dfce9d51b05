"""Command-line driver: generate, enroll, evaluate, sweep, stabilize, report, selftest."""
