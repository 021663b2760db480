"""Experiment harness: configs, runners, image I/O and the command line."""
