"""Experiment orchestration: configuration, pipelines, reports and CLI."""
