"""Unit tests for s3mamba.metrics."""
