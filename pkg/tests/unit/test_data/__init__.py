"""Unit tests for s3mamba.data."""
