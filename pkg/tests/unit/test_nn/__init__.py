"""Unit tests for s3mamba.nn."""
