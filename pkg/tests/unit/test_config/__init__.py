"""Unit tests for s3mamba.config."""
