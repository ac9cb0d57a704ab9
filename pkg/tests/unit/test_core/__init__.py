"""Unit tests for s3mamba.core."""
