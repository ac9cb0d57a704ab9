"""Unit tests for s3mamba.training."""
