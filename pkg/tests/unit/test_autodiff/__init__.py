"""Unit tests for s3mamba.autodiff."""
