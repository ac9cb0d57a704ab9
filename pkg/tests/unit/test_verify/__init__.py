"""Unit tests for s3mamba.verify."""
