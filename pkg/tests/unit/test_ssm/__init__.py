"""Unit tests for s3mamba.ssm."""
