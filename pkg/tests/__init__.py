"""Tests for vnn-toolkit."""
