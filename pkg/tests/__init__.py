"""Tests for semsoft."""
