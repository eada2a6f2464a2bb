"""Test suite for wdrc."""
