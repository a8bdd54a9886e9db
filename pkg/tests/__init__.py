"""Test suite for the VoD placement optimizer."""
