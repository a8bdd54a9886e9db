"""Utility helpers shared by the placement toolkit."""
