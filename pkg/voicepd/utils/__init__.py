"""Utility helpers for voicepd."""
