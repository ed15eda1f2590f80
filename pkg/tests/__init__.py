"""Tests for the lora-sync package."""
