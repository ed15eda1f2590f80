"""Utility helpers for the LoRa synchronization toolkit."""
