"""Shared helpers: errors, configuration and file output."""
