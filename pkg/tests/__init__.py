"""Module for testing dislab."""
