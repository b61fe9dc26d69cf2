"""Result and run-configuration models."""
