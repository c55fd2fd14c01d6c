"""Command-line interface and demo configurations."""
