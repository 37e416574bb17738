"""Standalone entry point for the experiment commands (same as `flask wrsn ...`)."""
from dotenv import load_dotenv

from app import configure_logging
from app.cli import wrsn

if __name__ == '__main__':
    load_dotenv()
    configure_logging()
    wrsn()
