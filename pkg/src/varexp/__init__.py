import asyncio
import logging

from . import server


def main():
    """Main entry point for the package."""
    # the default stream handler writes to stderr, leaving stdout to the protocol
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    asyncio.run(server.main())

__all__ = ['main', 'server', 'cli']
