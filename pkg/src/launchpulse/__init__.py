"""launchpulse: from Hacker News exposure to GitHub star growth."""

__version__ = "0.1.0"
