# Core package for configuration and exceptions
