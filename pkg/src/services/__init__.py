# Services package: batch pipelines behind the CLI commands
