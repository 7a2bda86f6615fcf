# Infrastructure package for file formats and file output
