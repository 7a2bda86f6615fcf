# Storage infrastructure package: file formats and atomic output
