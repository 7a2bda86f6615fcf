# Models package for data structures and schemas
