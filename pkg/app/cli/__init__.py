# Command-line commands
