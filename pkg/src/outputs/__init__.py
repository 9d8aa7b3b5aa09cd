# Report export
