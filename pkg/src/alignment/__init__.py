# Cross-version embedding alignment
