# Metrics, significance tests and the repetition protocol
