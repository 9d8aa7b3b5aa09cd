# Experiment configuration, artifact cache and the end-to-end runner
