# Defect classifiers
