"""
Doubly-robust imputation for longitudinal data with monotone dropout.

Contains:
- longitudinal_data/: panel model, CSV ingest/export, monotone bookkeeping
- glm_core/: OLS, logistic IRLS, design matrices, forward selection
- dropout_weights/: discrete-time hazards, observation probabilities, AIPW coefficients
- imputers/: Paik, AIPW-I, AIPW-S and BR* completed datasets
- estimators/: GEE, WGEE, MMRM and contrasts
- inference/: bootstrap, normal intervals, interval score
- simulation/: generators, scenario grid, Monte Carlo metrics
- pipeline/: per-method end-to-end recipes
- cli/: command-line surface
"""
