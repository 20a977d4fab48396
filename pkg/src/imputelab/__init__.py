"""Missing-data imputation by autoencoder+GA and by Gaussian EM."""
