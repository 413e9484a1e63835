"""Growth forecasting for model files mined from version control."""

__version__ = "0.1.0"
