"""Forecasting models behind one predictor contract."""
