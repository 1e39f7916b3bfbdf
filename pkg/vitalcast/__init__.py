# vitalcast: generative boosting for multistep vital-sign forecasting
