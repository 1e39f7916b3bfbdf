"""
train: fit one model for one horizon and save it as a checkpoint

Kinds:
    lstm       direct LSTM predicting the target vital at t+horizon
    mlp        [10, 5, 3] MLP on flattened windows at t+horizon
    generator  next-step LSTM over the five vitals (horizon ignored)

The checkpoint carries the training scaler so `predict` can work in original units.
"""

import argparse
import logging

import numpy as np

from vitalcast.cli.common import apply_overrides, load_cohort, non_negative_int, positive_int
from vitalcast.core.numerics import Rng
from vitalcast.forecasters.checkpoint import save_params
from vitalcast.models.experiment_model import load_experiment_config
from vitalcast.services.experiment_data import prepare_seed_data
from vitalcast.services.metrics import score_scaled
from vitalcast.services.pipeline import train_generator
from vitalcast.services.preprocessing import impute_cohort
from vitalcast.services.tuning import tune_lstm, tune_mlp

logger = logging.getLogger(__name__)

MODEL_KINDS = ("lstm", "mlp", "generator")


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a single model and write a checkpoint")
    parser.add_argument("config", help="Experiment JSON config (data, splits and hyperparameters)")
    parser.add_argument("--model", choices=MODEL_KINDS, default="lstm")
    parser.add_argument("--horizon", type=positive_int, default=1)
    parser.add_argument("--seed", type=non_negative_int, help="Split/training seed (default: first config seed)")
    parser.add_argument("-o", "--output", required=True, help="Checkpoint path")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    seed = config.seeds[0] if args.seed is None else args.seed
    config = apply_overrides(config, seeds=[seed], methods=["lstm-direct"], horizons=[args.horizon])
    data = prepare_seed_data(config, impute_cohort(load_cohort(config.data)), seed)
    rng = Rng(seed).substream("train", args.model)
    h, ti = args.horizon, data.target_index

    if args.model == "generator":
        model = train_generator(data, data.generative, config, rng)
        predictions = model.predict_batch(data.test.windows)[:, ti]
        h = 1
    elif args.model == "mlp":
        tuned = tune_mlp(
            data.train.flattened(),
            data.train.target(h),
            data.validation.windows,
            data.validation.target(h),
            config.mlp,
            config.tuning,
            rng,
            tag="TRAIN",
        )
        model = tuned.forecaster
        predictions = model.predict_batch(data.test.windows)[:, 0]
    else:
        tuned = tune_lstm(
            data.train.windows,
            data.train.target(h),
            data.validation.windows,
            data.validation.target(h),
            config.predictor,
            config.tuning,
            rng,
            tag="TRAIN",
        )
        model = tuned.forecaster
        predictions = model.predict_batch(data.test.windows)[:, 0]

    save_params(model, args.output, scaler=data.scaler)
    metric = score_scaled(np.asarray(predictions), data.test.target_raw(h), data.scaler, ti)
    print(f"model: {args.model} ({model.kind}), target: {config.target_vital}, horizon: t+{h}")
    print(f"test windows: {data.test.S}, mse: {metric.mse:.6f}, mape: {metric.mape:.6f}")
    print(f"written: {args.output}")
    return 0
