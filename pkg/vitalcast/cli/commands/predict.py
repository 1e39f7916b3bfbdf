"""
predict: forecast a patient's next values from a checkpoint

Uses the patient's last complete window. Models with a single output are direct
forecasters for --horizon; a five-output generator is rolled forward --horizon
steps. Values are printed in original units.
"""

import argparse
import logging

from vitalcast.cli.common import positive_int
from vitalcast.core.errors import CheckpointError, ContractViolation
from vitalcast.forecasters.checkpoint import load_params
from vitalcast.models.patient_model import N_FEATURES, N_VITALS, VITALS, vital_index
from vitalcast.services.ingest import ingest_csv
from vitalcast.services.preprocessing import impute_locf
from vitalcast.services.strategies import direct_forecast, iterative_forecast
from vitalcast.services.windowing import latest_window

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("predict", help="Forecast one patient from a checkpoint")
    parser.add_argument("checkpoint", help="Checkpoint written by `train`")
    parser.add_argument("csv", help="Patient CSV")
    parser.add_argument("--patient", required=True, help="patient_id to forecast")
    parser.add_argument("--target", choices=VITALS, default="heart_rate", help="Target vital")
    parser.add_argument("--horizon", type=positive_int, default=1)
    parser.add_argument("--window-length", type=positive_int, default=20)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    checkpoint = load_params(args.checkpoint)
    if checkpoint.scaler is None:
        raise CheckpointError(f"{args.checkpoint} carries no scaler; retrain with `vitalcast train`")
    model = checkpoint.model

    window_length = args.window_length
    if model.kind == "mlp":
        window_length = model.params.input_size // N_FEATURES

    cohort = ingest_csv(args.csv)
    if args.patient not in cohort.ids:
        raise ContractViolation(f"patient {args.patient!r} not found in {args.csv}")
    record = impute_locf(cohort.by_id(args.patient))
    window = latest_window(record, window_length, checkpoint.scaler)
    ti = vital_index(args.target)

    if model.output_dim == N_VITALS:
        forecast = iterative_forecast(model, window, args.horizon, ti, checkpoint.scaler)
    elif model.output_dim == 1:
        forecast = direct_forecast({args.horizon: model}, window, target_index=ti, scaler=checkpoint.scaler)
    else:
        raise ContractViolation(f"cannot forecast with a {model.output_dim}-output {model.kind} model")

    for h in forecast.horizons:
        print(f"{args.patient} {args.target} t+{h}: {forecast[h]:.2f}")
    return 0
