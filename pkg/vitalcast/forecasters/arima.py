"""
ARIMA(2,0,1) Forecaster

Fitted per window on the last `history` values of the target vital:

1. demean the series
2. Hannan-Rissanen start: long AR by least squares, then OLS of x_t on
   (x_{t-1}, x_{t-2}, e_{t-1}) using the long-AR residuals
3. conditional-sum-of-squares refinement (scipy least_squares, |theta| <= 0.99)
4. if an AR inverse root lies on or outside the unit circle it is shrunk to
   modulus 0.99 and the fit is flagged `projected`

Forecasts run the ARMA recursion with future innovations set to zero.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import least_squares
from scipy.signal import lfilter

from vitalcast.core.errors import ContractViolation
from vitalcast.forecasters.base import Forecaster, as_batch

logger = logging.getLogger(__name__)

MIN_HISTORY = 20
AR_ORDER = 2
MA_BOUND = 0.99
ROOT_BOUND = 0.99


@dataclass(frozen=True)
class ArimaCoefficients:
    phi: np.ndarray  # (phi1, phi2)
    theta: float
    mean: float
    sigma2: float
    projected: bool = False


def _lagmat(x: np.ndarray, order: int) -> np.ndarray:
    """Rows t = order..n-1 holding (x_{t-1}, ..., x_{t-order})."""
    return sliding_window_view(x, order)[:-1, ::-1]


def css_residuals(phi: np.ndarray, theta: float, x: np.ndarray) -> np.ndarray:
    """e_t = x_t - phi1 x_{t-1} - phi2 x_{t-2} - theta e_{t-1}, conditional on e_1 = 0 (t >= 2)."""
    u = x[AR_ORDER:] - phi[0] * x[1:-1] - phi[1] * x[:-2]
    return lfilter([1.0], [1.0, theta], u)


def _hannan_rissanen(x: np.ndarray):
    n = x.size
    long_order = min(max(int(np.floor(np.log(n) ** 2)), 2 * AR_ORDER), n // 3)
    coef, *_ = np.linalg.lstsq(_lagmat(x, long_order), x[long_order:], rcond=None)
    resid = x[long_order:] - _lagmat(x, long_order) @ coef
    # rows t = long_order+1 .. n-1
    y = x[long_order + 1 :]
    design = np.column_stack([x[long_order:-1], x[long_order - 1 : -2], resid[:-1]])
    params, *_ = np.linalg.lstsq(design, y, rcond=None)
    return params[:2], float(np.clip(params[2], -MA_BOUND + 1e-3, MA_BOUND - 1e-3))


def project_stationary(phi: np.ndarray):
    """Shrink AR inverse roots to modulus ROOT_BOUND; returns (phi, projected)."""
    roots = np.roots([1.0, -phi[0], -phi[1]])
    moduli = np.abs(roots)
    if np.all(moduli < 1.0):
        return np.asarray(phi, dtype=np.float64), False
    roots = np.where(moduli >= 1.0, roots * ROOT_BOUND / np.maximum(moduli, 1e-300), roots)
    return np.array([np.real(roots.sum()), -np.real(roots.prod())]), True


def arima_fit(series: np.ndarray) -> ArimaCoefficients:
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < MIN_HISTORY:
        raise ContractViolation(f"ARIMA needs at least {MIN_HISTORY} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ContractViolation("ARIMA series must be finite")
    mean = float(x.mean())
    x = x - mean
    if np.ptp(x) < 1e-12:
        return ArimaCoefficients(phi=np.zeros(AR_ORDER), theta=0.0, mean=mean, sigma2=0.0)

    phi0, theta0 = _hannan_rissanen(x)
    lower = [-2.0, -1.0, -MA_BOUND]
    upper = [2.0, 1.0, MA_BOUND]
    start = np.clip(np.r_[phi0, theta0], np.add(lower, 1e-6), np.subtract(upper, 1e-6))

    result = least_squares(lambda p: css_residuals(p[:2], p[2], x), start, bounds=(lower, upper), method="trf")
    params = result.x if result.success else start
    phi, projected = project_stationary(params[:2])
    theta = float(params[2])
    resid = css_residuals(phi, theta, x)
    if projected:
        logger.debug(f"[ARIMA] ⚠️ Non-stationary AR fit {params[:2]} projected to {phi}")
    return ArimaCoefficients(phi=phi, theta=theta, mean=mean, sigma2=float(np.mean(resid**2)), projected=projected)


def arima_forecast_path(coeffs: ArimaCoefficients, series: np.ndarray, horizon: int) -> np.ndarray:
    """Forecasts for t+1 .. t+horizon."""
    if horizon < 1:
        raise ContractViolation(f"horizon must be >= 1, got {horizon}")
    x = np.asarray(series, dtype=np.float64).ravel() - coeffs.mean
    if x.size < AR_ORDER + 1:
        raise ContractViolation(f"need at least {AR_ORDER + 1} values to forecast")
    last_resid = float(css_residuals(coeffs.phi, coeffs.theta, x)[-1])
    history = [x[-2], x[-1]]
    path = []
    for step in range(horizon):
        value = coeffs.phi[0] * history[-1] + coeffs.phi[1] * history[-2]
        if step == 0:
            value += coeffs.theta * last_resid
        history.append(value)
        path.append(value)
    return np.asarray(path) + coeffs.mean


def arima_forecast(coeffs: ArimaCoefficients, series: np.ndarray, horizon: int) -> float:
    return float(arima_forecast_path(coeffs, series, horizon)[-1])


class ArimaForecaster(Forecaster):
    """Refits ARIMA(2,0,1) on every window's target-vital history; no global training."""

    kind = "arima"

    def __init__(self, horizon: int, target_index: int, history: int = MIN_HISTORY):
        if history < MIN_HISTORY:
            raise ContractViolation(f"ARIMA history must be >= {MIN_HISTORY}")
        self.horizon = horizon
        self.target_index = target_index
        self.history = history

    @property
    def output_dim(self) -> int:
        return 1

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = as_batch(windows)
        if windows.shape[1] < self.history:
            raise ContractViolation(f"window has {windows.shape[1]} steps, ARIMA history is {self.history}")
        out = np.empty((windows.shape[0], 1))
        for s, window in enumerate(windows):
            series = window[-self.history :, self.target_index]
            coeffs = arima_fit(series)
            out[s, 0] = arima_forecast(coeffs, series, self.horizon)
        return out
