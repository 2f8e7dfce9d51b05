"""Subthreshold device equations.

The current law keeps the drain term so that regulator fixed points and
switching voltages are exact solutions of the model rather than of its
large-V_DS approximation. Every function accepts numpy arrays.
"""
from typing import Optional, Union

import numpy as np

from subpuf.core.constants import MOBILITY_TEMP_EXPONENT, T_REF
from subpuf.core.exceptions import DomainError
from subpuf.device.params import (
    Environment,
    PhysicalConstants,
    TransistorParams,
    VthDeviation,
)

ArrayLike = Union[float, np.ndarray]


def thermal_voltage(constants: PhysicalConstants, temperature: ArrayLike) -> ArrayLike:
    """Return the thermal voltage kT/q.

    Raises:
        DomainError: If any temperature is not strictly positive.
    """
    t = np.asarray(temperature, dtype=float)
    if np.any(t <= 0):
        raise DomainError(
            "Temperature must be positive", details={"temperature": temperature}
        )
    v_t = constants.boltzmann_k * t / constants.electron_charge_q
    return float(v_t) if v_t.ndim == 0 else v_t


def mobility_factor(temperature: float) -> float:
    """Mobility relative to T_ref, mu(T)/mu(T_ref) = (T/T_ref)^-1.5."""
    return (temperature / T_REF) ** MOBILITY_TEMP_EXPONENT


def source_bulk_voltage(env: Environment) -> float:
    """Source-bulk voltage seen by a well-biased device.

    A positive p-well bias forward-biases the NMOS bulk (V_SB = -V_PW). The
    PMOS deep n-well is swept with the opposite polarity so that its
    threshold magnitude moves the same way, which makes V_SB = -V_PW valid
    for both roles when thresholds are handled as magnitudes.
    """
    return -env.body_vpw


def effective_vth(
    params: TransistorParams,
    env: Environment,
    sampled_dev: Optional[VthDeviation] = None,
    v_sb: Optional[float] = None,
) -> ArrayLike:
    """Threshold voltage (magnitude) at the operating point ``env``.

    Vth = Vth0 + dVth + (gamma + dgamma)(sqrt|2phi_F + V_SB| - sqrt(2phi_F))
          - (k_T + dk_T)(T - T_ref)

    Raises:
        DomainError: If the body bias exceeds the model validity bound 2*phi_F.
    """
    if abs(env.body_vpw) > 2 * params.fermi_phi:
        raise DomainError(
            "Body bias outside model validity bound",
            details={"body_vpw": env.body_vpw, "limit": 2 * params.fermi_phi},
        )
    if v_sb is None:
        v_sb = source_bulk_voltage(env)
    dev = sampled_dev if sampled_dev is not None else VthDeviation.zeros(size=())

    two_phi = 2 * params.fermi_phi
    body = np.sqrt(abs(two_phi + v_sb)) - np.sqrt(two_phi)
    gamma = params.body_gamma + dev.gamma
    tempco = params.vth_temp_coeff + dev.tempco
    vth = (
        params.vth_nominal
        + dev.static
        + gamma * body
        - tempco * (env.temperature - T_REF)
    )
    vth = np.asarray(vth, dtype=float)
    return float(vth) if vth.ndim == 0 else vth


def effective_slope(
    params: TransistorParams, sampled_dev: Optional[VthDeviation] = None
) -> ArrayLike:
    """Slope factor including the sampled relative deviation."""
    if sampled_dev is None:
        return params.slope_m
    return params.slope_m * (1.0 + np.asarray(sampled_dev.slope))


def subthreshold_current(
    params: TransistorParams,
    v_gs: ArrayLike,
    v_ds: ArrayLike,
    vth_eff: ArrayLike,
    v_t: float,
    slope: Optional[ArrayLike] = None,
    mobility_scale: float = 1.0,
) -> ArrayLike:
    """Subthreshold drain current with the drain term kept.

    I = muCox (W/L)(m-1) V_T^2 exp((V_gs - Vth)/(m V_T)) (1 - exp(-V_ds/V_T))
    """
    if v_t <= 0:
        raise DomainError("Thermal voltage must be positive", details={"v_t": v_t})
    m = params.slope_m if slope is None else slope
    prefactor = params.mobility_cox * mobility_scale * params.aspect * (m - 1) * v_t**2
    return (
        prefactor
        * np.exp((np.asarray(v_gs) - vth_eff) / (m * v_t))
        * -np.expm1(-np.asarray(v_ds) / v_t)
    )


def log_subthreshold_current(
    params: TransistorParams,
    v_gs: ArrayLike,
    v_ds: ArrayLike,
    vth_eff: ArrayLike,
    v_t: float,
    slope: Optional[ArrayLike] = None,
    mobility_scale: float = 1.0,
) -> ArrayLike:
    """Natural log of :func:`subthreshold_current`; -inf where V_ds <= 0."""
    m = params.slope_m if slope is None else slope
    log_prefactor = np.log(
        params.mobility_cox * mobility_scale * params.aspect * (m - 1) * v_t**2
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        drain = np.where(
            np.asarray(v_ds) > 0,
            np.log(-np.expm1(-np.maximum(np.asarray(v_ds), 1e-300) / v_t)),
            -np.inf,
        )
    return log_prefactor + (np.asarray(v_gs) - vth_eff) / (m * v_t) + drain
