"""Synthetic bolted-joint response simulator.

A single-degree-of-freedom oscillator stands in for the monitored structure
so the detection pipeline can be exercised end to end without hardware. The
restoring force combines three joint elements:

- a linear spring carrying the preload-dependent share of the joint
  stiffness, tuned so the fully preloaded joint resonates at 130 Hz;
- a Jenkins element (elastic-perfectly-plastic slider) whose slip force
  scales with preload: micro-slip dissipates energy and distorts the
  response as the joint loosens;
- a contact spring with a one-sided dead zone of width equal to the
  preload-dependent clearance: the interface stays engaged in compression
  and separates over the clearance, which is the rattle mechanism that
  pumps energy into even harmonics of the drive.

The stuck-state stiffness decomposes as k_eff(p) = k_lin(p) + k_j + k_c with
k_j = k_c = (1 - r) k / 2, where r is the contact stiffness ratio, so that
k_eff interpolates between r*k at zero preload and k at full preload.

Integration is fixed-step classical RK4 with an event-free, tanh-regularized
slip law (no discontinuity handling); the hot loop is JIT-compiled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.signal
from numba import njit

from boltscope.errors import ParameterError, SimulationError
from boltscope.excitation import DEFAULT_SAMPLE_RATE, ExcitationSpec, render
from boltscope.signals import TimeSeries

TUNED_FREQ_HZ = 130.0
_FREQ_TOL_HZ = 0.5


@dataclass(frozen=True)
class JointModel:
    """Modal parameters of the monitored joint at a given preload fraction."""

    modal_mass: float = 1.0
    modal_stiffness: float = (2 * math.pi * TUNED_FREQ_HZ) ** 2
    modal_damping_ratio: float = 0.02
    preload_fraction: float = 1.0
    slip_force_at_full_preload: float = 120.0
    clearance_at_zero_preload: float = 2.0e-4
    contact_stiffness_ratio: float = 0.55

    def __post_init__(self):
        if not 0.0 <= self.preload_fraction <= 1.0:
            raise ParameterError(
                f"preload_fraction must be in [0, 1], got {self.preload_fraction}"
            )
        if self.modal_mass <= 0 or self.modal_stiffness <= 0:
            raise ParameterError("modal mass and stiffness must be > 0")
        if self.modal_damping_ratio < 0:
            raise ParameterError("modal_damping_ratio must be >= 0")
        if self.slip_force_at_full_preload <= 0:
            raise ParameterError("slip_force_at_full_preload must be > 0")
        if self.clearance_at_zero_preload < 0:
            raise ParameterError("clearance_at_zero_preload must be >= 0")
        if not 0.0 <= self.contact_stiffness_ratio <= 1.0:
            raise ParameterError("contact_stiffness_ratio must be in [0, 1]")
        if 2 * self.contact_stiffness_ratio < 1.0:
            raise ParameterError(
                "contact_stiffness_ratio below 0.5 leaves no linear load path at "
                "zero preload in the stiffness decomposition"
            )
        f_full = math.sqrt(self.modal_stiffness / self.modal_mass) / (2 * math.pi)
        if abs(f_full - TUNED_FREQ_HZ) > _FREQ_TOL_HZ:
            raise ParameterError(
                f"model is tuned for a {TUNED_FREQ_HZ} Hz joint at full preload; "
                f"modal_mass/modal_stiffness give {f_full:.2f} Hz"
            )

    # -- preload-dependent element parameters --------------------------------

    @property
    def slip_force(self) -> float:
        return self.preload_fraction * self.slip_force_at_full_preload

    @property
    def clearance(self) -> float:
        return (1.0 - self.preload_fraction) * self.clearance_at_zero_preload

    @property
    def effective_stiffness(self) -> float:
        """Stuck-state joint stiffness: r*k at p=0 up to k at p=1."""
        r = self.contact_stiffness_ratio
        return self.modal_stiffness * (r + (1.0 - r) * self.preload_fraction)

    @property
    def natural_frequency_hz(self) -> float:
        return math.sqrt(self.effective_stiffness / self.modal_mass) / (2 * math.pi)

    @property
    def damping_coefficient(self) -> float:
        return 2.0 * self.modal_damping_ratio * math.sqrt(self.modal_stiffness * self.modal_mass)

    def stiffness_split(self) -> tuple[float, float, float]:
        """(k_lin, k_jenkins, k_contact) summing to effective_stiffness."""
        share = 0.5 * (1.0 - self.contact_stiffness_ratio) * self.modal_stiffness
        return (self.effective_stiffness - 2.0 * share, share, share)


def preload_to_params(p: float, base: JointModel) -> JointModel:
    """Model at preload fraction p; slip force, clearance, and stiffness follow."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"preload fraction must be in [0, 1], got {p}")
    return replace(base, preload_fraction=p)


@dataclass(frozen=True)
class SimConfig:
    """Integration and measurement settings.

    friction_smoothness and slip_velocity_scale shape the tanh regularization
    of the slip law; the defaults are pinned by the test suite.
    """

    integrator_step: float = 1.0 / 25600.0
    duration: float | None = None
    output_sample_rate: float = 25600.0
    noise_floor_rms: float = 1.0e-4
    friction_smoothness: float = 25.0
    slip_velocity_scale: float = 1.0e-3

    def __post_init__(self):
        if self.integrator_step <= 0:
            raise ParameterError("integrator_step must be > 0")
        if self.duration is not None and self.duration <= 0:
            raise ParameterError("duration must be > 0 when given")
        if self.output_sample_rate <= 0:
            raise ParameterError("output_sample_rate must be > 0")
        if self.output_sample_rate > 1.0 / self.integrator_step * (1 + 1e-9):
            raise ParameterError(
                f"output_sample_rate {self.output_sample_rate} Hz exceeds the "
                f"integrator rate {1.0 / self.integrator_step:.1f} Hz"
            )
        if self.noise_floor_rms < 0:
            raise ParameterError("noise_floor_rms must be >= 0")
        if self.friction_smoothness <= 0 or self.slip_velocity_scale <= 0:
            raise ParameterError("friction regularization parameters must be > 0")

    @property
    def decimation(self) -> int:
        ratio = 1.0 / (self.integrator_step * self.output_sample_rate)
        k = int(round(ratio))
        if k < 1 or abs(ratio - k) > 1e-6:
            raise ParameterError(
                f"integrator rate {1.0 / self.integrator_step:.1f} Hz must be an "
                f"integer multiple of output_sample_rate {self.output_sample_rate} Hz"
            )
        return k


@njit(cache=True)
def _deriv(x, v, w, f_ext, m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref):
    # contact spring: engaged in compression, dead zone of width `gap` when opening
    if x <= 0.0:
        f_contact = k_c * x
    elif x >= gap:
        f_contact = k_c * (x - gap)
    else:
        f_contact = 0.0
    # Jenkins slider force w: elastic loading until |w| reaches the slip
    # force in the drive direction, then a smooth transition to slipping
    if f_slip > 0.0:
        s = math.tanh(v / v_ref)
        load = w * s / f_slip
        release = 0.5 * (1.0 + math.tanh(kappa * (load - 1.0)))
        dw = k_j * v * (1.0 - release)
    else:
        dw = 0.0
    a = (f_ext - c * v - k_lin * x - w - f_contact) / m
    return v, a, dw


@njit(cache=True)
def _rk4_run(f_half, h, x0, v0, m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref, blow_abs):
    n = (f_half.shape[0] - 1) // 2
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    ws = np.empty(n + 1)
    acc = np.empty(n + 1)
    x = x0
    v = v0
    w = 0.0
    _, a0, _ = _deriv(x, v, w, f_half[0], m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref)
    xs[0] = x
    vs[0] = v
    ws[0] = w
    acc[0] = a0
    for k in range(n):
        f0 = f_half[2 * k]
        fm = f_half[2 * k + 1]
        f1 = f_half[2 * k + 2]
        k1x, k1v, k1w = _deriv(x, v, w, f0, m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref)
        k2x, k2v, k2w = _deriv(
            x + 0.5 * h * k1x, v + 0.5 * h * k1v, w + 0.5 * h * k1w, fm,
            m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref,
        )
        k3x, k3v, k3w = _deriv(
            x + 0.5 * h * k2x, v + 0.5 * h * k2v, w + 0.5 * h * k2w, fm,
            m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref,
        )
        k4x, k4v, k4w = _deriv(
            x + h * k3x, v + h * k3v, w + h * k3w, f1,
            m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref,
        )
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        _, a, _ = _deriv(x, v, w, f1, m, c, k_lin, k_j, k_c, gap, f_slip, kappa, v_ref)
        xs[k + 1] = x
        vs[k + 1] = v
        ws[k + 1] = w
        acc[k + 1] = a
        if not (abs(x) < 1.0e12) or not (abs(a) <= blow_abs):
            return xs, vs, ws, acc, k + 1
    return xs, vs, ws, acc, -1


def _integrate(model: JointModel, excitation: TimeSeries, cfg: SimConfig, x0=0.0, v0=0.0):
    excitation.require_nonempty("simulation")
    duration = cfg.duration if cfg.duration is not None else excitation.duration
    if duration > excitation.duration * (1 + 1e-9):
        raise ParameterError(
            f"requested duration {duration} s exceeds excitation length "
            f"{excitation.duration} s"
        )
    h = cfg.integrator_step
    n_steps = int(round(duration / h))
    if n_steps < 1:
        raise ParameterError("duration shorter than one integrator step")
    t_half = np.arange(2 * n_steps + 1) * (h / 2.0)
    t_exc = np.arange(excitation.n_samples) / excitation.sample_rate
    f_half = np.interp(t_half, t_exc, excitation.samples)

    k_lin, k_j, k_c = model.stiffness_split()
    f_amp = float(np.max(np.abs(excitation.samples)))
    blow_abs = 1.0e6 * f_amp if f_amp > 0 else np.inf
    xs, vs, ws, acc, blew_at = _rk4_run(
        f_half,
        h,
        float(x0),
        float(v0),
        model.modal_mass,
        model.damping_coefficient,
        k_lin,
        k_j,
        k_c,
        model.clearance,
        model.slip_force,
        cfg.friction_smoothness,
        cfg.slip_velocity_scale,
        blow_abs,
    )
    if blew_at >= 0:
        raise SimulationError(
            f"integrator unstable after {blew_at} steps "
            f"(t = {blew_at * h:.6f} s) at step size {h:.3e} s; reduce integrator_step"
        )
    return xs, vs, ws, acc, n_steps


@dataclass(frozen=True)
class SimStates:
    """Noise-free trajectories on the internal integrator grid."""

    times: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray
    slider_force: np.ndarray
    acceleration: np.ndarray


def simulate_states(
    model: JointModel,
    excitation: TimeSeries,
    cfg: SimConfig,
    x0: float = 0.0,
    v0: float = 0.0,
) -> SimStates:
    """Full state trajectories without sensor noise.

    Intended for physics checks (energy accounting needs the Jenkins slider
    force); the measurement path is simulate_response.
    """
    xs, vs, ws, acc, n_steps = _integrate(model, excitation, cfg, x0=x0, v0=v0)
    times = np.arange(n_steps + 1) * cfg.integrator_step
    return SimStates(times, xs, vs, ws, acc)


def simulate_response(
    model: JointModel,
    excitation: TimeSeries,
    cfg: SimConfig,
    seed=0,
) -> TimeSeries:
    """Acceleration-like response at the output rate with sensor noise.

    The excitation samples are treated as a force on the modal mass. The
    internal trajectory is decimated to cfg.output_sample_rate (anti-aliased
    when the rates differ) and Gaussian noise at noise_floor_rms is added to
    model the sensor floor. Bit-identical output for identical inputs and
    seed.

    A raw TimeSeries carries no parametric bandwidth, so the step-vs-content
    rule (integrator_step <= 1/(20 f_max)) is enforced in run_protocol where
    the stimulus spec is known; callers providing bare series pick their own
    step.
    """
    if excitation.sample_rate < cfg.output_sample_rate * (1 - 1e-9):
        raise ParameterError(
            f"excitation sample rate {excitation.sample_rate} Hz is below the "
            f"output sample rate {cfg.output_sample_rate} Hz"
        )
    k = cfg.decimation
    _, _, _, acc, n_steps = _integrate(model, excitation, cfg)
    if k == 1:
        out = acc[:n_steps]
    else:
        out = scipy.signal.resample_poly(acc, up=1, down=k)[: n_steps // k]
    if cfg.noise_floor_rms > 0:
        rng = np.random.default_rng(seed)
        out = out + rng.normal(0.0, cfg.noise_floor_rms, out.size)
    return TimeSeries(out, cfg.output_sample_rate, channel="accel-z", unit="m/s^2")


@dataclass(frozen=True)
class ProtocolRecord:
    """One (stimulus, response) pair from a protocol run."""

    spec: ExcitationSpec
    response: TimeSeries
    preload_fraction: float
    seed: int


def default_protocol(amplitude: float = 200.0, duration: float = 8.0) -> list[ExcitationSpec]:
    """The canonical excitation grid: a 130 Hz tone plus FM at each
    modulation frequency in {1, 2, 5, 10, 20} Hz over the 125-135 Hz band."""
    protocol = [ExcitationSpec.tone(130.0, amplitude=amplitude, duration=duration)]
    protocol.extend(
        ExcitationSpec.fm(130.0, f_m, 5.0, amplitude=amplitude, duration=duration)
        for f_m in (1.0, 2.0, 5.0, 10.0, 20.0)
    )
    return protocol


def run_protocol(
    model: JointModel,
    protocol: list[ExcitationSpec],
    cfg: SimConfig,
    excitation_sample_rate: float = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
) -> list[ProtocolRecord]:
    """Simulate one response per spec, in protocol order.

    Each record gets an independent, reproducible noise stream derived from
    the dataset seed. Rerunning with a different seed yields an independent
    repeat of the whole protocol for error-band statistics.
    """
    if not protocol:
        raise ParameterError("protocol must contain at least one excitation spec")
    for spec in protocol:
        limit = 1.0 / (20.0 * spec.max_frequency)
        if cfg.integrator_step > limit * (1 + 1e-9):
            raise ParameterError(
                f"integrator_step {cfg.integrator_step:.3e} s too coarse for "
                f"{spec.kind} content up to {spec.max_frequency} Hz; need <= {limit:.3e} s"
            )
    children = np.random.SeedSequence(seed).spawn(len(protocol))
    records = []
    for spec, child in zip(protocol, children):
        exc = render(spec, excitation_sample_rate)
        response = simulate_response(model, exc, cfg, seed=child)
        records.append(
            ProtocolRecord(
                spec=spec,
                response=response,
                preload_fraction=model.preload_fraction,
                seed=seed,
            )
        )
    return records
