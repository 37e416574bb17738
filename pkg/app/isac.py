"""
ISAC ranging between a charging node and an approaching MCV: chirp
synthesis, noisy echo, matched filtering, delay and range estimation.
"""

import logging
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np
import pandas as pd
from scipy import signal

from .network import Mcv, Network, SensorNode, euclidean_distance

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 2.99792458e8
MIN_WAVEFORM_SAMPLES = 8


class NoSignalDetected(RuntimeError):
    """The matched filter output carries no energy at any non-negative lag."""


@dataclass(frozen=True)
class IsacConfig:
    sample_rate: float = 1e9
    duration: float = 1e-6
    f0: float = 1e7
    f1: float = 1e8
    snr_db: float = 10.0

    @classmethod
    def from_simulation(cls, cfg) -> 'IsacConfig':
        return cls(cfg.isac_sample_rate, cfg.isac_pulse_duration, cfg.isac_f0, cfg.isac_f1, cfg.isac_snr_db)

    @property
    def range_quantum(self) -> float:
        """Distance spanned by one sample of two-way delay."""
        return SPEED_OF_LIGHT / (2 * self.sample_rate)


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: float
    duration: float
    f0: float
    f1: float
    kind: str = 'linear-chirp'

    @property
    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))


@dataclass
class EchoTrace:
    received: np.ndarray
    true_delay: float
    snr_db: float
    noise_seed: Optional[int]


@dataclass
class CorrelationTrace:
    """Matched filter output; ``lags[k]`` is the sample lag of ``values[k]``."""
    values: np.ndarray
    lags: np.ndarray


@dataclass(frozen=True)
class DetectionResult:
    estimated_delay: float
    estimated_distance: float
    detected: bool
    correlation_peak: float

    def to_dict(self) -> dict:
        return {
            'estimated_delay': self.estimated_delay,
            'estimated_distance': self.estimated_distance,
            'detected': self.detected,
            'correlation_peak': self.correlation_peak,
        }


def synth_waveform(sample_rate: float, duration: float, f0: float, f1: float) -> Waveform:
    """Unit-amplitude linear chirp sweeping f0 -> f1 over ``duration``."""
    if duration <= 0:
        raise ValueError(f"Pulse duration must be positive, got {duration}")
    if sample_rate <= 2 * max(f0, f1):
        raise ValueError(f"Sample rate {sample_rate} Hz undersamples a chirp reaching {max(f0, f1)} Hz")

    length = int(round(duration * sample_rate))
    if length < MIN_WAVEFORM_SAMPLES:
        raise ValueError(f"Waveform has {length} samples; at least {MIN_WAVEFORM_SAMPLES} are required")

    t = np.arange(length) / sample_rate
    samples = signal.chirp(t, f0=f0, t1=duration, f1=f1, method='linear')
    return Waveform(samples=samples, sample_rate=sample_rate, duration=duration, f0=f0, f1=f1)


def simulate_echo(w: Waveform, true_delay: float, snr_db: float, noise_seed: Optional[int] = None) -> EchoTrace:
    """Delayed copy of the pulse plus white Gaussian noise at ``snr_db`` (``inf`` disables noise)."""
    if true_delay < 0:
        raise ValueError(f"Echo delay cannot be negative, got {true_delay}")

    shift = int(round(true_delay * w.sample_rate))
    received = np.zeros(len(w.samples) + shift)
    received[shift:] = w.samples

    if not np.isinf(snr_db):
        signal_power = float(np.mean(w.samples ** 2))
        noise_power = signal_power / 10 ** (snr_db / 10)
        rng = np.random.default_rng(noise_seed)
        received = received + rng.normal(0.0, np.sqrt(noise_power), size=received.shape)

    return EchoTrace(received=received, true_delay=true_delay, snr_db=snr_db, noise_seed=noise_seed)


def matched_filter(x: EchoTrace, s: Waveform) -> CorrelationTrace:
    """y[k] = sum_n x[n] s[n - k] over the full overlap, lags from -(len(s) - 1) to len(x) - 1."""
    if len(x.received) == 0 or len(s.samples) == 0:
        raise ValueError("Matched filter needs non-empty received and template sequences")

    values = signal.correlate(x.received, s.samples, mode='full', method='auto')
    lags = signal.correlation_lags(len(x.received), len(s.samples), mode='full')
    return CorrelationTrace(values=values, lags=lags)


def estimate_delay(y: CorrelationTrace, sample_rate: float) -> float:
    """Delay of the correlation peak over non-negative lags; ties go to the smallest lag."""
    if len(y.values) == 0:
        raise ValueError("Correlation sequence is empty")

    causal = y.lags >= 0
    values, lags = y.values[causal], y.lags[causal]
    if len(values) == 0 or not np.any(values):
        raise NoSignalDetected("no signal detected")
    return float(lags[int(np.argmax(values))]) / sample_rate


def estimate_distance(tau: float) -> float:
    """One-way distance from a two-way delay."""
    if tau < 0:
        raise ValueError(f"Delay cannot be negative, got {tau}")
    return SPEED_OF_LIGHT * tau / 2


def delay_for_distance(distance: float) -> float:
    return 2 * distance / SPEED_OF_LIGHT


def range_once(distance: float, sensing_range: float, cfg: IsacConfig = IsacConfig(),
               noise_seed: Optional[int] = None, waveform: Optional[Waveform] = None) -> DetectionResult:
    """
    One node-to-MCV ranging exchange at a known geometric distance. The
    estimate lives on a grid of c/(2 fs); the sensing boundary is inclusive up
    to half a grid step so an MCV standing on R_s counts as inside.
    """
    waveform = waveform or synth_waveform(cfg.sample_rate, cfg.duration, cfg.f0, cfg.f1)
    echo = simulate_echo(waveform, delay_for_distance(distance), cfg.snr_db, noise_seed)
    correlation = matched_filter(echo, waveform)
    tau = estimate_delay(correlation, waveform.sample_rate)
    estimated = estimate_distance(tau)
    peak = float(np.max(correlation.values[correlation.lags >= 0]))
    half_step = SPEED_OF_LIGHT / (4 * waveform.sample_rate)
    return DetectionResult(estimated_delay=tau, estimated_distance=estimated,
                           detected=estimated <= sensing_range + half_step, correlation_peak=peak)


def detect_mcv(node: SensorNode, mcv: Mcv, net: Network, isac_cfg: IsacConfig = IsacConfig(),
               noise_seed: Optional[int] = None, waveform: Optional[Waveform] = None) -> DetectionResult:
    """Range the MCV from the node; ``detected`` means it is inside the node's sensing region."""
    distance = euclidean_distance(node.position, mcv.position)
    result = range_once(distance, net.sensing_range, isac_cfg, noise_seed, waveform)
    logger.debug(f"Node {node.id} ranged MCV {mcv.id}: true {distance:.2f} m, "
                 f"estimated {result.estimated_distance:.2f} m, detected={result.detected}")
    return result


def ranging_trials(delay_samples: int, snr_db: float, trials: int, seed: int = 0,
                   cfg: IsacConfig = IsacConfig()) -> np.ndarray:
    """Monte-Carlo sample errors of the delay estimate at a fixed delay."""
    waveform = synth_waveform(cfg.sample_rate, cfg.duration, cfg.f0, cfg.f1)
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    errors = np.empty(trials, dtype=int)
    for i, trial_seed in enumerate(seeds):
        echo = simulate_echo(waveform, delay_samples / cfg.sample_rate, snr_db, int(trial_seed))
        tau = estimate_delay(matched_filter(echo, waveform), cfg.sample_rate)
        errors[i] = int(round(tau * cfg.sample_rate)) - delay_samples
    return errors


def write_correlation_csv(y: CorrelationTrace, handle: TextIO):
    """Debug dump of a matched filter output as ``lag,value`` rows."""
    pd.DataFrame({'lag': y.lags.astype(int), 'value': y.values}).to_csv(handle, index=False)
