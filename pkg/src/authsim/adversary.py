"""Legitimate and adversarial packet generators.

Two attacker classes are modeled:

* ``ATTACKER1`` -- an infiltrated sensor node. Its channel is the sensor's
  real channel, while the process value is drawn from the stationary output
  distribution ``CN(0, C_P X_P C_P^H + N_P)``, independent of the true state.
* ``ATTACKER2`` -- an adversarial device placed in the environment. It
  mimics the process value perfectly (true state plus fresh noise), while the
  fusion center sees its own channel ``CN(0, C_C X_C C_C^H + N_C)``.

Each branch of an attacker is either ``legitimate-like`` (statistically
identical to the legitimate transmitter) or spoofed with an explicit mean and
covariance.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from ._linalg import complex_normal, hermitian, is_hermitian_psd
from .errors import DimensionMismatch
from .kalman import innovation_covariance
from .statespace import stationary_covariance


class Origin(enum.IntEnum):
    LEGITIMATE = 0
    ATTACKER1 = 1
    ATTACKER2 = 2


class AdversaryKind(enum.Enum):
    INFILTRATED_SENSOR = "infiltrated_sensor"
    DEVICE = "device"


@dataclass(frozen=True)
class SpoofSpec:
    """Spoofed measurement distribution ``CN(mean, cov)`` for one branch.

    ``cov=None`` selects the stationary output covariance of the model;
    ``cov_scale`` multiplies whichever covariance is used.
    """

    mean: np.ndarray = None
    cov: np.ndarray = None
    cov_scale: float = 1.0

    def __post_init__(self):
        if self.cov is not None:
            cov = np.atleast_2d(np.asarray(self.cov, dtype=complex))
            if not is_hermitian_psd(cov):
                raise ValueError("spoof covariance must be Hermitian PSD")
            object.__setattr__(self, "cov", hermitian(cov))
        if self.cov_scale < 0:
            raise ValueError("cov_scale must be non-negative")

    def resolve(self, model, g):
        c = model.output(g)
        cov = self.cov
        if cov is None:
            cov = hermitian(c @ stationary_covariance(model) @ c.conj().T + model.N)
        if cov.shape != (c.shape[0], c.shape[0]):
            raise DimensionMismatch(f"spoof covariance {cov.shape} vs output dim {c.shape[0]}")
        mean = np.zeros(c.shape[0], dtype=complex) if self.mean is None else np.asarray(
            self.mean, dtype=complex
        )
        return mean, self.cov_scale * cov


@dataclass(frozen=True)
class AdversaryModel:
    """Attacker strategy.

    ``process`` / ``channel`` are :class:`SpoofSpec` for spoofed branches or
    ``None`` for branches that behave like the legitimate transmitter.
    ``full_knowledge`` selects ``C~ = C`` instead of ``C~ = 0`` for the
    channel-hardening approximation.
    """

    kind: AdversaryKind
    process: SpoofSpec = None
    channel: SpoofSpec = None
    full_knowledge: bool = False

    @classmethod
    def infiltrated_sensor(cls, cov_scale=1.0, full_knowledge=False):
        return cls(AdversaryKind.INFILTRATED_SENSOR, process=SpoofSpec(cov_scale=cov_scale),
                   full_knowledge=full_knowledge)

    @classmethod
    def device(cls, cov_scale=1.0, full_knowledge=False):
        return cls(AdversaryKind.DEVICE, channel=SpoofSpec(cov_scale=cov_scale),
                   full_knowledge=full_knowledge)

    def knowledge(self, model, g):
        c = model.output(g)
        return c.copy() if self.full_knowledge else np.zeros_like(c)


def default_adversaries(full_knowledge=False):
    return {
        Origin.ATTACKER1: AdversaryModel.infiltrated_sensor(full_knowledge=full_knowledge),
        Origin.ATTACKER2: AdversaryModel.device(full_knowledge=full_knowledge),
    }


@dataclass
class Packet:
    sensor: int
    t: float
    y_P: np.ndarray
    y_C: np.ndarray
    origin: Origin = Origin.LEGITIMATE
    meta: dict = field(default_factory=dict)


def _legit(model, g, x, rng, n):
    c = model.output(g)
    return complex_normal(rng, model.N, size=n, mean=c @ x)


def _branch(spec, model, g, x, rng, n):
    if spec is None:
        return _legit(model, g, x, rng, n)
    mean, cov = spec.resolve(model, g)
    return complex_normal(rng, cov, size=n, mean=mean)


def _resolve(origin, adversaries):
    if origin == Origin.LEGITIMATE:
        return None
    adversaries = adversaries or default_adversaries()
    return adversaries[Origin(origin)]


def generate_measurements(origin, models, true_states, g, rng, n, adversaries=None):
    """Draw ``n`` measurement pairs for transmitter ``origin``.

    ``models`` is ``(process_model, channel_model)``; the process model may be
    ``None`` when the process branch is disabled. ``true_states`` is
    ``(x_P, [x_C for each sensor])``. Returns ``(y_P, y_C)`` with shapes
    ``(n, M_P)`` and ``(n, M_C)``; ``y_P`` has zero columns when disabled.
    """
    pmodel, cmodel = models
    x_P, x_C = true_states
    adv = _resolve(origin, adversaries)
    if pmodel is None:
        y_P = np.zeros((n, 0), dtype=complex)
    else:
        y_P = _branch(adv.process if adv else None, pmodel, g, x_P, rng, n)
    cmodel.output(g)
    y_C = _branch(adv.channel if adv else None, cmodel, g, x_C[g], rng, n)
    return y_P, y_C


def generate_packet(origin, models, true_states, g, t, rng, adversaries=None):
    y_P, y_C = generate_measurements(origin, models, true_states, g, rng, 1, adversaries)
    return Packet(sensor=g, t=float(t), y_P=y_P[0], y_C=y_C[0], origin=Origin(origin))


def analytic_params(adv, beliefs, models, g):
    """Mean and covariance of the received measurements of attacker ``adv``.

    ``beliefs`` is ``(process_belief, channel_belief_of_g)`` predicted to the
    packet time. Returns ``(y_mean_P, Y_P, y_mean_C, Y_C)``. Legitimate-like
    branches report the Kalman predictive distribution ``CN(C z, C Z C^H + N)``,
    so their innovation mean is zero. Disabled branches are ``(None, None)``.
    """
    pbel, cbel = beliefs
    pmodel, cmodel = models
    out = []
    for spec, model, bel in ((adv.process, pmodel, pbel), (adv.channel, cmodel, cbel)):
        if model is None:
            out.extend([None, None])
        elif spec is None:
            c = model.output(g)
            out.extend([c @ bel.mean, innovation_covariance(bel, model, g)])
        else:
            out.extend(spec.resolve(model, g))
    return tuple(out)
