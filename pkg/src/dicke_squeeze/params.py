"""Parameter chain: raw device rates to effective twisting-model constants.

All engine-level frequencies are angular (rad/s); JSON configs carry ordinary
frequencies f = omega/2pi in Hz and are converted exactly once, here.

The chain implemented:

    Gamma = Delta G^2 / (Delta^2 - omega_b^2)        (phonon squeeze knob)
    r     = (1/4) ln(1 - 4 Gamma/omega_b)
    omega_r = e^{2r} omega_b                          (renormalized phonon)
    tanh 2r = 2 Gamma / (2 Gamma - omega_b)
    chi   = g^2 / omega_r                             (bare twisting rate)
    chi_tilde = chi cosh 2r
    Omega_tilde = Omega - chi                         (residual precession)
    gamma_m = omega_b / Q_m
    Gamma_gamma = gamma_m g^2 / omega_r^2             (collective spin decay)
    c     = Gamma_gamma (n_th + 1/2)
    eps   = 4c / (sqrt(2) chi + 2c)

omega_r may be supplied directly (experimental regimes quote it as an
independent knob); the squeeze factors then still follow from Gamma/omega_b
and the chain value e^{2r} omega_b is not enforced.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum

from scipy.constants import hbar, k as k_B

from .errors import ConfigError, DomainError, EngineWarning

# Tolerance for recognizing the special twisting schemes from Gamma.
SCHEME_RTOL = 1e-9


class Scheme(str, Enum):
    OAT = "OAT"          # Gamma = 0: one-axis twisting
    TAT_YZ = "TAT_yz"    # Gamma = -omega_b/4: two-axis, y-z plane
    TAT_XZ = "TAT_xz"    # Gamma = +omega_b/8: two-axis, x-z plane
    MIXED = "mixed"      # anything else


# Gamma/omega_b ratios that define the named schemes.
_SCHEME_RATIO = {Scheme.OAT: 0.0, Scheme.TAT_YZ: -0.25, Scheme.TAT_XZ: 0.125}


def classify_scheme(Gamma: float, omega_b: float, rtol: float = SCHEME_RTOL) -> Scheme:
    """Classify the twisting scheme from the squeeze knob Gamma.

    Equality with the special values {0, -omega_b/4, +omega_b/8} is tested
    with absolute tolerance rtol*omega_b (all targets scale with omega_b).
    """
    if omega_b <= 0:
        raise DomainError(f"omega_b must be positive, got {omega_b}")
    tol = rtol * omega_b
    for scheme, ratio in _SCHEME_RATIO.items():
        if abs(Gamma - ratio * omega_b) <= tol:
            return scheme
    return Scheme.MIXED


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation (e^{hbar omega / k_B T} - 1)^{-1}.

    temperature = 0 returns exactly 0; negative inputs are domain errors.
    """
    if omega <= 0:
        raise DomainError(f"mode frequency must be positive, got {omega}")
    if temperature < 0:
        raise DomainError(f"temperature must be non-negative, got {temperature}")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(hbar * omega / (k_B * temperature))


def squeeze_knob_from_linearized(Delta: float, G: float, omega_b: float) -> float:
    """Gamma = Delta G^2 / (Delta^2 - omega_b^2); pole at |Delta| = omega_b."""
    denom = Delta * Delta - omega_b * omega_b
    if abs(denom) <= 1e-12 * omega_b * omega_b:
        raise DomainError(
            f"linearized detuning Delta={Delta:g} sits on the omega_b={omega_b:g} "
            "pole; Gamma is undefined there"
        )
    return Delta * G * G / denom


@dataclass(frozen=True)
class RawParams:
    """User-level model parameters (angular frequencies, rad/s; times in s).

    Exactly one route to the squeeze knob must be available: an explicit
    ``Gamma``, the pair ``(Delta, G)``, or a ``scheme_override`` naming one of
    the special schemes.
    """

    omega_b: float                 # bare phonon frequency
    g: float                       # single-phonon spin coupling
    Q_m: float = math.inf          # mechanical quality factor
    T2: float = math.inf           # single-spin dephasing time (s)
    N: int = 2                     # number of spins
    Gamma: float | None = None     # squeeze knob, direct
    Delta: float | None = None     # linearized cavity detuning
    G: float | None = None         # linearized optomechanical coupling
    Omega: float | None = None     # spin frequency; None -> Omega_tilde = 0
    n_th: float | None = None      # thermal phonon occupation
    temperature: float | None = None   # alternative to n_th (K)
    omega_r: float | None = None   # direct override of the squeezed phonon freq
    scheme_override: Scheme | None = None
    # raw cavity-drive parameters, used only by the mean-field route
    g0: float = 0.0
    Delta_a: float = 0.0
    Omega_p: float = 0.0
    kappa_a: float = 0.0
    kappa_b: float = 0.0

    def __post_init__(self):
        if self.omega_b <= 0:
            raise ConfigError(f"omega_b must be positive, got {self.omega_b}")
        if self.g < 0:
            raise ConfigError(f"g must be non-negative, got {self.g}")
        if not self.Q_m > 0:
            raise ConfigError(f"Q_m must be positive, got {self.Q_m}")
        if not self.T2 > 0:
            raise ConfigError(f"T2 must be positive, got {self.T2}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N}")
        if self.n_th is not None and self.n_th < 0:
            raise ConfigError(f"n_th must be non-negative, got {self.n_th}")
        if self.n_th is not None and self.temperature is not None:
            raise ConfigError("give n_th or temperature, not both")
        if self.omega_r is not None and self.omega_r <= 0:
            raise ConfigError(f"omega_r override must be positive, got {self.omega_r}")


@dataclass(frozen=True)
class DerivedParams:
    """Effective model constants; the record every solver consumes."""

    # carried through from the raw record
    omega_b: float
    g: float
    Q_m: float
    T2: float
    N: int
    # derived chain
    Gamma: float
    r: float
    omega_r: float
    tanh2r: float
    cosh2r: float
    chi: float
    chi_tilde: float
    Omega_tilde: float
    gamma_m: float
    Gamma_gamma: float
    n_th: float
    c: float
    eps: float
    scheme: Scheme
    omega_r_overridden: bool = False

    @property
    def exp2r(self) -> float:
        return math.exp(2.0 * self.r)


def derive_chain(
    raw: RawParams,
    alpha: complex | None = None,
    beta: complex | None = None,
) -> DerivedParams:
    """Run the full parameter chain.

    alpha/beta are mean-field amplitudes; when given (with g0, Delta_a in the
    raw record) they define G = g0*alpha and Delta = Delta_a + 2*g0*beta.
    Complex amplitudes are accepted with a warning and their real parts used
    (the physical drive phase is chosen to make them real).
    """
    if raw.scheme_override is not None:
        Gamma = _SCHEME_RATIO.get(raw.scheme_override)
        if Gamma is None:
            raise ConfigError(
                f"scheme_override must name a special scheme, got {raw.scheme_override}"
            )
        Gamma *= raw.omega_b
    elif raw.Gamma is not None:
        Gamma = raw.Gamma
    elif raw.Delta is not None and raw.G is not None:
        Gamma = squeeze_knob_from_linearized(raw.Delta, raw.G, raw.omega_b)
    elif alpha is not None or beta is not None:
        a = alpha if alpha is not None else 0.0
        b = beta if beta is not None else 0.0
        if abs(complex(a).imag) > 1e-12 * max(1.0, abs(a)) or abs(
            complex(b).imag
        ) > 1e-12 * max(1.0, abs(b)):
            warnings.warn(
                "complex mean-field amplitudes; using real parts for the chain",
                EngineWarning,
                stacklevel=2,
            )
        G = raw.g0 * complex(a).real
        Delta = raw.Delta_a + 2.0 * raw.g0 * complex(b).real
        Gamma = squeeze_knob_from_linearized(Delta, G, raw.omega_b)
    else:
        raise ConfigError(
            "no route to Gamma: give Gamma, (Delta, G), scheme_override, "
            "or mean-field amplitudes"
        )

    x = 1.0 - 4.0 * Gamma / raw.omega_b
    if x <= 0.0:
        raise DomainError(
            f"squeeze knob Gamma={Gamma:g} >= omega_b/4; 1-4Gamma/omega_b={x:g} <= 0 "
            "and the squeezed mode is unstable"
        )
    r = 0.25 * math.log(x)
    if raw.omega_r is not None:
        omega_r = raw.omega_r
        overridden = True
    else:
        omega_r = math.exp(2.0 * r) * raw.omega_b
        overridden = False

    tanh2r = 2.0 * Gamma / (2.0 * Gamma - raw.omega_b)
    cosh2r = math.cosh(2.0 * r)
    chi = raw.g * raw.g / omega_r
    chi_tilde = chi * cosh2r
    Omega_tilde = (raw.Omega - chi) if raw.Omega is not None else 0.0
    gamma_m = raw.omega_b / raw.Q_m if math.isfinite(raw.Q_m) else 0.0
    Gamma_gamma = gamma_m * raw.g * raw.g / (omega_r * omega_r)

    if raw.n_th is not None:
        n_th = float(raw.n_th)
    elif raw.temperature is not None:
        n_th = thermal_occupation(raw.omega_b, raw.temperature)
    else:
        n_th = 0.0

    c = Gamma_gamma * (n_th + 0.5)
    eps = collective_epsilon(chi, c)

    return DerivedParams(
        omega_b=raw.omega_b,
        g=raw.g,
        Q_m=raw.Q_m,
        T2=raw.T2,
        N=int(raw.N),
        Gamma=Gamma,
        r=r,
        omega_r=omega_r,
        tanh2r=tanh2r,
        cosh2r=cosh2r,
        chi=chi,
        chi_tilde=chi_tilde,
        Omega_tilde=Omega_tilde,
        gamma_m=gamma_m,
        Gamma_gamma=Gamma_gamma,
        n_th=n_th,
        c=c,
        eps=eps,
        scheme=classify_scheme(Gamma, raw.omega_b),
        omega_r_overridden=overridden,
    )


def collective_epsilon(chi: float, c: float) -> float:
    """Dissipation strength eps = 4c/(sqrt(2) chi + 2c) in [0, 2].

    chi = 0 with c > 0 returns the boundary value 2 (dissipation with no
    twisting); chi = c = 0 returns 0.
    """
    if chi < 0:
        raise DomainError(f"chi must be non-negative, got {chi}")
    if c < 0:
        raise DomainError(f"c must be non-negative, got {c}")
    if c == 0:
        return 0.0
    return 4.0 * c / (math.sqrt(2.0) * chi + 2.0 * c)


# --------------------------------------------------------------------------
# JSON config boundary (schema params.v1; plain frequencies in Hz)
# --------------------------------------------------------------------------

_TWO_PI = 2.0 * math.pi

_HZ_KEYS = {
    "omega_b_hz": "omega_b",
    "g_hz": "g",
    "gamma_knob_hz": "Gamma",
    "delta_hz": "Delta",
    "G_hz": "G",
    "Omega_hz": "Omega",
    "omega_r_hz": "omega_r",
    "g0_hz": "g0",
    "Delta_a_hz": "Delta_a",
    "Omega_p_hz": "Omega_p",
    "kappa_a_hz": "kappa_a",
    "kappa_b_hz": "kappa_b",
}
_PLAIN_KEYS = {
    "Q_m": "Q_m",
    "T2_s": "T2",
    "N": "N",
    "n_th": "n_th",
    "temperature_K": "temperature",
    "scheme_override": "scheme_override",
}
_KNOWN_KEYS = set(_HZ_KEYS) | set(_PLAIN_KEYS) | {"schema"}


def _as_number(key, value):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
    return float(value)


def raw_params_from_dict(cfg: dict) -> RawParams:
    """Build RawParams from a params.v1 mapping (Hz -> rad/s at this boundary)."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"config must be a JSON object, got {type(cfg).__name__}")
    schema = cfg.get("schema", "params.v1")
    if schema != "params.v1":
        raise ConfigError(f"unsupported config schema {schema!r}")
    unknown = sorted(set(cfg) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("omega_b_hz", "g_hz", "N"):
        if key not in cfg:
            raise ConfigError(f"missing required config key {key!r}")
    if ("delta_hz" in cfg) != ("G_hz" in cfg):
        raise ConfigError("delta_hz and G_hz must be given together")

    kwargs: dict = {}
    for key, field in _HZ_KEYS.items():
        if key in cfg:
            kwargs[field] = _TWO_PI * _as_number(key, cfg[key])
    for key, field in _PLAIN_KEYS.items():
        if key not in cfg:
            continue
        if key == "N":
            if isinstance(cfg[key], bool) or not isinstance(cfg[key], int):
                raise ConfigError(f"N must be an integer, got {cfg[key]!r}")
            kwargs[field] = cfg[key]
        elif key == "scheme_override":
            if cfg[key] is None:
                continue
            try:
                scheme = Scheme(cfg[key])
            except ValueError:
                scheme = Scheme.MIXED
            if scheme is Scheme.MIXED:
                valid = ", ".join(s.value for s in Scheme if s is not Scheme.MIXED)
                raise ConfigError(
                    f"scheme_override must be one of {valid}; got {cfg[key]!r}"
                )
            kwargs[field] = scheme
        else:
            kwargs[field] = _as_number(key, cfg[key])
    try:
        return RawParams(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_params(path) -> RawParams:
    """Load and validate a params.v1 JSON file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return raw_params_from_dict(cfg)
