"""Finite-width random networks: the Monte-Carlo side of the theory.

Where :mod:`edgeofchaos.meanfield` iterates scalar recursions, this
module instantiates actual weight matrices, pushes real data through
them, and measures the empirical counterparts: per-layer variances,
correlation matrices, the order parameter ⟨c⟩, and the input-output
Jacobian.  At width 10⁴ the empirical per-layer statistics track the
mean-field trajectories to within the central-limit 1/√N envelope;
at width 50 they reproduce the ordered/chaotic/critical phenomenology
of the correlation experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meanfield import Activation, HyperParams

__all__ = [
    "NetworkArchitecture",
    "RandomNetwork",
    "CorrelationMatrix",
    "PHASE_PRESETS",
    "init_network",
    "forward",
    "jacobian",
    "correlation_matrix",
    "normalize_rows",
    "propagate_experiment",
    "resize_experiment",
]

# representative initialization points at σ_b = 0.3; the critical σ_w
# solves χ1 = 1 there, the other two sit well inside their phases
PHASE_PRESETS: dict[str, HyperParams] = {
    "ordered": HyperParams(sigma_w=1.0, sigma_b=0.3),
    "critical": HyperParams(sigma_w=1.39, sigma_b=0.3),
    "disordered": HyperParams(sigma_w=2.5, sigma_b=0.3),
}


@dataclass(frozen=True)
class NetworkArchitecture:
    """Layer widths N_0 … N_L and the shared activation."""

    layer_widths: tuple
    activation: Activation

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("architecture needs at least input and one layer")
        if any(w < 1 for w in widths):
            raise ValueError(f"all widths must be >= 1, got {widths}")

    @property
    def num_layers(self) -> int:
        return len(self.layer_widths) - 1


@dataclass(frozen=True)
class RandomNetwork:
    """A sampled network: W^ℓ ~ N(0, σ_w²/N_{ℓ-1}), b^ℓ ~ N(0, σ_b²)."""

    weights: tuple      # of (N_ℓ × N_{ℓ-1}) arrays
    biases: tuple       # of (N_ℓ,) arrays
    arch: NetworkArchitecture
    hp: HyperParams
    seed: int


@dataclass(frozen=True)
class CorrelationMatrix:
    """Normalized correlations of a batch at one layer.

    ``entries[a, b]`` is q_{a,b}/√(q_{a,a} q_{b,b}) with
    q_{a,b} = (1/N) Σ_i h_i^a h_i^b, and ``mean_correlation`` is the
    average over the N(N-1)/2 unordered off-diagonal pairs.  (A 2/N
    normalization of the pair sum would scale with the batch and could
    not produce order-one means for 100 inputs.)
    """

    entries: np.ndarray
    mean_correlation: float


def init_network(
    arch: NetworkArchitecture, hp: HyperParams, seed: int
) -> RandomNetwork:
    """Draw a network's parameters; deterministic for a given seed.

    Sampling order is fixed (layer-major; weights row-major before the
    layer's biases) so the same seed yields bit-identical networks
    independent of platform threading.
    """
    rng = np.random.default_rng(seed)
    widths = arch.layer_widths
    weights, biases = [], []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        w = rng.normal(0.0, hp.sigma_w / np.sqrt(n_in), size=(n_out, n_in))
        b = rng.normal(0.0, hp.sigma_b, size=n_out)
        w.flags.writeable = False
        b.flags.writeable = False
        weights.append(w)
        biases.append(b)
    return RandomNetwork(
        weights=tuple(weights), biases=tuple(biases), arch=arch, hp=hp, seed=seed
    )


def forward(net: RandomNetwork, inputs: np.ndarray):
    """Propagate a batch, returning all pre- and post-activations.

    Parameters
    ----------
    inputs : ndarray, shape (M, N_0)
        Batch of row-vector inputs.

    Returns
    -------
    (pre, post) : lists of ndarrays
        ``pre[ℓ]`` holds h^{ℓ+1} = x^ℓ W^T + b and ``post[ℓ]`` the
        activations φ(h^{ℓ+1}), each shaped (M, N_{ℓ+1}).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    n0 = net.arch.layer_widths[0]
    if x.shape[1] != n0:
        raise ValueError(
            f"input dimension mismatch at layer 0: expected {n0}, got {x.shape[1]}"
        )
    phi = net.arch.activation.phi
    pre, post = [], []
    for w, b in zip(net.weights, net.biases):
        h = x @ w.T + b
        x = phi(h)
        pre.append(h)
        post.append(x)
    return pre, post


def jacobian(net: RandomNetwork, input_vec: np.ndarray) -> np.ndarray:
    """Input-output Jacobian J = Π_ℓ D^ℓ W^ℓ at a single input.

    D^ℓ is diagonal with entries φ'(h^ℓ_i) — the derivative is taken at
    the pre-activation, as the chain rule requires.  For the linear
    activation this collapses to the plain weight product.
    """
    v = np.asarray(input_vec, dtype=np.float64).ravel()
    pre, _ = forward(net, v[None, :])
    dphi = net.arch.activation.dphi
    J = None
    for w, h in zip(net.weights, pre):
        layer_jac = dphi(h[0])[:, None] * w
        J = layer_jac if J is None else layer_jac @ J
    return J


def correlation_matrix(h: np.ndarray) -> CorrelationMatrix:
    """Normalized correlation matrix of a batch of layer vectors.

    Rows of ``h`` are per-input activation (or pre-activation) vectors;
    a zero-variance row has no defined correlation and raises, naming
    the offending index.
    """
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    m, n = h.shape
    if m < 2:
        raise ValueError(f"need at least 2 inputs to correlate, got {m}")
    q = (h @ h.T) / n
    d = np.diag(q).copy()
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise ValueError(f"zero-variance input at index {int(bad[0])}")
    scale = np.sqrt(d)
    c = q / np.outer(scale, scale)
    iu = np.triu_indices(m, k=1)
    mean = float(c[iu].mean())
    return CorrelationMatrix(entries=c, mean_correlation=mean)


def normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit mean-square, x_i ← x_i/√(‖x_i‖²/D).

    Sets every input's variance parameter q⁰ to one so trajectories
    start from the length map's natural scale rather than from the
    data's arbitrary pixel normalization.  Per-row positive scaling
    leaves all pairwise normalized correlations (and hence ⟨c⟩ of the
    inputs) unchanged.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    q0 = np.mean(x * x, axis=1, keepdims=True)
    bad = np.flatnonzero(q0.ravel() <= 0)
    if bad.size:
        raise ValueError(f"zero-variance input at index {int(bad[0])}")
    return x / np.sqrt(q0)


def propagate_experiment(
    data: np.ndarray,
    arch: NetworkArchitecture,
    phases: dict[str, HyperParams],
    seed: int,
    num_seeds: int = 1,
):
    """Input/output correlation matrices per initialization phase.

    For each phase a fresh network is drawn and the (row-normalized)
    data propagated once; the output statistic is the correlation
    matrix of the final layer's pre-activations.  With ``num_seeds``
    > 1 the per-phase mean ⟨c⟩ is additionally averaged over
    consecutive seeds to tame width-50 fluctuations.

    Returns
    -------
    dict mapping phase name to a dict with keys ``input`` (the shared
    input CorrelationMatrix), ``output`` (CorrelationMatrix at the
    first seed), and ``mean_correlation`` (the seed-averaged output
    ⟨c⟩).
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] < 2:
        raise ValueError("dataset must contain at least 2 inputs")
    cm_in = correlation_matrix(data)
    normalized = normalize_rows(data)
    out = {}
    for name, hp in phases.items():
        mean_cs, first_cm = [], None
        for k in range(num_seeds):
            net = init_network(arch, hp, seed + k)
            pre, _ = forward(net, normalized)
            cm = correlation_matrix(pre[-1])
            if first_cm is None:
                first_cm = cm
            mean_cs.append(cm.mean_correlation)
        out[name] = {
            "input": cm_in,
            "output": first_cm,
            "mean_correlation": float(np.mean(mean_cs)),
        }
    return out


def resize_experiment(
    data: np.ndarray,
    fraction: float,
    arch: NetworkArchitecture,
    hp_critical: HyperParams,
    seed: int,
):
    """Correlations of the full batch versus a random subsample.

    Both subsets pass through the same critically initialized network;
    the subsample is a uniform random subset of the rows under the
    seed.  Returns the four correlation matrices (input full, input
    subsample, output full, output subsample) — at criticality the
    output pair's means should agree closely, mirroring the input
    pair.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    m = data.shape[0]
    n_sub = int(round(fraction * m))
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if n_sub < 2:
        raise ValueError(f"subsample of {n_sub} rows cannot be correlated")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(m, size=n_sub, replace=False))

    net = init_network(arch, hp_critical, seed)
    pre, _ = forward(net, normalize_rows(data))
    h_out = pre[-1]
    return {
        "input_full": correlation_matrix(data),
        "input_subsample": correlation_matrix(data[idx]),
        "output_full": correlation_matrix(h_out),
        "output_subsample": correlation_matrix(h_out[idx]),
        "subsample_indices": idx,
    }


def empirical_q_trajectory(
    input_vec: np.ndarray, arch: NetworkArchitecture, hp: HyperParams, seed: int
) -> np.ndarray:
    """Per-layer empirical length q^ℓ = (1/N_ℓ) Σ_i (h_i^ℓ)² of one input.

    Draws the identical parameter stream as :func:`init_network` but
    one layer at a time, discarding each weight matrix after use — a
    width-10⁴ network would otherwise need ~8 GB resident.  Statement
    under test: at large width these empirical lengths track the
    deterministic variance-map trajectory with O(1/√N) fluctuations.
    """
    x = np.asarray(input_vec, dtype=np.float64).ravel()
    widths = arch.layer_widths
    if x.size != widths[0]:
        raise ValueError(
            f"input dimension mismatch: expected {widths[0]}, got {x.size}"
        )
    rng = np.random.default_rng(seed)
    phi = arch.activation.phi
    qs = []
    a = x
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        w = rng.normal(0.0, hp.sigma_w / np.sqrt(n_in), size=(n_out, n_in))
        b = rng.normal(0.0, hp.sigma_b, size=n_out)
        h = w @ a + b
        del w
        qs.append(float(np.mean(h * h)))
        a = phi(h)
    return np.array(qs)
