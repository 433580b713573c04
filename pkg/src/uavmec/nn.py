"""Minimal MLP stack with hand-written backprop, Adam, and a tanh-squashed
Gaussian policy head.  Everything is float64 numpy; no autograd graph.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import ArtifactError

LOG_SIGMA_MIN = -20.0
LOG_SIGMA_MAX = 2.0
EPS_NUM = 1e-6
CHECKPOINT_VERSION = 1


class Mlp:
    """Affine + ReLU stack, linear output; forward caches for backward."""

    def __init__(self, sizes: list[int], rng: np.random.Generator,
                 final_scale: float = 1.0):
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if i == len(sizes) - 2:
                bound *= final_scale
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def forward(self, x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cache = {"inputs": [], "pre": []}
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache["inputs"].append(h)
            z = h @ w + b
            cache["pre"].append(z)
            h = z if i == last else np.maximum(z, 0.0)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Exact reverse-mode grads of the cached forward.

        Returns (param_grads aligned with self.params, grad w.r.t. the input).
        """
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                g = g * (cache["pre"][i] > 0.0)
            grads_w[i] = cache["inputs"][i].T @ g
            grads_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out.extend((gw, gb))
        return out, g


class Adam:
    """Bias-corrected Adam over a list of parameter arrays (updated in place)."""

    def __init__(self, params: list[np.ndarray], lr: float = 5e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def flatten_params(params: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def set_flat_params(params: list[np.ndarray], flat: np.ndarray) -> None:
    i = 0
    for p in params:
        p[...] = flat[i:i + p.size].reshape(p.shape)
        i += p.size


class GaussianPolicy:
    """Tanh-squashed diagonal Gaussian over an Mlp trunk.

    The trunk emits (mu, log_sigma); actions are tanh(mu + sigma*xi) so every
    sample lies strictly inside (-1, 1), with the log-density corrected by
    -sum log(1 - a^2 + eps).
    """

    def __init__(self, state_dim: int, act_dim: int, hidden: tuple[int, ...],
                 rng: np.random.Generator, final_scale: float = 0.01):
        self.act_dim = act_dim
        self.net = Mlp([state_dim, *hidden, 2 * act_dim], rng, final_scale=final_scale)

    def _heads(self, states):
        out, cache = self.net.forward(states)
        mu = out[:, :self.act_dim]
        raw = out[:, self.act_dim:]
        log_sigma = np.clip(raw, LOG_SIGMA_MIN, LOG_SIGMA_MAX)
        clamp_mask = (raw > LOG_SIGMA_MIN) & (raw < LOG_SIGMA_MAX)
        return mu, log_sigma, clamp_mask, cache

    def sample(self, states: np.ndarray, rng: np.random.Generator):
        """Reparameterized draw; returns (action, log_prob, aux-for-backward)."""
        states = np.atleast_2d(states)
        mu, log_sigma, mask, cache = self._heads(states)
        sigma = np.exp(log_sigma)
        xi = rng.standard_normal(mu.shape)
        u = mu + sigma * xi
        a = np.tanh(u)
        logp = self.log_prob_parts(log_sigma, xi, a)
        aux = {"cache": cache, "mask": mask, "sigma": sigma, "xi": xi, "a": a}
        return a, logp, aux

    @staticmethod
    def log_prob_parts(log_sigma, xi, a) -> np.ndarray:
        gauss = (-0.5 * np.log(2.0 * np.pi) - log_sigma - 0.5 * xi ** 2).sum(axis=1)
        correction = np.log(1.0 - a ** 2 + EPS_NUM).sum(axis=1)
        return gauss - correction

    def deterministic(self, states: np.ndarray) -> np.ndarray:
        mu, _, _, _ = self._heads(np.atleast_2d(states))
        return np.tanh(mu)

    def backward(self, aux, grad_a: np.ndarray, grad_logp: np.ndarray):
        """Backprop d(loss)/d(action) and d(loss)/d(log_prob) to the trunk.

        grad_a: (B, A) gradient flowing into the sampled action.
        grad_logp: (B,) gradient flowing into each sample's log-prob.
        """
        a = aux["a"]
        one_m_a2 = 1.0 - a ** 2
        dlogp_du = 2.0 * a * one_m_a2 / (one_m_a2 + EPS_NUM)
        g_u = grad_logp[:, None] * dlogp_du + grad_a * one_m_a2
        g_mu = g_u
        g_logsigma = (g_u * aux["sigma"] * aux["xi"]
                      - grad_logp[:, None]) * aux["mask"]
        grad_out = np.concatenate([g_mu, g_logsigma], axis=1)
        return self.net.backward(aux["cache"], grad_out)


# ----------------------------------------------------------------------
# checkpoint container

def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Self-describing npz: float64 parameter blobs plus a JSON meta record."""
    meta = dict(meta)
    meta["format_version"] = CHECKPOINT_VERSION
    payload = {k: np.asarray(v, dtype=float) for k, v in arrays.items()}
    payload["__meta__"] = np.frombuffer(
        json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise ArtifactError(f"{path}: not a checkpoint (missing meta record)")
            meta = json.loads(bytes(data["__meta__"].tobytes()).decode("utf-8"))
            arrays = {k: data[k] for k in data.files if k != "__meta__"}
    except ArtifactError:
        raise
    except Exception as exc:
        raise ArtifactError(f"{path}: unreadable checkpoint ({exc})") from exc
    version = meta.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ArtifactError(
            f"{path}: checkpoint format version mismatch "
            f"(found {version}, expected {CHECKPOINT_VERSION})")
    return arrays, meta
