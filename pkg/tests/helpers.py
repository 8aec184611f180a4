"""Independent oracles and fixtures shared across the test suite.

Everything here deliberately re-derives results from first principles
(finite differences, exhaustive enumeration, straight-line formula
evaluation) so the tests never trust the code paths they check.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np
import torch

from unisep.model import ModelConfig


def tiny_model_config(**overrides) -> ModelConfig:
    """Smallest config that exercises every code path."""
    params = dict(
        sample_rate=8000,
        hidden=16,
        chunk_len=10,
        n_feature_blocks=1,
        n_sep_blocks=1,
        n_mask_blocks=1,
        n_refine_blocks=1,
        n_aux_blocks=1,
        n_heads=2,
        ff_dim=16,
        selection_hidden=16,
        n_max=5,
    )
    params.update(overrides)
    return ModelConfig(**params)


# --------------------------------------------------------------------- #
# finite-difference gradient oracle                                      #
# --------------------------------------------------------------------- #

def _flatten_outputs(outputs) -> list[torch.Tensor]:
    if isinstance(outputs, torch.Tensor):
        return [outputs]
    return [o for o in outputs if isinstance(o, torch.Tensor)]


def finite_difference_max_rel_error(
    fn, params: list[torch.Tensor], eps: float = 1e-6, seed: int = 0
) -> float:
    """Compare autograd gradients of a random linear functional of fn() with
    central finite differences over every element of params.

    fn is a closure over params (already double precision, requires_grad on).
    Elements whose secant straddles a piecewise-linear kink (ReLU and friends)
    are re-measured with smaller steps; a genuinely wrong analytic gradient
    stays wrong at every step size. Returns the maximum relative error.
    """
    outputs = _flatten_outputs(fn())
    gen = torch.Generator().manual_seed(seed)
    weights = [torch.randn(o.shape, generator=gen, dtype=torch.float64) for o in outputs]

    def scalar() -> torch.Tensor:
        outs = _flatten_outputs(fn())
        return sum((w * o).sum() for w, o in zip(weights, outs))

    value = scalar()
    grads = torch.autograd.grad(value, params, allow_unused=True)
    grads = [
        torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)
    ]
    # floor the relative-error denominator at a fraction of the gradient's own
    # scale so roundoff noise on negligible elements is not misread as error
    scale = max(float(g.abs().max()) for g in grads)
    floor = max(1e-3 * scale, 1e-6)

    def rel_error(flat, i, analytic, step) -> float:
        original = flat[i].item()
        flat[i] = original + step
        plus = scalar().item()
        flat[i] = original - step
        minus = scalar().item()
        flat[i] = original
        numeric = (plus - minus) / (2 * step)
        denom = max(abs(numeric), abs(analytic), floor)
        return abs(numeric - analytic) / denom

    worst = 0.0
    for param, grad in zip(params, grads):
        flat = param.data.view(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.numel()):
            analytic = grad_flat[i].item()
            err = rel_error(flat, i, analytic, eps)
            for refined in (eps / 8, eps / 64):
                if err < 1e-5:
                    break
                err = min(err, rel_error(flat, i, analytic, refined))
            worst = max(worst, err)
    return worst


def module_gradcheck(module: torch.nn.Module, *inputs, check_inputs=True, seed=0) -> float:
    """Run the finite-difference oracle over a module's parameters and
    (optionally) its tensor inputs."""
    module = module.double()
    module.eval()
    tensors = [
        t.double().clone().requires_grad_(True) if check_inputs else t.double()
        for t in inputs
    ]
    params = list(module.parameters())
    if check_inputs:
        params = params + tensors
    return finite_difference_max_rel_error(lambda: module(*tensors), params, seed=seed)


# --------------------------------------------------------------------- #
# exhaustive assignment oracles                                          #
# --------------------------------------------------------------------- #

def brute_force_min_assignment(cost: np.ndarray) -> tuple[list[int], float]:
    """Minimum-total assignment of one column per row by full enumeration."""
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    best_perm, best_total = None, np.inf
    for perm in permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n))
        if total < best_total:
            best_total, best_perm = total, list(perm)
    return best_perm, float(best_total)


def brute_force_max_injective(score: np.ndarray) -> float:
    """Maximum total score over injective assignments of the smaller side of
    a rectangular matrix."""
    score = np.asarray(score, dtype=np.float64)
    n_rows, n_cols = score.shape
    best = -np.inf
    if n_rows <= n_cols:
        for cols in permutations(range(n_cols), n_rows):
            best = max(best, sum(score[i, c] for i, c in enumerate(cols)))
    else:
        for rows in permutations(range(n_rows), n_cols):
            best = max(best, sum(score[r, j] for j, r in enumerate(rows)))
    return float(best)


# --------------------------------------------------------------------- #
# straight-line re-implementations                                       #
# --------------------------------------------------------------------- #

def manual_lstm_states(lstm: torch.nn.LSTM, sequence: np.ndarray):
    """Step-by-step single-layer LSTM recursion from zero states using the
    module's weights; returns the final (h, c)."""
    w_ih = lstm.weight_ih_l0.detach().numpy()
    w_hh = lstm.weight_hh_l0.detach().numpy()
    b_ih = lstm.bias_ih_l0.detach().numpy()
    b_hh = lstm.bias_hh_l0.detach().numpy()
    hidden = w_hh.shape[1]

    def sigmoid(v):
        return 1.0 / (1.0 + np.exp(-v))

    h = np.zeros(hidden)
    c = np.zeros(hidden)
    for x in sequence:
        gates = w_ih @ x + b_ih + w_hh @ h + b_hh
        i_g = sigmoid(gates[0:hidden])
        f_g = sigmoid(gates[hidden : 2 * hidden])
        g_g = np.tanh(gates[2 * hidden : 3 * hidden])
        o_g = sigmoid(gates[3 * hidden : 4 * hidden])
        c = f_g * c + i_g * g_g
        h = o_g * np.tanh(c)
    return h, c


def _mlp_numpy(sequential, x: np.ndarray) -> np.ndarray:
    """Evaluate a Linear/ReLU Sequential on the last axis of x."""
    out = x
    for layer in sequential:
        if isinstance(layer, torch.nn.Linear):
            w = layer.weight.detach().numpy()
            b = layer.bias.detach().numpy()
            out = out @ w.T + b
        elif isinstance(layer, torch.nn.ReLU):
            out = np.maximum(out, 0.0)
        else:
            raise TypeError(f"unexpected layer {layer}")
    return out


def straight_line_selection(selector, speaker_feats: np.ndarray, enroll: np.ndarray):
    """Literal evaluation of the attention-selection equations with explicit
    loops over speakers and positions.

    speaker_feats: (S, C, K, H); enroll: (C', K, H).
    Returns (target (C, K, H), attention (S, C, K)).
    """
    n_spk, n_chunks, chunk_len, _ = speaker_feats.shape
    w_tv = selector.proj_tv.weight.detach().numpy()
    w_ti = selector.proj_ti.weight.detach().numpy()
    w_aux = selector.proj_aux.weight.detach().numpy()
    bias = selector.bias.detach().numpy()
    w_score = selector.score.weight.detach().numpy()[0]

    tv = [_mlp_numpy(selector.mlp_tv.net, speaker_feats[s]) for s in range(n_spk)]
    ti = [
        _mlp_numpy(selector.mlp_ti.net, speaker_feats[s]).mean(axis=(0, 1))
        for s in range(n_spk)
    ]
    aux = _mlp_numpy(selector.mlp_aux.net, enroll).mean(axis=(0, 1))

    logits = np.zeros((n_spk, n_chunks, chunk_len))
    for s in range(n_spk):
        for c in range(n_chunks):
            for k in range(chunk_len):
                pre = w_tv @ tv[s][c, k] + w_ti @ ti[s] + w_aux @ aux + bias
                logits[s, c, k] = w_score @ np.tanh(pre)
    exp = np.exp(logits - logits.max(axis=0, keepdims=True))
    attention = exp / exp.sum(axis=0, keepdims=True)
    target = np.einsum("sck,sckh->ckh", attention, speaker_feats)
    return target, attention


def lstsq_sdr(ref: np.ndarray, est: np.ndarray, n_taps: int) -> float:
    """Dense least-squares SDR oracle: explicit shifted-reference matrix."""
    n = ref.size
    basis = np.zeros((n, n_taps))
    for k in range(n_taps):
        basis[k:, k] = ref[: n - k]
    taps, *_ = np.linalg.lstsq(basis, est, rcond=None)
    target = basis @ taps
    resid = est - target
    e_t, e_r = float(np.sum(target**2)), float(np.sum(resid**2))
    total = e_t + e_r
    eps = 1e-8
    return float(10 * np.log10((e_t + eps * total) / (e_r + eps * total)))
