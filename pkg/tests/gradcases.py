"""Gradient-check cases shared by the encoder tests and the acceptance suite.

Every case returns ``(loss_fn, params, analytic)`` for ``numcore.grad_check``;
``loss_fn`` reads the (possibly nudged) arrays in ``params``.
"""

import numpy as np

from condstance.encoders import (LstmParams, LstmState, StanceModel, lstm_block_names,
                                 lstm_cell, lstm_cell_backward, run_lstm, run_lstm_backward,
                                 split_stacked)

D, K, VOCAB = 7, 5, 12


def _lstm_params(params):
    return LstmParams.from_params(params, "p")


def cell_case(seed, d=D, k=K, scale=0.1):
    """Loss r.h + q.c of one cell step, w.r.t. weights, x, h_prev and c_prev."""
    rng = np.random.default_rng(seed)
    params = LstmParams.random(d, k, rng, scale).as_dict("p")
    params.update(x=rng.normal(size=d), h=rng.normal(size=k) * 0.5, c=rng.normal(size=k))
    r, q = rng.normal(size=k), rng.normal(size=k)

    def loss(P):
        st = lstm_cell(P["x"], LstmState(P["h"], P["c"]), _lstm_params(P))
        return float(r @ st.h + q @ st.c)

    cache = []
    lstm_cell(params["x"], LstmState(params["h"], params["c"]), _lstm_params(params), cache)
    g, dx, dh, dc = lstm_cell_backward(r, q, cache[0], _lstm_params(params))
    analytic = {f"p.{n}": g[n] for n in lstm_block_names()}
    analytic.update(x=dx, h=dh, c=dc)
    return loss, params, analytic


def run_case(seed, reverse, d=D, k=K, length=None, scale=0.1):
    """Loss over the final state and every emitted h of one run."""
    rng = np.random.default_rng(seed)
    n = length or int(rng.integers(1, 7))
    params = LstmParams.random(d, k, rng, scale).as_dict("p")
    params.update(xs=rng.normal(size=(n, d)), h0=rng.normal(size=k) * 0.5, c0=rng.normal(size=k))
    r, q, R = rng.normal(size=k), rng.normal(size=k), rng.normal(size=(n, k))

    def loss(P):
        run = run_lstm(P["xs"], LstmState(P["h0"], P["c0"]), _lstm_params(P), reverse)
        hs = np.array([s.h for s in run.states])
        return float(r @ run.final.h + q @ run.final.c + np.sum(R * hs))

    run = run_lstm(params["xs"], LstmState(params["h0"], params["c0"]), _lstm_params(params), reverse)
    dW, db, dxs, dh0, dc0 = run_lstm_backward(run, r, q, R)
    analytic = split_stacked("p", dW, db, k)
    analytic.update(xs=dxs, h0=dh0, c0=dc0)
    return loss, params, analytic


def model_case(variant, seed, sharing="Sing", emb_trainable=True, l2=0.0, batch=2):
    """End-to-end mean cross-entropy of a small batch, all trainable blocks."""
    rng = np.random.default_rng(seed)
    m = StanceModel(variant, D, K, VOCAB, sharing=sharing, emb_trainable=emb_trainable, l2=l2)
    m.init_params(rng, rng.uniform(-0.1, 0.1, (VOCAB, D)),
                  rng.uniform(-0.1, 0.1, (VOCAB, D)) if sharing == "Sep" else None)
    data = [(rng.integers(0, VOCAB, int(rng.integers(1, 7))),
             rng.integers(0, VOCAB, int(rng.integers(1, 7))), int(rng.integers(0, 3)))
            for _ in range(batch)]
    _, analytic, _ = m.loss_and_grads(data)

    def loss(P):
        return m.loss_and_grads(data, blocks=[])[0]

    return loss, m.params, analytic, (m, data)
