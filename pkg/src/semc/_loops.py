"""Hot inner loops shared by every sampler.

Everything in this module is written in a numba-compatible subset of
Python and compiled (or not) according to ``semc._backend``.  Scalar
math goes through ``math.exp``/``math.log`` so the compiled and
uncompiled paths produce bit-identical results.

Energy evaluation is dispatched on an integer kind code with a uniform
payload of one parameter vector, one matrix and one extra vector; this
keeps a single compiled specialization per loop instead of one per
problem instance.  Random draws come from ``numpy.random.Generator``
objects passed in by the callers; the draw order inside each loop is a
compatibility contract (the samplers rely on it for seed determinism),
so do not reorder draws.
"""

import math

import numpy as np

from ._backend import jit

# Energy kind codes.  Continuous kinds:
ENERGY_QUADRATIC = 1  # sum_j w_j (x_j - c_j)^2;       params = [w | c]
ENERGY_BIMODAL = 2    # two-well benchmark;            params = [r]
ENERGY_SPECTRAL = 3   # Gaussian-peak regression;      params = [K, 1/(2 s^2 n)], matrix = [x; y]
# Binary kinds:
ENERGY_BIT_TABLE = 4  # lookup table over bit vectors; vector = table of 2^p energies
ENERGY_SELECT = 5     # linear-model selection nll;    params = [1/v, s, const, n_rows],
                      #                                matrix = X^T X, vector = X^T y


@jit
def _peak_value(a, mu, w, xi):
    d = xi - mu
    return a * math.exp(-0.5 * w * d * d)


@jit
def spectral_curve(coords, k_peaks, x, out):
    """Sum of Gaussian peaks; coords laid out as [a_1..a_K, mu_1..mu_K, w_1..w_K]."""
    n = x.shape[0]
    for i in range(n):
        f = 0.0
        for k in range(k_peaks):
            f += _peak_value(coords[k], coords[k_peaks + k], coords[2 * k_peaks + k], x[i])
        out[i] = f


@jit
def energy_continuous(kind, coords, params, matrix, vector):
    if kind == ENERGY_QUADRATIC:
        d = coords.shape[0]
        e = 0.0
        for j in range(d):
            t = coords[j] - params[d + j]
            e += params[j] * t * t
        return e
    if kind == ENERGY_BIMODAL:
        r = params[0]
        t1 = coords[0]
        t2 = coords[1]
        dy = t2 - 0.5
        if t1 < 0.5:
            dx = t1 - 0.25
            return r * dx * dx + dy * dy
        dx = t1 - 0.75
        return dx * dx + dy * dy + (r - 1.0) / 16.0
    if kind == ENERGY_SPECTRAL:
        k_peaks = int(params[0])
        n = matrix.shape[1]
        e = 0.0
        for i in range(n):
            f = 0.0
            for k in range(k_peaks):
                f += _peak_value(coords[k], coords[k_peaks + k], coords[2 * k_peaks + k], matrix[0, i])
            r = matrix[1, i] - f
            e += r * r
        return e * params[1]
    raise ValueError("unknown continuous energy kind")


@jit
def energy_binary(kind, bits, params, matrix, vector):
    if kind == ENERGY_BIT_TABLE:
        idx = 0
        for j in range(bits.shape[0]):
            if bits[j] != 0:
                idx += 1 << j
        return vector[idx]
    if kind == ENERGY_SELECT:
        inv_v = params[0]
        s = params[1]
        const = params[2]
        n_rows = params[3]
        p = bits.shape[0]
        k = 0
        for j in range(p):
            if bits[j] != 0:
                k += 1
        if k == 0:
            return const / n_rows
        idx = np.empty(k, np.int64)
        m = 0
        for j in range(p):
            if bits[j] != 0:
                idx[m] = j
                m += 1
        # A = X_I^T Sigma^-1 X_I + I/s^2, with Sigma = v I
        a = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                a[i, j] = matrix[idx[i], idx[j]] * inv_v
            a[i, i] += 1.0 / (s * s)
        chol = np.linalg.cholesky(a)
        logdet_a = 0.0
        for i in range(k):
            logdet_a += math.log(chol[i, i])
        logdet_a *= 2.0
        # quad = b^T A^-1 b via one triangular solve, b = X_I^T Sigma^-1 y
        z = np.empty(k)
        for i in range(k):
            acc = vector[idx[i]] * inv_v
            for j in range(i):
                acc -= chol[i, j] * z[j]
            z[i] = acc / chol[i, i]
        quad = 0.0
        for i in range(k):
            quad += z[i] * z[i]
        # marginal of y ~ N(0, Sigma + s^2 X_I X_I^T); det term via the
        # matrix determinant lemma: det = det(Sigma) * s^(2k) * det(A)
        nll = k * math.log(s) + const + 0.5 * logdet_a - 0.5 * quad
        return nll / n_rows
    raise ValueError("unknown binary energy kind")


@jit
def batch_energy_continuous(kind, coords2d, params, matrix, vector, out):
    for i in range(coords2d.shape[0]):
        out[i] = energy_continuous(kind, coords2d[i], params, matrix, vector)


@jit
def batch_energy_binary(kind, bits2d, params, matrix, vector, out):
    for i in range(bits2d.shape[0]):
        out[i] = energy_binary(kind, bits2d[i], params, matrix, vector)


@jit
def init_spectral_workspace(coords, params, matrix, resid, prof):
    """Fill per-peak profiles and data residuals for incremental sweeps."""
    k_peaks = int(params[0])
    n = matrix.shape[1]
    for k in range(k_peaks):
        for i in range(n):
            prof[k, i] = _peak_value(coords[k], coords[k_peaks + k], coords[2 * k_peaks + k], matrix[0, i])
    for i in range(n):
        f = 0.0
        for k in range(k_peaks):
            f += prof[k, i]
        resid[i] = matrix[1, i] - f


@jit
def _rm_step(eps, p_accept, update_idx, gain, offset, target):
    new = eps + eps * gain * (p_accept - target) / (offset + update_idx)
    floor = eps * 1e-6
    if new < floor:
        return floor
    return new


@jit
def metropolis_sweep_core(kind, coords, e_cur, beta, n_data, eps, lo, hi, rng,
                          flags, params, matrix, vector, resid, prof, scratch):
    """One full coordinate sweep; mutates coords (and the spectral
    workspace) in place, records per-coordinate accepts in flags, and
    returns the updated cached energy.

    Two uniforms are drawn per coordinate whether or not the proposal is
    usable, so the stream consumption is independent of the trajectory.
    """
    d = coords.shape[0]
    if kind == ENERGY_SPECTRAL:
        k_peaks = int(params[0])
        n = matrix.shape[1]
        for j in range(d):
            u_prop = rng.random()
            u_acc = rng.random()
            flags[j] = 0
            prop = coords[j] + eps[j] * (2.0 * u_prop - 1.0)
            if prop < lo[j] or prop > hi[j]:
                continue
            k = j % k_peaks
            a = coords[k]
            mu = coords[k_peaks + k]
            w = coords[2 * k_peaks + k]
            if j < k_peaks:
                a = prop
            elif j < 2 * k_peaks:
                mu = prop
            else:
                w = prop
            for i in range(n):
                scratch[i] = _peak_value(a, mu, w, matrix[0, i])
            e_new = 0.0
            for i in range(n):
                r = resid[i] + prof[k, i] - scratch[i]
                e_new += r * r
            e_new *= params[1]
            lr = -beta * n_data * (e_new - e_cur)
            if lr >= 0.0 or u_acc < math.exp(lr):
                for i in range(n):
                    resid[i] = resid[i] + prof[k, i] - scratch[i]
                    prof[k, i] = scratch[i]
                coords[j] = prop
                e_cur = e_new
                flags[j] = 1
        return e_cur
    for j in range(d):
        u_prop = rng.random()
        u_acc = rng.random()
        flags[j] = 0
        old = coords[j]
        prop = old + eps[j] * (2.0 * u_prop - 1.0)
        if prop < lo[j] or prop > hi[j]:
            continue
        coords[j] = prop
        e_new = energy_continuous(kind, coords, params, matrix, vector)
        lr = -beta * n_data * (e_new - e_cur)
        if lr >= 0.0 or u_acc < math.exp(lr):
            e_cur = e_new
            flags[j] = 1
        else:
            coords[j] = old
    return e_cur


@jit
def flip_step_core(kind, bits, e_cur, beta, n_data, rng, params, matrix, vector):
    """Flip one uniformly chosen bit with Metropolis acceptance.

    Returns (energy, accepted, flipped index).  Draw order: index, then
    the acceptance uniform.
    """
    p = bits.shape[0]
    j = rng.integers(0, p)
    u = rng.random()
    bits[j] = 1 - bits[j]
    e_new = energy_binary(kind, bits, params, matrix, vector)
    lr = -beta * n_data * (e_new - e_cur)
    if lr >= 0.0 or u < math.exp(lr):
        return e_new, True, j
    bits[j] = 1 - bits[j]
    return e_cur, False, j


@jit
def pilot_tune_continuous(kind, coords, e_cur, beta, n_data, eps, lo, hi,
                          n_sweeps, rm_gain, rm_offset, rm_target, rng,
                          params, matrix, vector, resid, prof, scratch, flags):
    """Robbins-Monro pilot: adapt eps once per sweep from a single chain.

    Returns (final energy, acceptance fraction over the last 20% of
    sweeps, pooled over coordinates).
    """
    d = coords.shape[0]
    if kind == ENERGY_SPECTRAL:
        init_spectral_workspace(coords, params, matrix, resid, prof)
    tail_start = n_sweeps - n_sweeps // 5
    tail_acc = 0
    tail_n = 0
    for t in range(n_sweeps):
        e_cur = metropolis_sweep_core(kind, coords, e_cur, beta, n_data, eps, lo, hi,
                                      rng, flags, params, matrix, vector, resid, prof, scratch)
        for j in range(d):
            eps[j] = _rm_step(eps[j], float(flags[j]), t + 1, rm_gain, rm_offset, rm_target)
            if t >= tail_start:
                tail_acc += flags[j]
                tail_n += 1
    return e_cur, tail_acc / max(tail_n, 1)


@jit
def run_chains_continuous(kind, src_coords, src_energies, seed_idx,
                          beta, n_data, eps, lo, hi,
                          iters_per_chain, retain_from, adapt_until,
                          rm_gain, rm_offset, rm_target, rm_interval,
                          rng,
                          out_coords, out_energies, kept_acc,
                          params, matrix, vector, resid, prof, scratch, flags):
    """Advance independent chains (SMC move phase), chain-major.

    Chain c starts from src row seed_idx[c] and runs iters_per_chain
    sweeps; iterations >= retain_from are stored.  Step sizes adapt by
    Robbins-Monro over iterations < adapt_until with one acceptance
    window pooled across the whole rung.
    """
    n_chains = seed_idx.shape[0]
    d = eps.shape[0]
    rm_acc = np.zeros(d, np.int64)
    rm_cnt = 0
    rm_idx = 0
    coords = np.empty(d)
    for c in range(n_chains):
        s = seed_idx[c]
        for j in range(d):
            coords[j] = src_coords[s, j]
        e = src_energies[s]
        if kind == ENERGY_SPECTRAL:
            init_spectral_workspace(coords, params, matrix, resid, prof)
        for it in range(iters_per_chain):
            e = metropolis_sweep_core(kind, coords, e, beta, n_data, eps, lo, hi,
                                      rng, flags, params, matrix, vector, resid, prof, scratch)
            if it < adapt_until:
                rm_cnt += 1
                for j in range(d):
                    rm_acc[j] += flags[j]
                if rm_cnt >= rm_interval:
                    rm_idx += 1
                    for j in range(d):
                        eps[j] = _rm_step(eps[j], rm_acc[j] / rm_cnt, rm_idx,
                                          rm_gain, rm_offset, rm_target)
                        rm_acc[j] = 0
                    rm_cnt = 0
            if it >= retain_from:
                kk = it - retain_from
                for j in range(d):
                    out_coords[c, kk, j] = coords[j]
                    kept_acc[j] += flags[j]
                out_energies[c, kk] = e
    return rm_idx


@jit
def run_chains_binary(kind, src_bits, src_energies, seed_idx,
                      beta, n_data, iters_per_chain, retain_from,
                      rng, out_bits, out_energies,
                      params, matrix, vector):
    """Binary-state version of run_chains_continuous (one bit flip per
    iteration, no step-size adaptation).  Returns retained accept count."""
    n_chains = seed_idx.shape[0]
    p = src_bits.shape[1]
    bits = np.empty(p, np.int8)
    kept_acc = 0
    for c in range(n_chains):
        s = seed_idx[c]
        for j in range(p):
            bits[j] = src_bits[s, j]
        e = src_energies[s]
        for it in range(iters_per_chain):
            e, accepted, _ = flip_step_core(kind, bits, e, beta, n_data, rng,
                                            params, matrix, vector)
            if it >= retain_from:
                kk = it - retain_from
                for j in range(p):
                    out_bits[c, kk, j] = bits[j]
                out_energies[c, kk] = e
                if accepted:
                    kept_acc += 1
    return kept_acc


@jit
def run_semc_rung_continuous(kind, pool_coords, pool_energies,
                             chain_coords, chain_energies,
                             beta, beta_prev, n_data, eps, lo, hi,
                             iters_per_chain, retain_from, adapt_until,
                             rm_gain, rm_offset, rm_target, rm_interval,
                             do_exchange, partners,
                             rng_chain, rng_ex,
                             out_coords, out_energies, kept_acc,
                             params, matrix, vector, resid2, prof3, scratch, flags):
    """One tempering rung: chains advance in lockstep, each iteration is a
    sweep followed by an exchange attempt with the live hotter-rung pool.

    The pool (previous-rung states) is mutated by accepted exchanges.
    partners[c, it] indexes the pool member chain c targets at iteration
    it.  Returns the number of accepted exchanges.
    """
    n_chains = chain_coords.shape[0]
    d = eps.shape[0]
    gap = beta - beta_prev
    if kind == ENERGY_SPECTRAL:
        for c in range(n_chains):
            init_spectral_workspace(chain_coords[c], params, matrix, resid2[c], prof3[c])
    rm_acc = np.zeros(d, np.int64)
    rm_cnt = 0
    rm_idx = 0
    n_exch = 0
    for it in range(iters_per_chain):
        for c in range(n_chains):
            e = metropolis_sweep_core(kind, chain_coords[c], chain_energies[c], beta,
                                      n_data, eps, lo, hi, rng_chain, flags,
                                      params, matrix, vector, resid2[c], prof3[c], scratch)
            chain_energies[c] = e
            if it < adapt_until:
                rm_cnt += 1
                for j in range(d):
                    rm_acc[j] += flags[j]
                if rm_cnt >= rm_interval:
                    rm_idx += 1
                    for j in range(d):
                        eps[j] = _rm_step(eps[j], rm_acc[j] / rm_cnt, rm_idx,
                                          rm_gain, rm_offset, rm_target)
                        rm_acc[j] = 0
                    rm_cnt = 0
            if do_exchange:
                t = partners[c, it]
                arg = gap * n_data * (chain_energies[c] - pool_energies[t])
                u = rng_ex.random()
                if arg >= 0.0 or u < math.exp(arg):
                    for j in range(d):
                        tmp = pool_coords[t, j]
                        pool_coords[t, j] = chain_coords[c, j]
                        chain_coords[c, j] = tmp
                    tmp_e = pool_energies[t]
                    pool_energies[t] = chain_energies[c]
                    chain_energies[c] = tmp_e
                    n_exch += 1
                    if kind == ENERGY_SPECTRAL:
                        init_spectral_workspace(chain_coords[c], params, matrix,
                                                resid2[c], prof3[c])
            if it >= retain_from:
                kk = it - retain_from
                for j in range(d):
                    out_coords[c, kk, j] = chain_coords[c, j]
                    kept_acc[j] += flags[j]
                out_energies[c, kk] = chain_energies[c]
    return n_exch


@jit
def run_semc_rung_binary(kind, pool_bits, pool_energies,
                         chain_bits, chain_energies,
                         beta, beta_prev, n_data,
                         iters_per_chain, retain_from,
                         do_exchange, partners,
                         rng_chain, rng_ex,
                         out_bits, out_energies,
                         params, matrix, vector):
    """Binary-state version of run_semc_rung_continuous.

    Returns (accepted exchanges, retained flip accepts)."""
    n_chains = chain_bits.shape[0]
    p = chain_bits.shape[1]
    gap = beta - beta_prev
    n_exch = 0
    kept_acc = 0
    for it in range(iters_per_chain):
        for c in range(n_chains):
            e, accepted, _ = flip_step_core(kind, chain_bits[c], chain_energies[c],
                                            beta, n_data, rng_chain, params, matrix, vector)
            chain_energies[c] = e
            if do_exchange:
                t = partners[c, it]
                arg = gap * n_data * (chain_energies[c] - pool_energies[t])
                u = rng_ex.random()
                if arg >= 0.0 or u < math.exp(arg):
                    for j in range(p):
                        tmp = pool_bits[t, j]
                        pool_bits[t, j] = chain_bits[c, j]
                        chain_bits[c, j] = tmp
                    tmp_e = pool_energies[t]
                    pool_energies[t] = chain_energies[c]
                    chain_energies[c] = tmp_e
                    n_exch += 1
            if it >= retain_from:
                kk = it - retain_from
                for j in range(p):
                    out_bits[c, kk, j] = chain_bits[c, j]
                out_energies[c, kk] = chain_energies[c]
                if accepted:
                    kept_acc += 1
    return n_exch, kept_acc


@jit
def run_remc_continuous(kind, states, energies, betas, eps2d,
                        n_data, lo, hi, burn_in, n_samples, exchange_interval,
                        rm_gain, rm_offset, rm_target, rm_interval,
                        rng_prior, rng_chain, rng_ex,
                        snap_coords, snap_energies,
                        kept_acc2d, ex_att, ex_acc,
                        params, matrix, vector, resid2, prof3, scratch, flags):
    """Full replica-exchange run.

    Rung 1 is redrawn from the prior every iteration; rungs 2..L take one
    Metropolis sweep each; adjacent pairs then attempt an exchange in
    ascending order.  Step sizes adapt during burn-in only.  Post-burn-in
    states land in snap_coords/snap_energies; acceptance bookkeeping
    covers the post-burn-in window.
    """
    n_rungs = betas.shape[0]
    d = states.shape[1]
    rm_acc2d = np.zeros((n_rungs, d), np.int64)
    rm_cnt = 0
    rm_idx = 0
    if kind == ENERGY_SPECTRAL:
        for l in range(n_rungs):
            init_spectral_workspace(states[l], params, matrix, resid2[l], prof3[l])
    total = burn_in + n_samples
    for t in range(total):
        for j in range(d):
            states[0, j] = lo[j] + rng_prior.random() * (hi[j] - lo[j])
        energies[0] = energy_continuous(kind, states[0], params, matrix, vector)
        if kind == ENERGY_SPECTRAL:
            init_spectral_workspace(states[0], params, matrix, resid2[0], prof3[0])
        for l in range(1, n_rungs):
            e = metropolis_sweep_core(kind, states[l], energies[l], betas[l], n_data,
                                      eps2d[l], lo, hi, rng_chain, flags,
                                      params, matrix, vector, resid2[l], prof3[l], scratch)
            energies[l] = e
            if t < burn_in:
                for j in range(d):
                    rm_acc2d[l, j] += flags[j]
            else:
                for j in range(d):
                    kept_acc2d[l, j] += flags[j]
        if t < burn_in:
            rm_cnt += 1
            if rm_cnt >= rm_interval:
                rm_idx += 1
                for l in range(1, n_rungs):
                    for j in range(d):
                        eps2d[l, j] = _rm_step(eps2d[l, j], rm_acc2d[l, j] / rm_cnt,
                                               rm_idx, rm_gain, rm_offset, rm_target)
                        rm_acc2d[l, j] = 0
                rm_cnt = 0
        if t % exchange_interval == 0:
            for l in range(n_rungs - 1):
                arg = (betas[l + 1] - betas[l]) * n_data * (energies[l + 1] - energies[l])
                u = rng_ex.random()
                if t >= burn_in:
                    ex_att[l] += 1
                if arg >= 0.0 or u < math.exp(arg):
                    for j in range(d):
                        tmp = states[l, j]
                        states[l, j] = states[l + 1, j]
                        states[l + 1, j] = tmp
                    tmp_e = energies[l]
                    energies[l] = energies[l + 1]
                    energies[l + 1] = tmp_e
                    if kind == ENERGY_SPECTRAL:
                        n_pts = matrix.shape[1]
                        for i in range(n_pts):
                            tmp_r = resid2[l, i]
                            resid2[l, i] = resid2[l + 1, i]
                            resid2[l + 1, i] = tmp_r
                        for k in range(prof3.shape[1]):
                            for i in range(n_pts):
                                tmp_p = prof3[l, k, i]
                                prof3[l, k, i] = prof3[l + 1, k, i]
                                prof3[l + 1, k, i] = tmp_p
                    if t >= burn_in:
                        ex_acc[l] += 1
        if t >= burn_in:
            kk = t - burn_in
            for l in range(n_rungs):
                for j in range(d):
                    snap_coords[l, kk, j] = states[l, j]
                snap_energies[l, kk] = energies[l]
    return rm_idx


@jit
def run_remc_binary(kind, states, energies, betas,
                    n_data, burn_in, n_samples, exchange_interval,
                    rng_prior, rng_chain, rng_ex,
                    snap_bits, snap_energies,
                    kept_acc, ex_att, ex_acc,
                    params, matrix, vector):
    """Binary-state replica exchange; rung-1 bits are redrawn uniformly
    each iteration, other rungs take one flip attempt."""
    n_rungs = betas.shape[0]
    p = states.shape[1]
    total = burn_in + n_samples
    for t in range(total):
        for j in range(p):
            states[0, j] = np.int8(rng_prior.integers(0, 2))
        energies[0] = energy_binary(kind, states[0], params, matrix, vector)
        for l in range(1, n_rungs):
            e, accepted, _ = flip_step_core(kind, states[l], energies[l], betas[l],
                                            n_data, rng_chain, params, matrix, vector)
            energies[l] = e
            if t >= burn_in and accepted:
                kept_acc[l] += 1
        if t % exchange_interval == 0:
            for l in range(n_rungs - 1):
                arg = (betas[l + 1] - betas[l]) * n_data * (energies[l + 1] - energies[l])
                u = rng_ex.random()
                if t >= burn_in:
                    ex_att[l] += 1
                if arg >= 0.0 or u < math.exp(arg):
                    for j in range(p):
                        tmp = states[l, j]
                        states[l, j] = states[l + 1, j]
                        states[l + 1, j] = tmp
                    tmp_e = energies[l]
                    energies[l] = energies[l + 1]
                    energies[l + 1] = tmp_e
                    if t >= burn_in:
                        ex_acc[l] += 1
        if t >= burn_in:
            kk = t - burn_in
            for l in range(n_rungs):
                for j in range(p):
                    snap_bits[l, kk, j] = states[l, j]
                snap_energies[l, kk] = energies[l]
