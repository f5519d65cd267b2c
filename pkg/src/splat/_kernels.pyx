# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Twin of ``_pykernels.py``: same signatures, same
floating-point operation order, bit-identical results."""

import numpy as np

from libc.stdint cimport int64_t, int8_t, uint8_t

cdef enum:
    U = 0
    S = 1
    ST = 2


def sp_sweep(const int64_t[:] clause_ptr, const int64_t[:] edge_var, const int8_t[:] edge_sign,
             const int64_t[:] var_ptr, const int64_t[:] var_edges, const int64_t[:] order,
             double[:] eta, double[:] etac, double[:, :] pi, double rho, bint check_bound):
    cdef Py_ssize_t idx, a, s, e, p, q, t, j
    cdef int8_t jp
    cdef double qs, qu, ys, yu, su, piu, pis, pist, tot, b, prod, comp, bnd, d, excess
    cdef double max_delta = 0.0, worst = 0.0
    cdef long violations = 0
    cdef Py_ssize_t zero_edge = -1
    cdef Py_ssize_t kmax = 1
    cdef Py_ssize_t m = clause_ptr.shape[0] - 1
    for a in range(m):
        if clause_ptr[a + 1] - clause_ptr[a] > kmax:
            kmax = clause_ptr[a + 1] - clause_ptr[a]
    cdef double[:] ratio = np.empty(kmax, dtype=np.float64)
    cdef double[:] cratio = np.empty(kmax, dtype=np.float64)
    cdef double[:] bound = np.empty(kmax, dtype=np.float64)
    for idx in range(order.shape[0]):
        a = order[idx]
        s = clause_ptr[a]
        e = clause_ptr[a + 1]
        for p in range(s, e):
            j = edge_var[p]
            jp = edge_sign[p]
            qs = 1.0
            qu = 1.0
            ys = 0.0
            yu = 0.0
            su = 0.0
            for t in range(var_ptr[j], var_ptr[j + 1]):
                q = var_edges[t]
                if q == p:
                    continue
                if edge_sign[q] == jp:
                    ys = ys + qs * eta[q]
                    qs *= etac[q]
                else:
                    yu = yu + qu * eta[q]
                    qu *= etac[q]
                    su += eta[q]
            piu = ((1.0 - rho) + rho * yu) * qs
            pis = ys * qu
            pist = qs * qu
            pi[p, U] = piu
            pi[p, S] = pis
            pi[p, ST] = pist
            tot = piu + pis + pist
            if tot <= 0.0:
                zero_edge = p
                break
            ratio[p - s] = piu / tot
            cratio[p - s] = (pis + pist) / tot
            b = (1.0 - rho) + rho * su
            bound[p - s] = b if b < 1.0 else 1.0
        if zero_edge >= 0:
            break
        for p in range(s, e):
            prod = 1.0
            comp = 0.0
            bnd = 1.0
            for q in range(s, e):
                if q != p:
                    comp = comp + prod * cratio[q - s]
                    prod *= ratio[q - s]
                    bnd *= bound[q - s]
            d = prod - eta[p]
            if d < 0.0:
                d = -d
            if d > max_delta:
                max_delta = d
            if check_bound:
                excess = prod - bnd
                if excess > worst:
                    worst = excess
                if excess > 1e-12:
                    violations += 1
            eta[p] = prod
            etac[p] = comp
    return max_delta, violations, worst, zero_edge


def bp_sweep(const int64_t[:] clause_ptr, const int64_t[:] edge_var, const int8_t[:] edge_sign,
             const int64_t[:] var_ptr, const int64_t[:] var_edges, const int64_t[:] order,
             double[:, :] eta, double[:, :] rmsg, double omega_o, double omega_star):
    cdef Py_ssize_t idx, a, s, e, p, q, o, t, j
    cdef int8_t jp
    cdef double t_a, x_a, u_a, t_d, x_d, u_d
    cdef double r_s, r_u, r_st, prod_u, corr, term, n_s, n_st, n_u, tot, d
    cdef double smooth = 1.0 - omega_o
    cdef double max_delta = 0.0
    cdef Py_ssize_t zero_edge = -1
    cdef Py_ssize_t kmax = 1
    cdef Py_ssize_t m = clause_ptr.shape[0] - 1
    for a in range(m):
        if clause_ptr[a + 1] - clause_ptr[a] > kmax:
            kmax = clause_ptr[a + 1] - clause_ptr[a]
    cdef double[:] ru = np.empty(kmax, dtype=np.float64)
    cdef double[:] rst = np.empty(kmax, dtype=np.float64)
    cdef double[:] rdf = np.empty(kmax, dtype=np.float64)
    for idx in range(order.shape[0]):
        a = order[idx]
        s = clause_ptr[a]
        e = clause_ptr[a + 1]
        for p in range(s, e):
            j = edge_var[p]
            jp = edge_sign[p]
            t_a = 1.0
            x_a = 0.0
            u_a = 1.0
            t_d = 1.0
            x_d = 0.0
            u_d = 1.0
            for t in range(var_ptr[j], var_ptr[j + 1]):
                q = var_edges[t]
                if q == p:
                    continue
                if edge_sign[q] == jp:
                    x_a = x_a * (eta[q, S] + eta[q, ST]) + t_a * eta[q, S]
                    t_a *= eta[q, ST]
                    u_a *= eta[q, U]
                else:
                    x_d = x_d * (eta[q, S] + eta[q, ST]) + t_d * eta[q, S]
                    t_d *= eta[q, ST]
                    u_d *= eta[q, U]
            r_s = u_d * (x_a + t_a)
            r_u = u_a * (x_d + omega_o * t_d)
            r_st = u_d * (x_a + omega_o * t_a) + omega_star * (t_a * t_d)
            rmsg[p, U] = r_u
            rmsg[p, S] = r_s
            rmsg[p, ST] = r_st
            ru[p - s] = r_u
            rst[p - s] = r_st
            rdf[p - s] = t_a * (smooth * u_d - omega_star * t_d)
        for p in range(s, e):
            prod_u = 1.0
            n_st = 0.0
            corr = 0.0
            for q in range(s, e):
                if q == p:
                    continue
                n_st = n_st * (ru[q - s] + rst[q - s]) + prod_u * rst[q - s]
                prod_u *= ru[q - s]
                term = rdf[q - s]
                for o in range(s, e):
                    if o != p and o != q:
                        term *= ru[o - s]
                corr += term
            n_s = prod_u
            n_u = n_st + corr
            if n_st < 0.0:
                n_st = 0.0
            if n_u < 0.0:
                n_u = 0.0
            tot = n_u + n_s + n_st
            if tot <= 0.0:
                zero_edge = p
                break
            n_u = n_u / tot
            n_s = n_s / tot
            n_st = n_st / tot
            d = n_u - eta[p, U]
            if d < 0.0:
                d = -d
            if d > max_delta:
                max_delta = d
            d = n_s - eta[p, S]
            if d < 0.0:
                d = -d
            if d > max_delta:
                max_delta = d
            d = n_st - eta[p, ST]
            if d < 0.0:
                d = -d
            if d > max_delta:
                max_delta = d
            eta[p, U] = n_u
            eta[p, S] = n_s
            eta[p, ST] = n_st
        if zero_edge >= 0:
            break
    return max_delta, zero_edge


def walksat_chunk(const int64_t[:] clause_ptr, const int64_t[:] edge_var, const int8_t[:] edge_sign,
                  const int64_t[:] edge_clause, const int64_t[:] var_ptr, const int64_t[:] var_edges,
                  int8_t[:] x, int64_t[:] truecnt, int64_t[:] unsat, int64_t[:] unsat_pos,
                  int64_t[:] nunsat, const double[:, :] rand, double noise):
    cdef Py_ssize_t row, r, c, s, w, q, t, f, b, v, cand, pos, last
    cdef long br, best
    cdef int8_t xv
    cdef Py_ssize_t nu = nunsat[0]
    cdef long flips = 0
    for row in range(rand.shape[0]):
        if nu == 0:
            break
        r = <Py_ssize_t>(rand[row, 0] * nu)
        if r >= nu:
            r = nu - 1
        c = unsat[r]
        s = clause_ptr[c]
        w = clause_ptr[c + 1] - s
        if rand[row, 1] < noise:
            r = <Py_ssize_t>(rand[row, 2] * w)
            if r >= w:
                r = w - 1
            v = edge_var[s + r]
        else:
            v = -1
            best = -1
            for q in range(s, s + w):
                cand = edge_var[q]
                br = 0
                for t in range(var_ptr[cand], var_ptr[cand + 1]):
                    f = var_edges[t]
                    if truecnt[edge_clause[f]] == 1 and x[cand] != edge_sign[f]:
                        br += 1
                if v < 0 or br < best:
                    v = cand
                    best = br
        xv = x[v]
        for t in range(var_ptr[v], var_ptr[v + 1]):
            f = var_edges[t]
            b = edge_clause[f]
            if xv != edge_sign[f]:
                truecnt[b] -= 1
                if truecnt[b] == 0:
                    unsat[nu] = b
                    unsat_pos[b] = nu
                    nu += 1
            else:
                truecnt[b] += 1
                if truecnt[b] == 1:
                    pos = unsat_pos[b]
                    last = unsat[nu - 1]
                    unsat[pos] = last
                    unsat_pos[last] = pos
                    unsat_pos[b] = -1
                    nu -= 1
        x[v] = 1 - xv
        flips += 1
    nunsat[0] = nu
    return flips


def gibbs_chunk(const int64_t[:] clause_ptr, const int64_t[:] edge_var, const int8_t[:] edge_sign,
                const int64_t[:] edge_clause, const int64_t[:] var_ptr, const int64_t[:] var_edges,
                int8_t[:] x, int64_t[:] nsat, int64_t[:] nstar, int64_t[:] satsum, int64_t[:] ucount,
                const double[:, :] rand, int64_t t0, int64_t burn_in, double omega_o, double omega_star,
                int64_t[:] last, int64_t[:, :] occ, int64_t[:] hist, int64_t[:] code,
                const int64_t[:] pow3):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t row, i, b, nb, t_, q, a, j, k, ntouched
    cdef int8_t cur, jq, xj
    cdef int64_t cs, cst, bs, bst, nsa, nsta, ssa, uo, un, lo
    cdef int64_t t = t0
    cdef int64_t cd = code[0]
    cdef double wb, tot, r
    cdef double wts[3]
    cdef bint valid[3]
    cdef bint ok
    cdef bint use_hist = hist.shape[0] > 0
    cdef int64_t[:, :] dlt = np.zeros((3, n), dtype=np.int64)
    cdef int64_t[:] mark = np.zeros(n, dtype=np.int64)
    cdef int64_t[:] touched = np.empty(n + 1, dtype=np.int64)
    cdef int64_t stamp = 0
    cdef long ret = 0
    for row in range(rand.shape[0]):
        i = <Py_ssize_t>(rand[row, 0] * n)
        if i >= n:
            i = n - 1
        cur = x[i]
        stamp += 1
        ntouched = 0
        touched[ntouched] = i
        ntouched += 1
        mark[i] = stamp
        for b in range(3):
            ok = True
            for t_ in range(var_ptr[i], var_ptr[i + 1]):
                q = var_edges[t_]
                a = edge_clause[q]
                jq = edge_sign[q]
                cs = 1 if (cur != 2 and cur != jq) else 0
                cst = 1 if cur == 2 else 0
                bs = 1 if (b != 2 and b != jq) else 0
                bst = 1 if b == 2 else 0
                nsa = nsat[a] - cs + bs
                nsta = nstar[a] - cst + bst
                if nsa == 0 and nsta <= 1:
                    ok = False
                    break
                ssa = satsum[a] - cs * i + bs * i
                uo = satsum[a] if (nsat[a] == 1 and nstar[a] == 0) else -1
                un = ssa if (nsa == 1 and nsta == 0) else -1
                if uo != un:
                    if uo >= 0:
                        dlt[b, uo] -= 1
                        if mark[uo] != stamp:
                            mark[uo] = stamp
                            touched[ntouched] = uo
                            ntouched += 1
                    if un >= 0:
                        dlt[b, un] += 1
                        if mark[un] != stamp:
                            mark[un] = stamp
                            touched[ntouched] = un
                            ntouched += 1
            valid[b] = ok
        for b in range(3):
            if not valid[b]:
                wts[b] = 0.0
                continue
            wb = 1.0
            for k in range(ntouched):
                j = touched[k]
                xj = <int8_t>b if j == i else x[j]
                if xj == 2:
                    wb *= omega_star
                elif ucount[j] + dlt[b, j] > 0:
                    wb *= 1.0
                else:
                    wb *= omega_o
            wts[b] = wb
        tot = wts[0] + wts[1] + wts[2]
        if tot <= 0.0:
            ret = -1 - i
            for k in range(ntouched):
                j = touched[k]
                dlt[0, j] = 0
                dlt[1, j] = 0
                dlt[2, j] = 0
            break
        r = rand[row, 1] * tot
        if r < wts[0]:
            nb = 0
        elif r < wts[0] + wts[1]:
            nb = 1
        else:
            nb = 2
        if nb != cur:
            for t_ in range(var_ptr[i], var_ptr[i + 1]):
                q = var_edges[t_]
                a = edge_clause[q]
                jq = edge_sign[q]
                if cur == 2:
                    nstar[a] -= 1
                elif cur != jq:
                    nsat[a] -= 1
                    satsum[a] -= i
                if nb == 2:
                    nstar[a] += 1
                elif nb != jq:
                    nsat[a] += 1
                    satsum[a] += i
            for k in range(ntouched):
                j = touched[k]
                ucount[j] += dlt[nb, j]
            lo = last[i] if last[i] > burn_in else burn_in
            if t > lo:
                occ[i, cur] += t - lo
            last[i] = t
            cd += (nb - cur) * pow3[i]
            x[i] = <int8_t>nb
        for k in range(ntouched):
            j = touched[k]
            dlt[0, j] = 0
            dlt[1, j] = 0
            dlt[2, j] = 0
        if use_hist and t >= burn_in:
            hist[cd] += 1
        t += 1
    code[0] = cd
    return ret


def peel(const int64_t[:] clause_ptr, const int64_t[:] edge_var, const int8_t[:] edge_sign,
         const int64_t[:] edge_clause, const int64_t[:] var_ptr, const int64_t[:] var_edges,
         int8_t[:] x, const uint8_t[:] mask, const double[:] rand,
         int64_t[:] trace_star, int64_t[:] trace_unc):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = clause_ptr.shape[0] - 1
    cdef Py_ssize_t a, q, v, j, t, r, ncand = 0
    cdef int64_t uo
    cdef int8_t xv
    cdef int64_t[:] ns_ = np.zeros(m, dtype=np.int64)
    cdef int64_t[:] nst_ = np.zeros(m, dtype=np.int64)
    cdef int64_t[:] ss_ = np.zeros(m, dtype=np.int64)
    cdef int64_t[:] uc = np.zeros(n, dtype=np.int64)
    cdef int64_t[:] cand = np.empty(n, dtype=np.int64)
    cdef int64_t n_star = 0, n_o = 0, steps = 0
    for a in range(m):
        for q in range(clause_ptr[a], clause_ptr[a + 1]):
            v = edge_var[q]
            if x[v] == 2:
                nst_[a] += 1
            elif x[v] != edge_sign[q]:
                ns_[a] += 1
                ss_[a] += v
    for a in range(m):
        if ns_[a] == 1 and nst_[a] == 0:
            uc[ss_[a]] += 1
    for j in range(n):
        if x[j] == 2:
            n_star += 1
        elif uc[j] == 0:
            n_o += 1
            if mask[j]:
                cand[ncand] = j
                ncand += 1
    trace_star[0] = n_star
    trace_unc[0] = n_o
    while ncand > 0:
        r = <Py_ssize_t>(rand[steps] * ncand)
        if r >= ncand:
            r = ncand - 1
        v = cand[r]
        cand[r] = cand[ncand - 1]
        ncand -= 1
        xv = x[v]
        for t in range(var_ptr[v], var_ptr[v + 1]):
            q = var_edges[t]
            a = edge_clause[q]
            uo = ss_[a] if (ns_[a] == 1 and nst_[a] == 0) else -1
            if xv != edge_sign[q]:
                ns_[a] -= 1
                ss_[a] -= v
            nst_[a] += 1
            if uo >= 0:
                uc[uo] -= 1
                if uc[uo] == 0:
                    n_o += 1
                    if mask[uo]:
                        cand[ncand] = uo
                        ncand += 1
        x[v] = 2
        n_star += 1
        n_o -= 1
        steps += 1
        trace_star[steps] = n_star
        trace_unc[steps] = n_o
    return steps
