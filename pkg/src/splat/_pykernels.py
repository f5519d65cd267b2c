"""Pure-Python kernels; reference twin of ``_kernels.pyx``.

Both modules expose the same functions with the same argument lists and
perform floating-point operations in the same order, so for identical
inputs (including the pre-drawn uniforms in ``rand``) they produce
bit-identical outputs. Arrays named as outputs are mutated in place.

Edge/CSR conventions follow :class:`splat.formula.Formula`. Message
triplets are stored in columns ``(U, S, STAR) = (0, 1, 2)``.
"""

U, S, STAR = 0, 1, 2


def sp_sweep(clause_ptr, edge_var, edge_sign, var_ptr, var_edges, order, eta, etac, pi, rho, check_bound):
    """One Gauss-Seidel SP(rho) pass over clauses in ``order``.

    ``etac`` carries ``1 - eta`` computed without cancellation, so surveys
    close to 1 keep full relative precision in their complement. For each
    clause, refresh the incoming Pi triplets from the current surveys,
    then recompute the outgoing ones. Returns
    ``(max_delta, violations, worst_excess, zero_edge)``; ``zero_edge`` is
    the first edge whose Pi triplet sums to zero (-1 if none), in which
    case the sweep stops early.
    """
    cp = clause_ptr.tolist()
    ev = edge_var.tolist()
    es = edge_sign.tolist()
    vp = var_ptr.tolist()
    ve = var_edges.tolist()
    et = eta.tolist()
    ec = etac.tolist()
    max_delta = 0.0
    violations = 0
    worst = 0.0
    zero_edge = -1
    ratio = []
    cratio = []
    bound = []
    for a in order.tolist():
        s = cp[a]
        e = cp[a + 1]
        del ratio[:]
        del cratio[:]
        del bound[:]
        for p in range(s, e):
            j = ev[p]
            jp = es[p]
            # qs/qu: products of (1 - eta) over agreeing/disagreeing clauses;
            # ys/yu: 1 - qs, 1 - qu accumulated without cancellation
            qs = 1.0
            qu = 1.0
            ys = 0.0
            yu = 0.0
            su = 0.0
            for t in range(vp[j], vp[j + 1]):
                q = ve[t]
                if q == p:
                    continue
                if es[q] == jp:
                    ys = ys + qs * et[q]
                    qs *= ec[q]
                else:
                    yu = yu + qu * et[q]
                    qu *= ec[q]
                    su += et[q]
            piu = ((1.0 - rho) + rho * yu) * qs
            pis = ys * qu
            pist = qs * qu
            pi[p, U] = piu
            pi[p, S] = pis
            pi[p, STAR] = pist
            tot = piu + pis + pist
            if tot <= 0.0:
                zero_edge = p
                break
            ratio.append(piu / tot)
            cratio.append((pis + pist) / tot)
            b = (1.0 - rho) + rho * su
            bound.append(b if b < 1.0 else 1.0)
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
            d = prod - et[p]
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
            et[p] = prod
            ec[p] = comp
    eta[:] = et
    etac[:] = ec
    return max_delta, violations, worst, zero_edge


def bp_sweep(clause_ptr, edge_var, edge_sign, var_ptr, var_edges, order, eta, rmsg, omega_o, omega_star):
    """One Gauss-Seidel pass of BP on the extended MRF (triplet form).

    ``eta`` holds normalized clause-to-variable triplets, ``rmsg`` the
    variable-to-clause triplets. Returns ``(max_delta, zero_edge)``.
    """
    cp = clause_ptr.tolist()
    ev = edge_var.tolist()
    es = edge_sign.tolist()
    vp = var_ptr.tolist()
    ve = var_edges.tolist()
    eu = eta[:, U].tolist()
    esat = eta[:, S].tolist()
    est = eta[:, STAR].tolist()
    smooth = 1.0 - omega_o
    max_delta = 0.0
    zero_edge = -1
    ru = []
    rst = []
    rdf = []
    for a in order.tolist():
        s = cp[a]
        e = cp[a + 1]
        del ru[:]
        del rst[:]
        del rdf[:]
        for p in range(s, e):
            j = ev[p]
            jp = es[p]
            # t_*: products of eta^*; x_*: prod(eta^s + eta^*) - prod(eta^*),
            # accumulated without cancellation; u_*: products of eta^u
            t_a = 1.0
            x_a = 0.0
            u_a = 1.0
            t_d = 1.0
            x_d = 0.0
            u_d = 1.0
            for t in range(vp[j], vp[j + 1]):
                q = ve[t]
                if q == p:
                    continue
                if es[q] == jp:
                    x_a = x_a * (esat[q] + est[q]) + t_a * esat[q]
                    t_a *= est[q]
                    u_a *= eu[q]
                else:
                    x_d = x_d * (esat[q] + est[q]) + t_d * esat[q]
                    t_d *= est[q]
                    u_d *= eu[q]
            r_s = u_d * (x_a + t_a)
            r_u = u_a * (x_d + omega_o * t_d)
            r_st = u_d * (x_a + omega_o * t_a) + omega_star * (t_a * t_d)
            rmsg[p, U] = r_u
            rmsg[p, S] = r_s
            rmsg[p, STAR] = r_st
            ru.append(r_u)
            rst.append(r_st)
            rdf.append(t_a * (smooth * u_d - omega_star * t_d))
        for p in range(s, e):
            # n_st = prod(R^u + R^*) - prod(R^u), accumulated without cancellation
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
            for new, arr in ((n_u, eu), (n_s, esat), (n_st, est)):
                d = new - arr[p]
                if d < 0.0:
                    d = -d
                if d > max_delta:
                    max_delta = d
            eu[p] = n_u
            esat[p] = n_s
            est[p] = n_st
        if zero_edge >= 0:
            break
    eta[:, U] = eu
    eta[:, S] = esat
    eta[:, STAR] = est
    return max_delta, zero_edge


def walksat_chunk(clause_ptr, edge_var, edge_sign, edge_clause, var_ptr, var_edges,
                  x, truecnt, unsat, unsat_pos, nunsat, rand, noise):
    """Run WalkSAT flips, one row of ``rand`` (3 uniforms) per flip.

    Stops early once no clause is unsatisfied. Returns the number of flips
    made. ``nunsat`` is a length-1 array holding the unsatisfied count.
    """
    cp = clause_ptr.tolist()
    ev = edge_var.tolist()
    es = edge_sign.tolist()
    ec = edge_clause.tolist()
    vp = var_ptr.tolist()
    ve = var_edges.tolist()
    xs = x.tolist()
    tc = truecnt.tolist()
    ul = unsat.tolist()
    up = unsat_pos.tolist()
    nu = int(nunsat[0])
    flips = 0
    for row in rand.tolist():
        if nu == 0:
            break
        u0, u1, u2 = row
        r = int(u0 * nu)
        if r >= nu:
            r = nu - 1
        c = ul[r]
        s = cp[c]
        w = cp[c + 1] - s
        if u1 < noise:
            r = int(u2 * w)
            if r >= w:
                r = w - 1
            v = ev[s + r]
        else:
            v = -1
            best = -1
            for q in range(s, s + w):
                cand = ev[q]
                br = 0
                for t in range(vp[cand], vp[cand + 1]):
                    f = ve[t]
                    if tc[ec[f]] == 1 and xs[cand] != es[f]:
                        br += 1
                if v < 0 or br < best:
                    v = cand
                    best = br
        xv = xs[v]
        for t in range(vp[v], vp[v + 1]):
            f = ve[t]
            b = ec[f]
            if xv != es[f]:
                tc[b] -= 1
                if tc[b] == 0:
                    ul[nu] = b
                    up[b] = nu
                    nu += 1
            else:
                tc[b] += 1
                if tc[b] == 1:
                    pos = up[b]
                    last = ul[nu - 1]
                    ul[pos] = last
                    up[last] = pos
                    up[b] = -1
                    nu -= 1
        xs[v] = 1 - xv
        flips += 1
    x[:] = xs
    truecnt[:] = tc
    unsat[:] = ul
    unsat_pos[:] = up
    nunsat[0] = nu
    return flips


def gibbs_chunk(clause_ptr, edge_var, edge_sign, edge_clause, var_ptr, var_edges,
                x, nsat, nstar, satsum, ucount, rand, t0, burn_in, omega_o, omega_star,
                last, occ, hist, code, pow3):
    """Single-site Gibbs steps on p_W, one row of ``rand`` (2 uniforms) per step.

    Clause caches (``nsat``, ``nstar``, ``satsum``) and per-variable
    unique-satisfier counts ``ucount`` are kept incremental. Occupancy is
    accumulated lazily into ``occ`` via ``last`` (step of the last change);
    ``hist`` (if non-empty) counts base-3 encoded full states after burn-in.
    Returns 0, or -1 - site if the conditional weights all vanished.
    """
    cp = clause_ptr.tolist()
    ev = edge_var.tolist()
    es = edge_sign.tolist()
    ec = edge_clause.tolist()
    vp = var_ptr.tolist()
    ve = var_edges.tolist()
    xs = x.tolist()
    ns_ = nsat.tolist()
    nst_ = nstar.tolist()
    ss_ = satsum.tolist()
    uc = ucount.tolist()
    ls = last.tolist()
    p3 = pow3.tolist()
    use_hist = len(hist) > 0
    cd = int(code[0])
    n = len(xs)
    wts = [0.0, 0.0, 0.0]
    valid = [False, False, False]
    dlt = [dict(), dict(), dict()]
    touched = []
    t = t0
    ret = 0
    for u0, u1 in rand.tolist():
        i = int(u0 * n)
        if i >= n:
            i = n - 1
        cur = xs[i]
        del touched[:]
        touched.append(i)
        for b in range(3):
            d = dlt[b]
            d.clear()
            ok = True
            for t_ in range(vp[i], vp[i + 1]):
                q = ve[t_]
                a = ec[q]
                jq = es[q]
                cs = 1 if (cur != 2 and cur != jq) else 0
                cst = 1 if cur == 2 else 0
                bs = 1 if (b != 2 and b != jq) else 0
                bst = 1 if b == 2 else 0
                nsa = ns_[a] - cs + bs
                nsta = nst_[a] - cst + bst
                if nsa == 0 and nsta <= 1:
                    ok = False
                    break
                ssa = ss_[a] - cs * i + bs * i
                uo = ss_[a] if (ns_[a] == 1 and nst_[a] == 0) else -1
                un = ssa if (nsa == 1 and nsta == 0) else -1
                if uo != un:
                    if uo >= 0:
                        d[uo] = d.get(uo, 0) - 1
                        if uo not in touched:
                            touched.append(uo)
                    if un >= 0:
                        d[un] = d.get(un, 0) + 1
                        if un not in touched:
                            touched.append(un)
            valid[b] = ok
        # the product runs over the union of touched variables for every b
        for b in range(3):
            if not valid[b]:
                wts[b] = 0.0
                continue
            d = dlt[b]
            wb = 1.0
            for j in touched:
                xj = b if j == i else xs[j]
                if xj == 2:
                    wb *= omega_star
                elif uc[j] + d.get(j, 0) > 0:
                    wb *= 1.0
                else:
                    wb *= omega_o
            wts[b] = wb
        tot = wts[0] + wts[1] + wts[2]
        if tot <= 0.0:
            ret = -1 - i
            break
        r = u1 * tot
        if r < wts[0]:
            nb = 0
        elif r < wts[0] + wts[1]:
            nb = 1
        else:
            nb = 2
        if nb != cur:
            for t_ in range(vp[i], vp[i + 1]):
                q = ve[t_]
                a = ec[q]
                jq = es[q]
                if cur == 2:
                    nst_[a] -= 1
                elif cur != jq:
                    ns_[a] -= 1
                    ss_[a] -= i
                if nb == 2:
                    nst_[a] += 1
                elif nb != jq:
                    ns_[a] += 1
                    ss_[a] += i
            for j, dj in dlt[nb].items():
                uc[j] += dj
            lo = ls[i] if ls[i] > burn_in else burn_in
            if t > lo:
                occ[i, cur] += t - lo
            ls[i] = t
            cd += (nb - cur) * p3[i]
            xs[i] = nb
        if use_hist and t >= burn_in:
            hist[cd] += 1
        t += 1
    x[:] = xs
    nsat[:] = ns_
    nstar[:] = nst_
    satsum[:] = ss_
    ucount[:] = uc
    last[:] = ls
    code[0] = cd
    return ret


def peel(clause_ptr, edge_var, edge_sign, edge_clause, var_ptr, var_edges,
         x, mask, rand, trace_star, trace_unc):
    """Peel unconstrained variables (restricted to ``mask``) to ``*``.

    Step ``s`` picks list position ``int(rand[s] * len)`` of the current
    candidate list. ``x`` must be valid and is modified in place. Returns
    the number of steps; ``trace_*[0..steps]`` hold (n_star, n_o).
    """
    cp = clause_ptr.tolist()
    ev = edge_var.tolist()
    es = edge_sign.tolist()
    ec = edge_clause.tolist()
    vp = var_ptr.tolist()
    ve = var_edges.tolist()
    xs = x.tolist()
    mk = mask.tolist()
    rnd = rand.tolist()
    n = len(xs)
    m = len(cp) - 1
    ns_ = [0] * m
    nst_ = [0] * m
    ss_ = [0] * m
    for a in range(m):
        for q in range(cp[a], cp[a + 1]):
            v = ev[q]
            if xs[v] == 2:
                nst_[a] += 1
            elif xs[v] != es[q]:
                ns_[a] += 1
                ss_[a] += v
    uc = [0] * n
    for a in range(m):
        if ns_[a] == 1 and nst_[a] == 0:
            uc[ss_[a]] += 1
    cand = []
    n_star = 0
    n_o = 0
    for j in range(n):
        if xs[j] == 2:
            n_star += 1
        elif uc[j] == 0:
            n_o += 1
            if mk[j]:
                cand.append(j)
    trace_star[0] = n_star
    trace_unc[0] = n_o
    steps = 0
    while cand:
        r = int(rnd[steps] * len(cand))
        if r >= len(cand):
            r = len(cand) - 1
        v = cand[r]
        cand[r] = cand[-1]
        cand.pop()
        xv = xs[v]
        for t in range(vp[v], vp[v + 1]):
            q = ve[t]
            a = ec[q]
            uo = ss_[a] if (ns_[a] == 1 and nst_[a] == 0) else -1
            if xv != es[q]:
                ns_[a] -= 1
                ss_[a] -= v
            nst_[a] += 1
            if uo >= 0:
                uc[uo] -= 1
                if uc[uo] == 0:
                    n_o += 1
                    if mk[uo]:
                        cand.append(uo)
        xs[v] = 2
        n_star += 1
        n_o -= 1
        steps += 1
        trace_star[steps] = n_star
        trace_unc[steps] = n_o
    x[:] = xs
    return steps
