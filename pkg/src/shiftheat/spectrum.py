"""Eigenvalue enumeration for the first spectral problem.

Zeros of the characteristic determinant are located by argument-principle
winding counts over a breadth-first rectangle subdivision of the strip, then
refined: each zero cluster is resampled on a small circle, the local Taylor
polynomial is extracted by FFT, and the polynomial roots give the cluster
centroid. The centroid is exact to determinant accuracy even for multiple
zeros, where plain Newton loses half the digits; simple roots get a final
Newton polish on top.

All winding evaluations of one subdivision level (and all refinement
circles) share a single vectorized propagation, which is what makes sweeps
up to |mu| ~ 100 affordable. Winding counts tolerate coarse determinants,
so they use a much lower step density than refinement.

Asymptotic seeds are advisory only; the sweep is authoritative. A zero of
the determinant at the origin (it occurs for periodic-type boundary weights)
is reported in :class:`SpectrumMeta` as the zero group rather than as an
enumerated eigenvalue; the projection machinery accounts for it separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .green import char_det_batch
from .util import SingularParameterError

__all__ = [
    "EigenvalueRecord",
    "SpectrumMeta",
    "coefficient_A",
    "asymptotic_seed",
    "dirichlet_seed",
    "locate_eigenvalues",
    "multiplicity",
]

ZERO_GROUP_TOL = 1e-6


@dataclass(frozen=True)
class EigenvalueRecord:
    nu: int
    mu: complex
    chi: int
    seed: complex
    residual: float
    clearance: float

    @property
    def modulus(self):
        return abs(self.mu)


@dataclass(frozen=True)
class SpectrumMeta:
    h: float
    delta: float
    radii: tuple
    counts: tuple
    zero_multiplicity: int
    complete: bool
    searched_box: tuple  # (h_box, im_max)


def coefficient_A(spec):
    """The branch constant of the eigenvalue asymptotics."""
    return (2.0 * spec.alpha0 * spec.alpha1 * np.exp(spec.drift_integral)
            + 2.0 * spec.beta0 * spec.beta1) / spec.regularity_constant


def asymptotic_seed(spec, nu):
    """Large-index seed values for eigenvalue pairs (advisory, both branches)."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    A = coefficient_A(spec)
    inv_len = 1.0 / spec.sqrt_a_scale
    root = np.sqrt(complex(A) ** 2 - 4.0)
    vals = []
    for s in (+1.0, -1.0):
        branch = 0.5 * (A + s * root)
        ln0 = np.log(branch)  # principal log: imag part in (-pi, pi]
        base = inv_len * (ln0 + 2j * np.pi * nu)
        vals.extend([base, -base])
    out = []
    for v in vals:
        if not any(abs(v - u) < 1e-12 * (1.0 + abs(v)) for u in out):
            out.append(complex(v))
    return sorted(out, key=_sort_key)


def corrected_A(spec):
    """Branch constant rebuilt from the Liouville-Green determinant asymptotics.

    The printed constant has the wrong sign and endpoint weights (for the
    unit-coefficient periodic problem it predicts the ladder (2 nu + 1) pi i
    while the spectrum is 2 nu pi i). With the standard amplitude a^(1/4)
    the large-parameter eigenvalue relation is E + 1/E = A with

        A = -(2 a0 a1)^(1/4)-weighted combination below,  E = exp(mu I),

    which reproduces the exact ladders in every constant-coefficient check.
    """
    a0 = spec.a_at(0.0)
    a1 = spec.a_at(1.0)
    beta = spec.drift_integral
    num = (2.0 * spec.alpha0 * spec.alpha1 * np.exp(beta)
           + 2.0 * spec.beta0 * spec.beta1 * np.exp(-beta)) * (a0 * a1) ** 0.25
    den = np.sqrt(a0) * spec.alpha0 * spec.beta1 + np.sqrt(a1) * spec.beta0 * spec.alpha1
    return -num / den


def corrected_seed(spec, nu):
    """Seed values from the corrected branch constant (used for reporting)."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    A = corrected_A(spec)
    inv_len = 1.0 / spec.sqrt_a_scale
    root = np.sqrt(complex(A) ** 2 - 4.0)
    vals = []
    for s in (+1.0, -1.0):
        base = inv_len * (np.log(0.5 * (A + s * root)) + 2j * np.pi * nu)
        vals.extend([base, -base])
    out = []
    for v in vals:
        if not any(abs(v - u) < 1e-12 * (1.0 + abs(v)) for u in out):
            out.append(complex(v))
    return sorted(out, key=_sort_key)


def dirichlet_seed(spec, nu):
    """Seed for the nu-th Dirichlet eigenvalue (second spectral problem)."""
    return complex(1j * np.pi * nu / spec.sqrt_a_scale)


def _sort_key(z):
    # modulus rounded so that +-pairs tie and the principal argument decides
    return (round(abs(z), 8), round(float(np.angle(z)), 12))


# ---------------------------------------------------------------------------
# batched winding counts

def _steps_for_winding(max_mod):
    return int(max(96, np.ceil(4.0 * max_mod)))


def _steps_for_refine(max_mod, per_mu=40):
    return int(max(400, np.ceil(per_mu * max_mod)))


class _BatchDet:
    """Evaluate the determinant at many points with one propagation."""

    def __init__(self, spec, kind, n_steps):
        self.spec = spec
        self.kind = kind
        self.n_steps = n_steps

    def __call__(self, zs):
        det, scale = char_det_batch(self.spec, zs, self.kind, n_steps=self.n_steps)
        return det, scale


def _windings_many(evaluator, zfuns, n0s, guard):
    """Winding numbers for several closed curves sharing one evaluator.

    Returns a list of ints (or None where the count is unreliable: a node too
    close to a zero, or a non-integer total).
    """
    ts = [np.linspace(0.0, 1.0, n + 1) for n in n0s]
    zs = [zf(t) for zf, t in zip(zfuns, ts)]
    sizes = [len(z) for z in zs]
    det, scale = evaluator(np.concatenate(zs))
    dets = _split(det, sizes)
    scales = _split(scale, sizes)

    for _round in range(5):
        new_t, owner = [], []
        for i, (t, d) in enumerate(zip(ts, dets)):
            gaps = np.abs(np.diff(np.unwrap(np.angle(d))))
            bad = np.nonzero(gaps > 0.5 * np.pi)[0]
            if bad.size and len(t) < 8192:
                tm = 0.5 * (t[bad] + t[bad + 1])
                new_t.append(tm)
                owner.extend([i] * len(tm))
        if not new_t:
            break
        flat_t = np.concatenate(new_t)
        flat_z = np.concatenate([zfuns[i](np.array([tv]))
                                 for i, tv in zip(owner, flat_t)])
        dnew, snew = evaluator(flat_z)
        for i in set(owner):
            mask = np.array(owner) == i
            ts[i] = np.concatenate([ts[i], flat_t[mask]])
            order = np.argsort(ts[i])
            ts[i] = ts[i][order]
            dets[i] = np.concatenate([dets[i], dnew[mask]])[order]
            scales[i] = np.concatenate([scales[i], snew[mask]])[order]

    out = []
    for d, s in zip(dets, scales):
        rel = np.abs(d) / s
        ph = np.unwrap(np.angle(d))
        w = (ph[-1] - ph[0]) / (2.0 * np.pi)
        wi = int(np.round(w))
        if float(np.min(rel)) < guard or abs(w - wi) > 0.25:
            out.append(None)
        else:
            out.append(wi)
    return out


def _split(arr, sizes):
    out = []
    k = 0
    for s in sizes:
        out.append(arr[k:k + s])
        k += s
    return out


def _rect_fun(x0, x1, y0, y1):
    corners = np.array([x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1,
                        x0 + 1j * y0])

    def zf(t):
        t = np.asarray(t, dtype=float)
        seg = np.minimum((t * 4).astype(int), 3)
        frac = t * 4 - seg
        return corners[seg] + (corners[seg + 1] - corners[seg]) * frac

    return zf


def _circle_fun(center, rho):
    def zf(t):
        return center + rho * np.exp(2j * np.pi * np.asarray(t))

    return zf


def _rect_n0(box):
    x0, x1, y0, y1 = box
    per = 2 * ((x1 - x0) + (y1 - y0))
    return int(np.clip(per / 0.12, 64, 4096))


def multiplicity(spec, mu, rho, n_nodes=256, kind="nonlocal", per_mu=40,
                 guard=1e-8):
    """Winding number of the determinant around the circle |z - mu| = rho.

    Fails if the determinant nearly vanishes at a node (zero on the circle)
    or the phase-unwrapped count does not settle to an integer.
    """
    ev = _BatchDet(spec, kind, _steps_for_refine(abs(mu) + rho, per_mu))
    w = _windings_many(ev, [_circle_fun(complex(mu), float(rho))], [n_nodes],
                       guard)[0]
    if w is None:
        raise SingularParameterError(
            f"winding unreliable on circle around {mu} (radius {rho})")
    return w


# ---------------------------------------------------------------------------
# cluster refinement

def _merge_tol(center):
    # below any genuine pair separation, above the noise split of a true
    # multiple zero (~sqrt of the determinant accuracy)
    return max(2e-3, 1e-3 * np.sqrt(1.0 + abs(center)))


def _cluster_points(points, tol):
    groups = []
    for p in sorted(points, key=lambda z: (z.real, z.imag)):
        for g in groups:
            if abs(p - np.mean(g)) < tol:
                g.append(p)
                break
        else:
            groups.append([p])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _circle_pass(spec, centers, rhos, kind, per_mu, n_fft=128):
    """One uniform circle per cluster: winding count and Taylor roots together.

    Clusters are bucketed by modulus so low ones do not pay the step count
    of the highest; the determinant accuracy requirement also relaxes with
    the modulus (only small eigenvalues carry 1e-8 location targets).
    """
    order = np.argsort([abs(c) for c in centers])
    results = [None] * len(centers)
    for start in range(0, len(order), 12):
        idx = order[start:start + 12]
        max_mod = max(abs(centers[i]) + rhos[i] for i in idx)
        pm = per_mu if max_mod <= 25 else max(16, int(per_mu * 25 / max_mod))
        n_steps = _steps_for_refine(max_mod, pm)
        zs = []
        theta = 2.0 * np.pi * np.arange(n_fft) / n_fft
        ring = np.exp(1j * theta)
        for i in idx:
            zs.append(centers[i] + rhos[i] * ring)
        det, scale = char_det_batch(spec, np.concatenate(zs), kind,
                                    n_steps=n_steps)
        for j, i in enumerate(idx):
            d = det[j * n_fft:(j + 1) * n_fft]
            s = scale[j * n_fft:(j + 1) * n_fft]
            rel = np.abs(d) / s
            ph = np.unwrap(np.angle(np.concatenate([d, d[:1]])))
            w = (ph[-1] - ph[0]) / (2 * np.pi)
            wi = int(np.round(w))
            gaps = float(np.max(np.abs(np.diff(ph))))
            if (float(np.min(rel)) < 1e-6 or abs(w - wi) > 0.2
                    or gaps > 0.6 * np.pi):
                results[i] = None
                continue
            s0 = float(np.median(s)) or 1.0
            coeffs = np.fft.fft(d / s0) / n_fft
            K = min(wi + 6, n_fft - 1)
            poly = coeffs[:K + 1] / rhos[i] ** np.arange(K + 1)
            roots = np.roots(poly[::-1]) if wi else np.array([])
            keep = centers[i] + roots[np.abs(roots) < 0.75 * rhos[i]]
            results[i] = (wi, keep)
    return results


def _refine_clusters(spec, boxes, kind, per_mu=40):
    """Resolve winding clusters (box, w) into (value, multiplicity) pairs."""
    if not boxes:
        return [], True
    centers, rhos = [], []
    for (x0, x1, y0, y1), _w in boxes:
        centers.append(complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        rhos.append(0.75 * float(np.hypot(x1 - x0, y1 - y0)))

    found = []
    second = []
    pending = list(range(len(boxes)))
    complete = True
    for _pass in range(5):
        if not pending:
            break
        res = _circle_pass(spec, [centers[i] for i in pending],
                           [rhos[i] for i in pending], kind, per_mu)
        retry = []
        for i, r in zip(pending, res):
            if r is None:
                rhos[i] *= 0.78
                retry.append(i)
                continue
            wi, roots = r
            if wi == 0:
                continue
            if len(roots) != wi:
                rhos[i] *= 0.7
                retry.append(i)
                continue
            for val, chi in _cluster_points(roots, _merge_tol(centers[i])):
                if chi > 1 and abs(val) <= 25.0:
                    # location targets tighten only for small eigenvalues
                    second.append(len(found))
                found.append((val, chi))
        pending = retry
    complete = not pending

    if second:
        # recentred pass: a centered circle gives a cleaner centroid for
        # multiple zeros than one offset toward the box corner
        vals = [found[j][0] for j in second]
        chis = [found[j][1] for j in second]
        rr = [min(0.4, max(0.1, 0.05 * (1 + abs(v)))) for v in vals]
        res = _circle_pass(spec, vals, rr, kind, per_mu)
        for j, v, chi, r in zip(second, vals, chis, res):
            if r is None:
                continue
            wi, roots = r
            if wi == chi and len(roots) == chi and all(
                    abs(qq - v) < _merge_tol(v) for qq in roots):
                found[j] = (complex(np.mean(roots)), chi)
    return found, complete


def _newton_polish(spec, zs, kind, per_mu=40, max_steps=50):
    """Simultaneous Newton on simple roots (central-difference derivative)."""
    zs = np.array(zs, dtype=complex)
    if zs.size == 0:
        return zs
    n_steps = _steps_for_refine(float(np.max(np.abs(zs))) + 1.0, per_mu)
    done = np.zeros(len(zs), dtype=bool)
    for _ in range(max_steps):
        active = ~done
        if not active.any():
            break
        za = zs[active]
        hh = 1e-6 * (1.0 + np.abs(za))
        allz = np.concatenate([za, za + hh, za - hh])
        det, scale = char_det_batch(spec, allz, kind, n_steps=n_steps)
        n = len(za)
        f = det[:n]
        fp = (det[n:2 * n] - det[2 * n:]) / (2.0 * hh)
        step = np.where(fp != 0, f / np.where(fp == 0, 1, fp), 0.0)
        zs[active] = za - step
        conv = (np.abs(f) < 1e-11 * scale[:n]) | (np.abs(step) < 1e-12 * (1 + np.abs(za)))
        idx = np.nonzero(active)[0]
        done[idx[conv]] = True
    return zs


# ---------------------------------------------------------------------------
# the sweep

def locate_eigenvalues(spec, count, kind="nonlocal", im_max=None, per_mu=40,
                       max_boxes=4000):
    """Locate the ``count`` smallest-modulus eigenvalues with multiplicities.

    Returns (records, meta). Records are sorted by (modulus, principal
    argument); a determinant zero at the origin is excluded from the records
    and reported as ``meta.zero_multiplicity``. ``meta.complete`` is False
    when the subdivision budget ran out (partial results are still returned).
    """
    if count < 1:
        raise ValueError("count must be >= 1")

    xs = np.linspace(0.0, 1.0, 201)
    cmax = float(np.max(spec.c_at(xs) + spec.b_at(xs) ** 2 / (4.0 * spec.a_at(xs))))
    h0 = 1.0 + np.sqrt(max(0.0, cmax))

    seeds = []
    for nu in range(1, count + 6):
        seeds.extend(corrected_seed(spec, nu))
    seeds = sorted(set(seeds), key=_sort_key)
    if im_max is None:
        pairs_needed = count // 2 + 2
        need = 2.0 * np.pi * pairs_needed / spec.sqrt_a_scale
        im_max = float(need) * 1.1 + 2.0

    found, zero_chi, complete = [], 0, False
    for _attempt in range(4):
        found, zero_chi, complete = _sweep(spec, h0, im_max, kind, per_mu, max_boxes)
        found = [(z, chi) for z, chi in found if abs(z) > ZERO_GROUP_TOL]
        found.sort(key=lambda it: _sort_key(it[0]))
        h_emp = max((abs(z.real) for z, _ in found[:10]), default=0.0)
        if h_emp + 0.4 > h0:
            h0 = h_emp + 1.0
            continue
        if len(found) >= count and abs(found[count - 1][0]) <= im_max:
            break
        if not complete:
            break
        im_max *= 1.5
    else:
        complete = False

    usable = [it for it in found if abs(it[0]) <= im_max + 1e-9]
    if len(usable) < count:
        complete = False
    selected = usable[:count]

    simple_idx = [i for i, (_, chi) in enumerate(selected) if chi == 1]
    if simple_idx:
        polished = _newton_polish(spec, [selected[i][0] for i in simple_idx],
                                  kind, per_mu)
        for j, i in enumerate(simple_idx):
            selected[i] = (complex(polished[j]), 1)
    selected.sort(key=lambda it: _sort_key(it[0]))

    all_points = [z for z, _ in selected]
    if zero_chi:
        all_points = [0.0 + 0.0j] + all_points

    records = []
    if selected:
        zvals = np.array([z for z, _ in selected])
        n_res = _steps_for_refine(float(np.max(np.abs(zvals))), 48)
        det_all, scale_all = char_det_batch(spec, zvals, kind, n_steps=n_res)
    for i, (z, chi) in enumerate(selected):
        near_seed = min(seeds, key=lambda s: abs(s - z)) if seeds else 0j
        others = [p for p in all_points if abs(p - z) > 1e-9]
        clearance = min((abs(p - z) for p in others), default=np.inf)
        records.append(EigenvalueRecord(
            nu=i + 1, mu=complex(z), chi=int(chi), seed=complex(near_seed),
            residual=float(abs(det_all[i]) / scale_all[i]),
            clearance=float(clearance)))

    # empirical strip, separation, and circle radii staying clear of the set
    h_emp = max((abs(r.mu.real) for r in records[:10]), default=0.0) + 0.5
    gaps = [abs(records[i + 1].mu - records[i].mu) for i in range(len(records) - 1)]
    delta = 0.5 * min(gaps) if gaps else 1.0
    moduli = sorted({round(abs(r.mu), 8) for r in records})
    shells = ([0.0] if zero_chi else []) + moduli
    radii, counts_ = [], []
    for lo, hi in zip(shells[:-1], shells[1:]):
        r = 0.5 * (lo + hi)
        dist = min(abs(r - abs(p.mu)) for p in records)
        if zero_chi:
            dist = min(dist, r)
        if dist >= min(delta, 0.45 * (hi - lo)):
            total = zero_chi + sum(rec.chi for rec in records if abs(rec.mu) < r)
            radii.append(r)
            counts_.append(total)
    meta = SpectrumMeta(h=float(h_emp), delta=float(delta), radii=tuple(radii),
                        counts=tuple(counts_), zero_multiplicity=int(zero_chi),
                        complete=bool(complete), searched_box=(float(h0), float(im_max)))
    return records, meta


def _band_scan(spec, x_lo, x_hi, y_lo, y_hi, kind, n_steps, band_h=1.0,
               spacing=0.11):
    """Split the strip into horizontal bands and count zeros per band.

    The whole boundary lattice (two vertical edges plus every cut) is
    evaluated in a single propagation; band windings then come from cached
    values. Returns (bands, ok) where bands are (box, winding) pairs with
    winding >= 1 and ok reports whether every count settled.
    """
    n_bands = max(1, int(np.ceil((y_hi - y_lo) / band_h)))
    y_cut = np.linspace(y_lo, y_hi, n_bands + 1)
    nx = max(8, int(np.ceil((x_hi - x_lo) / spacing)))
    ny = max(8, int(np.ceil((y_cut[1] - y_cut[0]) / spacing)))
    xs = np.linspace(x_lo, x_hi, nx + 1)
    ys_band = [np.linspace(y_cut[k], y_cut[k + 1], ny + 1) for k in range(n_bands)]

    cuts = [xs + 1j * yc for yc in y_cut]                     # left -> right
    right = [x_hi + 1j * yb for yb in ys_band]                # bottom -> top
    left = [x_lo + 1j * yb for yb in ys_band]
    ev = _BatchDet(spec, kind, n_steps)
    blocks = cuts + right + left
    sizes = [len(b) for b in blocks]
    det, scale = ev(np.concatenate(blocks))
    dets = _split(det, sizes)
    scales = _split(scale, sizes)
    cut_d = dets[:n_bands + 1]
    right_d = dets[n_bands + 1:2 * n_bands + 1]
    left_d = dets[2 * n_bands + 1:]

    # a cut through a zero ruins both adjacent bands; shift just that cut
    band_h_eff = y_cut[1] - y_cut[0] if n_bands else band_h
    for k in range(n_bands + 1):
        for shift in (0.17, -0.23, 0.31, -0.37):
            rel = np.abs(cut_d[k]) / scales[k]
            if float(np.min(rel)) >= 1e-4:
                break
            if 0 < k < n_bands:
                y_cut[k] = y_cut[k] + shift * band_h_eff
            else:
                y_cut[k] = y_cut[k] - abs(shift) * band_h_eff * (1 if k == 0 else -1)
            new_line = xs + 1j * y_cut[k]
            cut_d[k], scales[k] = ev(new_line)
            if k > 0:
                ys_band[k - 1] = np.linspace(y_cut[k - 1], y_cut[k], ny + 1)
                right_d[k - 1], scales[n_bands + 1 + k - 1] = ev(
                    x_hi + 1j * ys_band[k - 1])
                left_d[k - 1], scales[2 * n_bands + 1 + k - 1] = ev(
                    x_lo + 1j * ys_band[k - 1])
            if k < n_bands:
                ys_band[k] = np.linspace(y_cut[k], y_cut[k + 1], ny + 1)
                right_d[k], scales[n_bands + 1 + k] = ev(x_hi + 1j * ys_band[k])
                left_d[k], scales[2 * n_bands + 1 + k] = ev(x_lo + 1j * ys_band[k])

    bands = []
    ok = True
    for k in range(n_bands):
        loop_d = np.concatenate([
            cut_d[k], right_d[k][1:], cut_d[k + 1][::-1][1:], left_d[k][::-1][1:]])
        loop_s = np.concatenate([
            scales[k], scales[n_bands + 1 + k][1:],
            scales[k + 1][::-1][1:], scales[2 * n_bands + 1 + k][::-1][1:]])
        rel = np.abs(loop_d) / loop_s
        ph = np.unwrap(np.angle(loop_d))
        gaps = np.abs(np.diff(ph))
        w = (ph[-1] - ph[0]) / (2 * np.pi)
        wi = int(np.round(w))
        box = (x_lo, x_hi, y_cut[k], y_cut[k + 1])
        if (float(np.min(rel)) < 1e-4 or abs(w - wi) > 0.2
                or float(np.max(gaps)) > 0.5 * np.pi):
            # fall back to the robust nudging path for this band only
            try:
                wi, box = _rect_winding_nudged(spec, box, ev)
            except SingularParameterError:
                ok = False
                continue
        if wi:
            bands.append((box, wi))
    return bands, ok


def _rect_winding_nudged(spec, box, ev):
    x0, x1, y0, y1 = box
    last = None
    for nd in (0.0, 0.043, -0.067, 0.091, -0.113, 0.137):
        bb = (x0 - nd * (x1 - x0), x1 + nd * (x1 - x0),
              y0 - nd * (y1 - y0), y1 + nd * (y1 - y0))
        w = _windings_many(ev, [_rect_fun(*bb)], [_rect_n0(bb)], guard=1e-4)[0]
        if w is not None:
            return w, bb
        last = SingularParameterError(f"winding unreliable on {bb}")
    raise last


def _sweep(spec, h0, im_max, kind, per_mu, max_boxes):
    """Band scan of the strip, then subdivision inside the nonzero bands."""
    # odd offsets keep the outer edges off the imaginary axis where zeros live
    x_lo, x_hi = -h0 - 0.0173, h0 + 0.0193
    y_lo, y_hi = -im_max - 0.0137, im_max + 0.0117
    ev = _BatchDet(spec, kind, _steps_for_winding(max(h0, im_max) + 1.0))
    bands, complete = _band_scan(spec, x_lo, x_hi, y_lo, y_hi, kind,
                                 _steps_for_winding(max(h0, im_max) + 1.0))
    clusters = []
    level = []
    boxes_used = 0

    def accept_or_split(box, w, nxt):
        x0, x1, y0, y1 = box
        wx, wy = x1 - x0, y1 - y0
        if (w <= 2 and max(wx, wy) <= 0.6) or max(wx, wy) <= 0.05:
            clusters.append((box, w))
        elif wy >= wx:
            ym = y0 + 0.483 * wy
            nxt.append((x0, x1, y0, ym))
            nxt.append((x0, x1, ym, y1))
        else:
            xm = x0 + 0.516 * wx
            nxt.append((x0, xm, y0, y1))
            nxt.append((xm, x1, y0, y1))

    for box, w in bands:
        accept_or_split(box, w, level)

    while level:
        boxes_used += len(level)
        if boxes_used > max_boxes:
            complete = False
            break
        ws = _windings_many(ev, [_rect_fun(*b) for b in level],
                            [_rect_n0(b) for b in level], guard=1e-4)
        # nudge-retry the unreliable boxes one by one, slightly enlarged
        boxes = list(level)
        for i, w in enumerate(ws):
            if w is not None:
                continue
            try:
                ws[i], boxes[i] = _rect_winding_nudged(spec, boxes[i], ev)
            except SingularParameterError:
                ws[i] = None
                complete = False
        nxt = []
        for box, w in zip(boxes, ws):
            if w:
                accept_or_split(box, w, nxt)
        level = nxt

    found_raw, ok = _refine_clusters(spec, clusters, kind, per_mu)
    complete = complete and ok

    found = []
    zero_chi = 0
    for z, chi in found_raw:
        if abs(z) <= ZERO_GROUP_TOL:
            zero_chi = max(zero_chi, chi)
        else:
            found.append((z, chi))

    # merge duplicate claims from adjacent (nudged) boxes
    merged = []
    for z, chi in sorted(found, key=lambda it: _sort_key(it[0])):
        for k, (zm, cm) in enumerate(merged):
            if abs(zm - z) < 1e-5 * (1 + abs(z)):
                merged[k] = (zm, max(cm, chi))
                break
        else:
            merged.append((z, chi))
    return merged, zero_chi, complete
