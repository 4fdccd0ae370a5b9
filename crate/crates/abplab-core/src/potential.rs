//! Discrete potential theory on uniform grids over boxes in one and two
//! dimensions: sup-convolution by the exact parabola-envelope transform,
//! upper/lower contact sets with certified support planes, Hessian stencils,
//! Alexandrov-type interior bounds, and semiconvexity measurement.
//!
//! Grids may carry a disk mask; masked-out nodes keep their stored values
//! but are ignored by contact sets, extrema, and integrals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::rng::CounterRng;
use crate::symmat::SymMat;

/// Relative certification band for contact flags and their support planes.
pub const CONTACT_BAND: f64 = 1e-9;

/// Scalar function sampled on a uniform tensor grid over a box.
///
/// Values are stored row-major with axis 0 outermost. The boundary/interior
/// partition is derived on demand: a node is boundary when it is active and
/// either sits on a box face or has an inactive axis neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mask: Option<Vec<bool>>,
}

impl GridFn {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let d = lower.len();
        if !(d == 1 || d == 2) {
            return Err(Error::Dimension(format!("grid dimension must be 1 or 2, got {d}")));
        }
        if upper.len() != d || shape.len() != d {
            return Err(Error::Dimension(format!(
                "box corners and shape must all have {d} entries"
            )));
        }
        let mut total = 1usize;
        for a in 0..d {
            if shape[a] < 3 {
                return Err(Error::Argument(format!(
                    "axis {a} has {} nodes, need at least 3",
                    shape[a]
                )));
            }
            if !(upper[a] > lower[a]) || !lower[a].is_finite() || !upper[a].is_finite() {
                return Err(Error::Argument(format!(
                    "axis {a} box [{}, {}] is not a finite nonempty interval",
                    lower[a], upper[a]
                )));
            }
            total *= shape[a];
        }
        if values.len() != total {
            return Err(Error::Dimension(format!(
                "expected {total} node values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("grid values must be finite".into()));
        }
        Ok(GridFn { lower, upper, shape, values, mask: None })
    }

    /// Samples a closure at every node.
    pub fn from_fn(
        lower: Vec<f64>,
        upper: Vec<f64>,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let total = shape_total(&shape);
        let probe = GridFn::new(lower, upper, shape, vec![0.0; total])?;
        let mut values = vec![0.0; probe.node_count()];
        let mut x = [0.0; 2];
        for (idx, v) in values.iter_mut().enumerate() {
            probe.coord(idx, &mut x);
            *v = f(&x[..probe.dim()]);
        }
        Ok(GridFn { values, ..probe })
    }

    /// Restricts the active node set to the closed ball around `center`.
    ///
    /// Stored values outside the ball are kept but become invisible to
    /// extrema, contact sets, and integrals.
    pub fn with_disk_mask(mut self, center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "mask center has {} coordinates, grid is {}-dimensional",
                center.len(),
                self.dim()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Argument(format!("mask radius must be positive, got {radius}")));
        }
        let r2 = radius * radius;
        // absorb float dust so nodes exactly on the rim stay active
        let tol = 1e-12 * (1.0 + r2);
        let mut mask = vec![false; self.node_count()];
        let mut x = [0.0; 2];
        for (idx, m) in mask.iter_mut().enumerate() {
            self.coord(idx, &mut x);
            let d2: f64 = x[..self.dim()]
                .iter()
                .zip(center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum();
            *m = d2 <= r2 + tol;
        }
        self.mask = Some(mask);
        let mut interior = 0usize;
        let mut boundary = 0usize;
        for idx in 0..self.node_count() {
            if self.is_interior(idx) {
                interior += 1;
            } else if self.is_boundary(idx) {
                boundary += 1;
            }
        }
        if interior == 0 || boundary == 0 {
            return Err(Error::Argument(format!(
                "disk mask leaves {interior} interior and {boundary} boundary nodes; \
                 the radius is too small for this grid"
            )));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Product of the axis spacings, the volume weight of one node.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Same geometry and mask, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "expected {} node values, got {}",
                self.node_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("grid values must be finite".into()));
        }
        Ok(GridFn { values, ..self.clone() })
    }

    /// Axis indices of a node; the second component is 0 in one dimension.
    pub fn axes_of(&self, idx: usize) -> (usize, usize) {
        if self.dim() == 1 {
            (idx, 0)
        } else {
            (idx / self.shape[1], idx % self.shape[1])
        }
    }

    pub fn index_of(&self, i: usize, j: usize) -> usize {
        if self.dim() == 1 {
            i
        } else {
            i * self.shape[1] + j
        }
    }

    /// Writes the node's physical coordinates into `out[..dim]`.
    pub fn coord(&self, idx: usize, out: &mut [f64; 2]) {
        let (i, j) = self.axes_of(idx);
        out[0] = self.lower[0] + i as f64 * self.spacing(0);
        if self.dim() == 2 {
            out[1] = self.lower[1] + j as f64 * self.spacing(1);
        }
    }

    fn neighbor(&self, idx: usize, axis: usize, step: isize) -> Option<usize> {
        let (i, j) = self.axes_of(idx);
        let pos = if axis == 0 { i } else { j } as isize + step;
        if pos < 0 || pos >= self.shape[axis] as isize {
            return None;
        }
        Some(if axis == 0 {
            self.index_of(pos as usize, j)
        } else {
            self.index_of(i, pos as usize)
        })
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[idx])
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        if !self.is_active(idx) {
            return false;
        }
        let (i, j) = self.axes_of(idx);
        if i == 0 || i == self.shape[0] - 1 {
            return true;
        }
        if self.dim() == 2 && (j == 0 || j == self.shape[1] - 1) {
            return true;
        }
        if self.mask.is_some() {
            for axis in 0..self.dim() {
                for step in [-1, 1] {
                    match self.neighbor(idx, axis, step) {
                        Some(nb) if self.is_active(nb) => {}
                        _ => return true,
                    }
                }
            }
        }
        false
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.is_active(idx) && !self.is_boundary(idx)
    }

    pub fn active_count(&self) -> usize {
        (0..self.node_count()).filter(|&i| self.is_active(i)).count()
    }

    /// (min, max) of the values over interior nodes.
    pub fn interior_extrema(&self) -> (f64, f64) {
        self.extrema_where(|idx| self.is_interior(idx))
    }

    /// (min, max) of the values over boundary nodes.
    pub fn boundary_extrema(&self) -> (f64, f64) {
        self.extrema_where(|idx| self.is_boundary(idx))
    }

    fn extrema_where(&self, keep: impl Fn(usize) -> bool) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for idx in 0..self.node_count() {
            if keep(idx) {
                lo = lo.min(self.values[idx]);
                hi = hi.max(self.values[idx]);
            }
        }
        (lo, hi)
    }

    /// Domain diameter: the box diagonal when unmasked, else the exact
    /// diameter of the active node set (attained at per-line extremes).
    pub fn diameter(&self) -> f64 {
        if self.mask.is_none() {
            let s: f64 = (0..self.dim())
                .map(|a| (self.upper[a] - self.lower[a]) * (self.upper[a] - self.lower[a]))
                .sum();
            return math::sqrt(s);
        }
        // hull vertices of the active set are per-line extremes, so the
        // diameter is attained among them
        let mut cands: Vec<usize> = Vec::new();
        for i in 0..self.shape[0] {
            let cols = if self.dim() == 1 { 1 } else { self.shape[1] };
            let mut first = None;
            let mut last = None;
            for j in 0..cols {
                let idx = self.index_of(i, j);
                if self.is_active(idx) {
                    if first.is_none() {
                        first = Some(idx);
                    }
                    last = Some(idx);
                }
            }
            if let Some(f) = first {
                cands.push(f);
            }
            if let Some(l) = last {
                if Some(l) != first {
                    cands.push(l);
                }
            }
        }
        let mut best = 0.0f64;
        let (mut xa, mut xb) = ([0.0; 2], [0.0; 2]);
        for (s, &a) in cands.iter().enumerate() {
            self.coord(a, &mut xa);
            for &b in cands.iter().skip(s + 1) {
                self.coord(b, &mut xb);
                let d2: f64 = (0..self.dim()).map(|k| (xa[k] - xb[k]) * (xa[k] - xb[k])).sum();
                best = best.max(math::sqrt(d2));
            }
        }
        best
    }

    /// Squared Euclidean norm of the node's coordinates.
    pub fn coord_norm_sq(&self, idx: usize) -> f64 {
        let mut x = [0.0; 2];
        self.coord(idx, &mut x);
        x[..self.dim()].iter().map(|v| v * v).sum()
    }
}

fn shape_total(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Bounded noise grid for property tests: i.i.d. values in [-1, 1],
/// deterministic in the seed.
pub fn random_grid_fn(
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    seed: u64,
) -> Result<GridFn> {
    let mut rng = CounterRng::new(seed);
    let values = (0..shape_total(&shape)).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    GridFn::new(lower, upper, shape, values)
}

/// x ↦ max over grid nodes y of w(y) − |y−x|²/(2ε), evaluated at the nodes.
///
/// Computed exactly (up to roundoff) by the separable per-axis upper
/// envelope of parabolas; the transform runs over all stored values, and a
/// mask is carried through untouched.
pub fn sup_convolution(w: &GridFn, eps: f64) -> Result<GridFn> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("sup-convolution needs eps > 0, got {eps}")));
    }
    let mut out = w.values.clone();
    if w.dim() == 1 {
        let a = w.spacing(0) * w.spacing(0) / (2.0 * eps);
        let line = out.clone();
        sup_line(&line, a, &mut out);
    } else {
        let (m0, m1) = (w.shape[0], w.shape[1]);
        let a1 = w.spacing(1) * w.spacing(1) / (2.0 * eps);
        let mut buf = vec![0.0; m1.max(m0)];
        for i in 0..m0 {
            let row = &out[i * m1..(i + 1) * m1];
            sup_line(row, a1, &mut buf[..m1]);
            out[i * m1..(i + 1) * m1].copy_from_slice(&buf[..m1]);
        }
        let a0 = w.spacing(0) * w.spacing(0) / (2.0 * eps);
        let mut col = vec![0.0; m0];
        for j in 0..m1 {
            for i in 0..m0 {
                col[i] = out[i * m1 + j];
            }
            sup_line(&col, a0, &mut buf[..m0]);
            for i in 0..m0 {
                out[i * m1 + j] = buf[..m0][i];
            }
        }
    }
    w.with_values(out)
}

/// 1-D transform in index units: out[i] = max_j vals[j] − a·(i−j)².
///
/// Upper envelope of equal-curvature parabolas; each envelope cell is found
/// by the running-intersection sweep, so the result is the exact maximum up
/// to roundoff in the intersection abscissae.
fn sup_line(vals: &[f64], a: f64, out: &mut [f64]) {
    let m = vals.len();
    debug_assert!(a > 0.0 && out.len() == m);
    // lower envelope of f[j] = -vals[j] + a(x-j)^2
    let mut site = vec![0usize; m];
    let mut z = vec![0.0f64; m + 1];
    let mut k = 0usize;
    site[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let height = |q: usize| -vals[q] + a * (q * q) as f64;
    for q in 1..m {
        let mut s;
        loop {
            let r = site[k];
            s = (height(q) - height(r)) / (2.0 * a * (q - r) as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        site[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        while z[k + 1] < i as f64 {
            k += 1;
        }
        let d = i as f64 - site[k] as f64;
        *o = vals[site[k]] - a * d * d;
    }
}

/// Adds η|x|²/2 nodewise (η ≥ 0 in every intended use; the formula itself
/// is applied as given).
pub fn perturb(w: &GridFn, eta: f64) -> GridFn {
    let values = (0..w.node_count())
        .map(|idx| w.values[idx] + 0.5 * eta * w.coord_norm_sq(idx))
        .collect();
    GridFn { values, ..w.clone() }
}

/// Per-node contact flags with a certified support-plane gradient wherever
/// the flag is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMask {
    dim: usize,
    flags: Vec<bool>,
    gradients: Vec<f64>,
}

impl ContactMask {
    pub fn is_contact(&self, idx: usize) -> bool {
        self.flags[idx]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Support-plane gradient at a flagged node (zeros elsewhere).
    pub fn gradient(&self, idx: usize) -> &[f64] {
        &self.gradients[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Worst violation of the support inequality u(y) ≤ u(x) + ⟨p, y−x⟩ over
/// all active nodes y.
pub fn support_violation(u: &GridFn, at: usize, p: &[f64]) -> f64 {
    let d = u.dim();
    let mut x = [0.0; 2];
    let mut y = [0.0; 2];
    u.coord(at, &mut x);
    let ux = u.values[at];
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..u.node_count() {
        if !u.is_active(idx) {
            continue;
        }
        u.coord(idx, &mut y);
        let mut plane = ux;
        for a in 0..d {
            plane += p[a] * (y[a] - x[a]);
        }
        worst = worst.max(u.values[idx] - plane);
    }
    worst
}

/// Nodes admitting a global affine support from above, with the supporting
/// gradient; computed from the upper concave envelope of the lifted active
/// nodes and re-verified exhaustively before return.
pub fn upper_contact_set(u: &GridFn) -> ContactMask {
    let mut mask = if u.dim() == 1 { upper_contact_1d(u) } else { upper_contact_2d(u) };
    let band = contact_band(u);
    for idx in 0..u.node_count() {
        if mask.flags[idx] {
            let p: Vec<f64> = mask.gradient(idx).to_vec();
            if support_violation(u, idx, &p) > band {
                // roundoff-corrupted certificate: a dropped flag keeps the
                // mask invariant honest
                mask.flags[idx] = false;
                for a in 0..mask.dim {
                    mask.gradients[idx * mask.dim + a] = 0.0;
                }
            }
        }
    }
    mask
}

/// Nodes admitting a global affine support from below: the upper contact
/// set of −v with the gradient sign mapped back.
pub fn lower_contact_set(v: &GridFn) -> ContactMask {
    let neg = GridFn {
        values: v.values.iter().map(|x| -x).collect(),
        ..v.clone()
    };
    let mut mask = upper_contact_set(&neg);
    for g in mask.gradients.iter_mut() {
        *g = -*g;
    }
    mask
}

fn contact_band(u: &GridFn) -> f64 {
    let maxabs = (0..u.node_count())
        .filter(|&i| u.is_active(i))
        .fold(0.0f64, |m, i| m.max(u.values[i].abs()));
    CONTACT_BAND * (1.0 + maxabs)
}

fn upper_contact_1d(u: &GridFn) -> ContactMask {
    let act: Vec<usize> = (0..u.node_count()).filter(|&i| u.is_active(i)).collect();
    let mut x = [0.0; 2];
    let xs: Vec<f64> = act
        .iter()
        .map(|&i| {
            u.coord(i, &mut x);
            x[0]
        })
        .collect();
    let us: Vec<f64> = act.iter().map(|&i| u.values[i]).collect();
    // monotone chain for the concave upper hull: pop while the middle point
    // is at or below the chord, which also absorbs collinear runs
    let mut ch: Vec<usize> = Vec::new();
    for t in 0..act.len() {
        while ch.len() >= 2 {
            let a = ch[ch.len() - 2];
            let b = ch[ch.len() - 1];
            let cross = (xs[b] - xs[a]) * (us[t] - us[a]) - (xs[t] - xs[a]) * (us[b] - us[a]);
            if cross >= 0.0 {
                ch.pop();
            } else {
                break;
            }
        }
        ch.push(t);
    }
    let band = contact_band(u);
    let mut flags = vec![false; u.node_count()];
    let mut gradients = vec![0.0; u.node_count()];
    let mut s = 0usize;
    for t in 0..act.len() {
        if ch.len() == 1 {
            // single active node supports itself with slope 0
            flags[act[t]] = true;
            continue;
        }
        while s + 2 < ch.len() && xs[ch[s + 1]] < xs[t] {
            s += 1;
        }
        let (a, b) = (ch[s], ch[s + 1]);
        let slope = (us[b] - us[a]) / (xs[b] - xs[a]);
        let env = us[a] + slope * (xs[t] - xs[a]);
        if us[t] >= env - band {
            flags[act[t]] = true;
            gradients[act[t]] = slope;
        }
    }
    ContactMask { dim: 1, flags, gradients }
}

/// Plane through three lifted points, as (z0-at-origin-of-p0, gradient).
fn plane_through(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> Option<(f64, f64)> {
    let (a11, a12) = (p1[0] - p0[0], p1[1] - p0[1]);
    let (a21, a22) = (p2[0] - p0[0], p2[1] - p0[1]);
    let det = a11 * a22 - a12 * a21;
    let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
    if det.abs() <= 1e-14 * (1.0 + scale) {
        return None;
    }
    let (b1, b2) = (p1[2] - p0[2], p2[2] - p0[2]);
    Some(((b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det))
}

fn upper_contact_2d(u: &GridFn) -> ContactMask {
    let act: Vec<usize> = (0..u.node_count()).filter(|&i| u.is_active(i)).collect();
    let mut x = [0.0; 2];
    let pts: Vec<[f64; 3]> = act
        .iter()
        .map(|&i| {
            u.coord(i, &mut x);
            [x[0], x[1], u.values[i]]
        })
        .collect();
    let mut flags = vec![false; u.node_count()];
    let mut gradients = vec![0.0; 2 * u.node_count()];

    // coplanar fast path: one common support plane flags every active node
    if let Some((bx, by)) = coplanar_gradient(&pts) {
        for (t, &idx) in act.iter().enumerate() {
            flags[idx] = true;
            gradients[2 * idx] = bx;
            gradients[2 * idx + 1] = by;
            let _ = t;
        }
        return ContactMask { dim: 2, flags, gradients };
    }

    let facets = upper_hull_facets(u, &pts);
    debug_assert!(!facets.is_empty(), "a bounded lifted point set has an upper envelope");
    let band = contact_band(u);
    for (t, &idx) in act.iter().enumerate() {
        let [px, py, pz] = pts[t];
        let mut best = f64::INFINITY;
        let mut grad = (0.0, 0.0);
        for &(n, off) in &facets {
            let v = (off - n[0] * px - n[1] * py) / n[2];
            if v < best {
                best = v;
                grad = (-n[0] / n[2], -n[1] / n[2]);
            }
        }
        if pz >= best - band {
            flags[idx] = true;
            gradients[2 * idx] = grad.0;
            gradients[2 * idx + 1] = grad.1;
        }
    }
    ContactMask { dim: 2, flags, gradients }
}

/// Detects a single plane through all lifted points and returns its
/// gradient.
fn coplanar_gradient(pts: &[[f64; 3]]) -> Option<(f64, f64)> {
    let p0 = pts[0];
    let mut fit = None;
    for i in 1..pts.len() {
        for j in (i + 1)..pts.len().min(i + 64) {
            if let Some(g) = plane_through(p0, pts[i], pts[j]) {
                fit = Some(g);
                break;
            }
        }
        if fit.is_some() {
            break;
        }
    }
    let (bx, by) = fit?;
    let maxz = pts.iter().fold(0.0f64, |m, p| m.max(p[2].abs()));
    let diam = pts.iter().fold(0.0f64, |m, p| {
        m.max((p[0] - p0[0]).abs() + (p[1] - p0[1]).abs())
    });
    let tol = 1e-12 * (1.0 + maxz + (bx.abs() + by.abs()) * diam);
    for p in pts {
        let fitz = p0[2] + bx * (p[0] - p0[0]) + by * (p[1] - p0[1]);
        if (p[2] - fitz).abs() > tol {
            return None;
        }
    }
    Some((bx, by))
}

#[derive(Clone)]
struct Facet {
    v: [usize; 3],
    n: [f64; 3],
    off: f64,
    alive: bool,
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    math::sqrt(dot3(a, a))
}

fn make_facet(pts: &[[f64; 3]], a: usize, b: usize, c: usize, reference: [f64; 3]) -> Option<Facet> {
    let e1 = sub3(pts[b], pts[a]);
    let e2 = sub3(pts[c], pts[a]);
    let mut n = cross3(e1, e2);
    let len = norm3(n);
    if len <= 1e-13 * norm3(e1) * norm3(e2) {
        return None;
    }
    for v in n.iter_mut() {
        *v /= len;
    }
    let mut off = dot3(n, pts[a]);
    if dot3(n, reference) > off {
        for v in n.iter_mut() {
            *v = -*v;
        }
        off = -off;
    }
    Some(Facet { v: [a, b, c], n, off, alive: true })
}

fn facet_edges(f: &Facet) -> [(usize, usize); 3] {
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    [key(f.v[0], f.v[1]), key(f.v[1], f.v[2]), key(f.v[2], f.v[0])]
}

/// Incremental lifted hull: sentinels far below the box corners seed a
/// non-degenerate start, and only facets with upward normals are returned
/// as (unit normal, offset) support planes.
fn upper_hull_facets(u: &GridFn, real: &[[f64; 3]]) -> Vec<([f64; 3], f64)> {
    let (zmin, zmax) = real.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p[2]), hi.max(p[2]))
    });
    let depth = zmin - (1.0 + (zmax - zmin));
    let (lo, hi) = u.bounds();
    let mut pts: Vec<[f64; 3]> = vec![
        [lo[0], lo[1], depth],
        [hi[0], lo[1], depth],
        [hi[0], hi[1], depth],
        [lo[0], hi[1], depth],
    ];
    pts.extend_from_slice(real);

    let diam_xy = (hi[0] - lo[0]).abs() + (hi[1] - lo[1]).abs();
    let eps = 1e-12 * (1.0 + diam_xy + (zmax - zmin) + (zmin - depth));

    let reference = [
        (pts[0][0] + pts[1][0] + pts[2][0] + pts[4][0]) / 4.0,
        (pts[0][1] + pts[1][1] + pts[2][1] + pts[4][1]) / 4.0,
        (pts[0][2] + pts[1][2] + pts[2][2] + pts[4][2]) / 4.0,
    ];
    let mut facets: Vec<Facet> = Vec::new();
    for (a, b, c) in [(0, 1, 2), (0, 1, 4), (1, 2, 4), (2, 0, 4)] {
        facets.push(make_facet(&pts, a, b, c, reference).expect("seed simplex is non-degenerate"));
    }

    let order = core::iter::once(3).chain((5..pts.len()).collect::<Vec<_>>());
    for q in order {
        let qp = pts[q];
        let dist: Vec<f64> = facets
            .iter()
            .map(|f| if f.alive { dot3(f.n, qp) - f.off } else { f64::NEG_INFINITY })
            .collect();
        let mut visible: Vec<bool> = dist.iter().map(|&d| d > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        // absorb coplanar facets adjacent to the visible region so horizon
        // edges are never collinear with q
        let mut vis_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (fi, f) in facets.iter().enumerate() {
            if visible[fi] && f.alive {
                vis_edges.extend(facet_edges(f));
            }
        }
        loop {
            let mut changed = false;
            for (fi, f) in facets.iter().enumerate() {
                if !f.alive || visible[fi] || dist[fi].abs() > eps {
                    continue;
                }
                if facet_edges(f).iter().any(|e| vis_edges.contains(e)) {
                    visible[fi] = true;
                    vis_edges.extend(facet_edges(f));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut edge_count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (fi, f) in facets.iter().enumerate() {
            if visible[fi] && f.alive {
                for e in facet_edges(f) {
                    *edge_count.entry(e).or_insert(0) += 1;
                }
            }
        }
        for (fi, f) in facets.iter_mut().enumerate() {
            if visible[fi] && f.alive {
                f.alive = false;
            }
        }
        let mut fresh: Vec<Facet> = Vec::new();
        for (&(a, b), &cnt) in edge_count.iter() {
            if cnt == 1 {
                if let Some(f) = make_facet(&pts, a, b, q, reference) {
                    fresh.push(f);
                }
            }
        }
        facets.extend(fresh);
    }

    facets
        .iter()
        .filter(|f| f.alive && f.n[2] > 1e-9)
        .map(|f| (f.n, f.off))
        .collect()
}

/// Independent contact test over candidate support gradients in [−L, L]^d;
/// flags only, no certificates.
///
/// A node is flagged when some gradient p keeps
/// max_y (u(y) − u(x) − ⟨p, y−x⟩) within the certification band. That
/// violation is a max of affine functions of p, hence convex, so after a
/// dense lattice sweep the search is finished by convex cuts (bisection on
/// the subgradient sign in 1-D, the central-cut ellipsoid method in 2-D),
/// which cannot stall in the narrow piecewise-linear valleys that defeat
/// pattern refinement. Because the minimum of the violation over all p
/// equals the envelope gap, a node the hull rejects can never be flagged
/// here.
pub fn contact_oracle(u: &GridFn) -> Vec<bool> {
    let d = u.dim();
    let act: Vec<usize> = (0..u.node_count()).filter(|&i| u.is_active(i)).collect();
    let mut xbuf = [0.0; 2];
    let coords: Vec<[f64; 2]> = act
        .iter()
        .map(|&i| {
            u.coord(i, &mut xbuf);
            xbuf
        })
        .collect();
    let vals: Vec<f64> = act.iter().map(|&i| u.values[i]).collect();
    let (vmin, vmax) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let radius = 4.0 * (vmax - vmin) / u.min_spacing() + 1.0;
    let band = contact_band(u);

    let mut flags = vec![false; u.node_count()];
    for (t, &idx) in act.iter().enumerate() {
        let xt = coords[t];
        let vt = vals[t];
        // worst violation at gradient p, pruned against the running best
        let phi = |p: &[f64; 2], cutoff: f64| -> f64 {
            let mut worst = f64::NEG_INFINITY;
            for (s, xs) in coords.iter().enumerate() {
                let mut plane = vt;
                for a in 0..d {
                    plane += p[a] * (xs[a] - xt[a]);
                }
                worst = worst.max(vals[s] - plane);
                if worst > cutoff {
                    break;
                }
            }
            worst
        };
        // unpruned violation plus the maximizing node, whose offset is an
        // exact subgradient
        let phi_grad = |p: &[f64; 2]| -> (f64, usize) {
            let mut worst = f64::NEG_INFINITY;
            let mut at = 0;
            for (s, xs) in coords.iter().enumerate() {
                let mut plane = vt;
                for a in 0..d {
                    plane += p[a] * (xs[a] - xt[a]);
                }
                if vals[s] - plane > worst {
                    worst = vals[s] - plane;
                    at = s;
                }
            }
            (worst, at)
        };

        let mut best = phi(&[0.0, 0.0], f64::INFINITY);
        let steps = 16i64;
        for si in -steps..=steps {
            let jrange = if d == 2 { -steps..=steps } else { 0..=0 };
            for sj in jrange {
                if best <= band {
                    break;
                }
                let p = [
                    radius * si as f64 / steps as f64,
                    radius * sj as f64 / steps as f64,
                ];
                let v = phi(&p, best);
                if v < best {
                    best = v;
                }
            }
        }

        if best > band && d == 1 {
            let (mut lo, mut hi) = (-radius, radius);
            for _ in 0..200 {
                if best <= band {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let (v, s_at) = phi_grad(&[mid, 0.0]);
                best = best.min(v);
                let g = xt[0] - coords[s_at][0];
                if g == 0.0 {
                    break;
                }
                if g > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        } else if best > band {
            // ellipsoid {c + Fz : |z| <= 1} kept in square-root form: the
            // factored update preserves positive semidefiniteness exactly,
            // where the direct B-matrix recursion loses it to cancellation
            // once the ellipsoid gets eccentric
            let sigma = 1.0 - math::sqrt(1.0 / 3.0);
            let growth = math::sqrt(4.0 / 3.0);
            let r0 = radius * math::sqrt(2.0);
            let lip = coords
                .iter()
                .map(|xs| {
                    math::sqrt(
                        (xs[0] - xt[0]) * (xs[0] - xt[0]) + (xs[1] - xt[1]) * (xs[1] - xt[1]),
                    )
                })
                .fold(0.0f64, f64::max);
            let mut c = [0.0f64; 2];
            let mut fac = [[r0, 0.0], [0.0, r0]];
            for _ in 0..600 {
                let (v, s_at) = phi_grad(&c);
                best = best.min(v);
                if best <= band {
                    break;
                }
                // the minimizer stays inside the ellipsoid, so once the
                // Lipschitz cone over it cannot dip to the band the node is
                // settled non-contact
                let reach = lip
                    * math::sqrt(
                        fac[0][0] * fac[0][0]
                            + fac[0][1] * fac[0][1]
                            + fac[1][0] * fac[1][0]
                            + fac[1][1] * fac[1][1],
                    );
                if v - reach > band {
                    break;
                }
                let g = [xt[0] - coords[s_at][0], xt[1] - coords[s_at][1]];
                let w = [
                    fac[0][0] * g[0] + fac[1][0] * g[1],
                    fac[0][1] * g[0] + fac[1][1] * g[1],
                ];
                let gbg = w[0] * w[0] + w[1] * w[1];
                if !(gbg > 0.0) {
                    break;
                }
                let wn = math::sqrt(gbg);
                let wh = [w[0] / wn, w[1] / wn];
                c[0] -= (fac[0][0] * wh[0] + fac[0][1] * wh[1]) / 3.0;
                c[1] -= (fac[1][0] * wh[0] + fac[1][1] * wh[1]) / 3.0;
                for row in fac.iter_mut() {
                    let along = row[0] * wh[0] + row[1] * wh[1];
                    row[0] = growth * (row[0] - sigma * along * wh[0]);
                    row[1] = growth * (row[1] - sigma * along * wh[1]);
                }
            }
        }
        flags[idx] = best <= band;
    }
    flags
}

/// Centered second-difference Hessian at a node, exact on quadratics; None
/// when the node or any stencil neighbor is missing or inactive.
pub fn hessian_stencil(u: &GridFn, idx: usize) -> Option<SymMat> {
    if !u.is_active(idx) {
        return None;
    }
    let d = u.dim();
    let grab = |axis: usize, step: isize| -> Option<f64> {
        let nb = u.neighbor(idx, axis, step)?;
        if u.is_active(nb) {
            Some(u.values[nb])
        } else {
            None
        }
    };
    let c = u.values[idx];
    if d == 1 {
        let h = u.spacing(0);
        let v = (grab(0, -1)? - 2.0 * c + grab(0, 1)?) / (h * h);
        return Some(SymMat::diag(&[v]));
    }
    let (h0, h1) = (u.spacing(0), u.spacing(1));
    let dxx = (grab(0, -1)? - 2.0 * c + grab(0, 1)?) / (h0 * h0);
    let dyy = (grab(1, -1)? - 2.0 * c + grab(1, 1)?) / (h1 * h1);
    let corner = |si: isize, sj: isize| -> Option<f64> {
        let nb = u.neighbor(idx, 0, si)?;
        let nb = u.neighbor(nb, 1, sj)?;
        if u.is_active(nb) {
            Some(u.values[nb])
        } else {
            None
        }
    };
    let dxy = (corner(1, 1)? + corner(-1, -1)? - corner(1, -1)? - corner(-1, 1)?) / (4.0 * h0 * h1);
    let mut m = SymMat::zero(2);
    m.set(0, 0, dxx);
    m.set(1, 1, dyy);
    m.set(0, 1, dxy);
    Some(m)
}

/// det of the PSD part of −H for the 1×1 and 2×2 stencil matrices, in
/// closed form.
fn det_psd_neg(h: &SymMat) -> f64 {
    if h.n == 1 {
        return (-h.get(0, 0)).max(0.0);
    }
    let (a, b, c) = (-h.get(0, 0), -h.get(0, 1), -h.get(1, 1));
    let mean = 0.5 * (a + c);
    let r = math::sqrt(0.25 * (a - c) * (a - c) + b * b);
    (mean - r).max(0.0) * (mean + r).max(0.0)
}

fn det_abs(h: &SymMat) -> f64 {
    if h.n == 1 {
        return h.get(0, 0).abs();
    }
    (h.get(0, 0) * h.get(1, 1) - h.get(0, 1) * h.get(0, 1)).abs()
}

/// Volume of the unit ball in d dimensions (d ∈ {1, 2}).
pub fn unit_ball_volume(d: usize) -> f64 {
    if d == 1 {
        2.0
    } else {
        core::f64::consts::PI
    }
}

/// Outcome of a one-sided Alexandrov bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// contact nodes (interior or boundary)
    pub contact_nodes: usize,
    /// contact nodes whose full stencil entered the integral
    pub integrated_nodes: usize,
}

/// Interior max of u against boundary max plus the contact-set curvature
/// integral:
/// rhs = max_∂ u + (diam/|B₁|^{1/d})·(Σ det(psd(−D²u))·∏h)^{1/d}
/// summed over interior upper-contact nodes with a full stencil.
pub fn alexandrov_check(u: &GridFn) -> BoundRecord {
    let mask = upper_contact_set(u);
    let (_, lhs) = u.interior_extrema();
    let (_, bd_max) = u.boundary_extrema();
    let d = u.dim();
    let vol = u.cell_volume();
    let mut integral = 0.0;
    let mut contact_nodes = 0usize;
    let mut integrated = 0usize;
    for idx in 0..u.node_count() {
        if !mask.is_contact(idx) {
            continue;
        }
        contact_nodes += 1;
        if !u.is_interior(idx) {
            continue;
        }
        if let Some(h) = hessian_stencil(u, idx) {
            integral += det_psd_neg(&h) * vol;
            integrated += 1;
        }
    }
    let rhs = bd_max
        + u.diameter() / math::nth_root(unit_ball_volume(d), d as u32)
            * math::nth_root(integral, d as u32);
    BoundRecord {
        lhs,
        rhs,
        slack: rhs - lhs,
        contact_nodes,
        integrated_nodes: integrated,
    }
}

/// Dual bound for the interior min: `alexandrov_check` applied to −v with
/// the signs mapped back, so lhs is the interior min and rhs the lower
/// bound.
pub fn alexandrov_lower_check(v: &GridFn) -> BoundRecord {
    let neg = GridFn {
        values: v.values.iter().map(|x| -x).collect(),
        ..v.clone()
    };
    let rec = alexandrov_check(&neg);
    BoundRecord {
        lhs: -rec.lhs,
        rhs: -rec.rhs,
        slack: rec.slack,
        contact_nodes: rec.contact_nodes,
        integrated_nodes: rec.integrated_nodes,
    }
}

/// Outcome of the two-sided oscillation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscRecord {
    pub osc_interior: f64,
    pub osc_boundary: f64,
    pub error_term: f64,
    pub slack: f64,
    pub upper_contact: usize,
    pub lower_contact: usize,
}

/// osc over interior ≤ osc over boundary +
/// 2^{1−1/d}·(diam/|B₁|^{1/d})·(Σ |det D²w|·∏h)^{1/d}, the sum running over
/// interior upper- or lower-contact nodes with a full stencil.
pub fn oscillation_c11_check(w: &GridFn) -> OscRecord {
    let up = upper_contact_set(w);
    let lo = lower_contact_set(w);
    let (imin, imax) = w.interior_extrema();
    let (bmin, bmax) = w.boundary_extrema();
    let d = w.dim();
    let vol = w.cell_volume();
    let mut integral = 0.0;
    for idx in 0..w.node_count() {
        if !w.is_interior(idx) || !(up.is_contact(idx) || lo.is_contact(idx)) {
            continue;
        }
        if let Some(h) = hessian_stencil(w, idx) {
            integral += det_abs(&h) * vol;
        }
    }
    let factor = math::powf(2.0, 1.0 - 1.0 / d as f64);
    let error_term = factor * w.diameter() / math::nth_root(unit_ball_volume(d), d as u32)
        * math::nth_root(integral, d as u32);
    let osc_interior = imax - imin;
    let osc_boundary = bmax - bmin;
    OscRecord {
        osc_interior,
        osc_boundary,
        error_term,
        slack: osc_boundary + error_term - osc_interior,
        upper_contact: up.count(),
        lower_contact: lo.count(),
    }
}

/// Smallest λ ≥ 0 making every axis-aligned and diagonal centered second
/// difference of u + λ|x|²/2 nonnegative.
pub fn semiconvexity_modulus(u: &GridFn) -> f64 {
    let d = u.dim();
    let mut worst = 0.0f64;
    let mut dirs: Vec<(isize, isize, f64)> = Vec::new();
    let h0 = u.spacing(0);
    dirs.push((1, 0, h0 * h0));
    if d == 2 {
        let h1 = u.spacing(1);
        dirs.push((0, 1, h1 * h1));
        dirs.push((1, 1, h0 * h0 + h1 * h1));
        dirs.push((1, -1, h0 * h0 + h1 * h1));
    }
    let step = |idx: usize, si: isize, sj: isize| -> Option<f64> {
        let mut nb = u.neighbor(idx, 0, si)?;
        if sj != 0 {
            nb = u.neighbor(nb, 1, sj)?;
        }
        if u.is_active(nb) {
            Some(u.values[nb])
        } else {
            None
        }
    };
    for idx in 0..u.node_count() {
        if !u.is_active(idx) {
            continue;
        }
        for &(si, sj, len2) in &dirs {
            if let (Some(fw), Some(bw)) = (step(idx, si, sj), step(idx, -si, -sj)) {
                let second = fw - 2.0 * u.values[idx] + bw;
                worst = worst.max(-second / len2);
            }
        }
    }
    worst
}
