//! Reference implementations used to check the engine. Each one favors the
//! most direct formulation over speed.
#![allow(dead_code)]

use std::cmp::Ordering;

/// Exact fraction with a positive denominator.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den > 0);
        Ratio { num, den }
    }

    fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.num, self.den * o.den)
    }

    fn cmp(self, o: Ratio) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

fn counts(y: &[f64]) -> (i128, i128) {
    let fraud = y.iter().filter(|&&v| v > 0.5).count() as i128;
    (fraud, y.len() as i128 - fraud)
}

/// Gini impurity `1 - p1^2 - p0^2` as an exact fraction.
fn gini_exact(y: &[f64]) -> Ratio {
    if y.is_empty() {
        return Ratio::new(0, 1);
    }
    let (f, l) = counts(y);
    let n = f + l;
    Ratio::new(n * n - f * f - l * l, n * n)
}

fn gini_f64(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let (f, l) = counts(y);
    let n = (f + l) as f64;
    let p = f as f64 / n;
    let q = l as f64 / n;
    1.0 - p * p - q * q
}

/// Best CART split by exhaustive search: every feature, every midpoint between
/// consecutive distinct values, rows with `x <= t` going left. The largest
/// exact gain wins; ties go to the lower feature and then the lower threshold.
/// Returns `(feature, threshold, gain)`.
pub fn brute_force_split(x: &[Vec<f64>], y: &[f64], min_leaf: usize) -> Option<(usize, f64, f64)> {
    let n = y.len();
    let d = x.first().map_or(0, Vec::len);
    let parent = gini_exact(y);
    let mut best: Option<(usize, f64, f64, Ratio)> = None;
    for f in 0..d {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let t = if t >= w[1] { w[0] } else { t };
            let left: Vec<f64> = (0..n).filter(|&i| x[i][f] <= t).map(|i| y[i]).collect();
            let right: Vec<f64> = (0..n).filter(|&i| x[i][f] > t).map(|i| y[i]).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let nn = n as i128;
            let exact = parent
                .sub(Ratio::new(left.len() as i128, nn).mul(gini_exact(&left)))
                .sub(Ratio::new(right.len() as i128, nn).mul(gini_exact(&right)));
            let gain = gini_f64(y)
                - (left.len() as f64 / n as f64) * gini_f64(&left)
                - (right.len() as f64 / n as f64) * gini_f64(&right);
            if best
                .as_ref()
                .is_none_or(|b| exact.cmp(b.3) == Ordering::Greater)
            {
                best = Some((f, t, gain, exact));
            }
        }
    }
    best.map(|(f, t, g, _)| (f, t, g))
}

/// Central differences `(f(p + eps e_i) - f(p - eps e_i)) / 2 eps`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, params: &[f64], eps: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + eps;
            let up = f(&p);
            p[i] = orig - eps;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a - n| / max(|a|, |n|, floor)` over the components.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Indices of the `k` nearest points to `points[i]`, excluding `i`, plus any
/// point tied with the k-th distance.
pub fn knn_with_ties(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| (sq_dist(&points[i], &points[j]), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    let cutoff = d[k - 1].0;
    d.into_iter()
        .filter(|(dist, _)| *dist <= cutoff)
        .map(|(_, j)| j)
        .collect()
}

/// Whether `p` lies on the closed segment from `a` to `b`.
pub fn on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64) -> bool {
    let (axis, span) = a
        .iter()
        .zip(b)
        .map(|(x, y)| y - x)
        .enumerate()
        .max_by(|l, r| l.1.abs().total_cmp(&r.1.abs()))
        .unwrap_or((0, 0.0));
    let close = |x: f64, y: f64| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()));
    if span == 0.0 {
        return p.iter().zip(a).all(|(x, y)| close(*x, *y));
    }
    let u = (p[axis] - a[axis]) / span;
    if !(-tol..=1.0 + tol).contains(&u) {
        return false;
    }
    (0..p.len()).all(|j| close(p[j], a[j] + u * (b[j] - a[j])))
}

/// Whether `p` lies inside the per-feature min/max box of `points`.
pub fn in_bounding_box(p: &[f64], points: &[Vec<f64>], tol: f64) -> bool {
    (0..p.len()).all(|j| {
        let lo = points.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|r| r[j])
            .fold(f64::NEG_INFINITY, f64::max);
        p[j] >= lo - tol && p[j] <= hi + tol
    })
}

/// `100 * sum(w_i p_i)`, raised to `floor` when the anomaly flag is set.
pub fn weighted_score(weights: [f64; 5], probs: [f64; 5], anomalous: bool, floor: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..5 {
        s += weights[i] * probs[i];
    }
    let s = 100.0 * s;
    if anomalous && s < floor {
        floor
    } else {
        s
    }
}
