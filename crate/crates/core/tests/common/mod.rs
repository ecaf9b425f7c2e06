//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use fallrisk::cohort::Label;
use fallrisk::encounter::{AssessmentRecord, Demographics, Encounter, Hospital, JhfratItems, Race, Service, Sex};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn encounter(id: &str, daily_targeted: &[u32]) -> Encounter {
    let len = daily_targeted.len() as u32;
    Encounter {
        id: id.to_string(),
        hospital: Hospital::Jhh,
        admit_length_days: len,
        daily_targeted: daily_targeted.to_vec(),
        daily_nontargeted: vec![BTreeSet::new(); daily_targeted.len()],
        assessments: (1..=len)
            .map(|day| AssessmentRecord {
                day,
                items: JhfratItems::empty(),
                jhhlm: None,
                ampac: None,
            })
            .collect(),
        demographics: Demographics {
            age_years: 60,
            sex: Sex::Male,
            race: Race::Other,
            service: Service::Surgery,
            comorbidity_count: 1,
        },
        fall_day: None,
        truncated_at_fall: false,
    }
}

/// Day counts mixing quiet, moderate and busy days so every label occurs.
pub fn random_days(rng: &mut impl Rng, max_len: usize) -> Vec<u32> {
    let len = rng.random_range(2..=max_len);
    let regime = rng.random_range(0..3);
    (0..len)
        .map(|_| match (regime, rng.random_range(0..10)) {
            (0, 0..=7) | (1, 0..=2) => rng.random_range(0..=1),
            (2, 0..=6) => rng.random_range(2..=6),
            _ => rng.random_range(0..=5),
        })
        .collect()
}

/// Brute-force labeler: every pair of window positions is a candidate run,
/// kept if all its windows qualify and its day coverage reaches half the stay.
pub fn brute_force_label(days: &[u32], low_max: u32, high_min: u32) -> Label {
    let l = days.len();
    assert!(l >= 2);
    let mut padded = vec![days[0]];
    padded.extend_from_slice(days);
    padded.push(days[l - 1]);
    // padded index p maps to original day index clamp(p - 1)
    let orig = |p: usize| p.saturating_sub(1).min(l - 1);
    let windows: Vec<(u32, usize, usize)> = (0..padded.len() - 2)
        .map(|k| (padded[k] + padded[k + 1] + padded[k + 2], orig(k), orig(k + 2)))
        .collect();
    let need = l.div_ceil(2);
    let has_run = |ok: &dyn Fn(u32) -> bool| {
        for i in 0..windows.len() {
            for j in i..windows.len() {
                if !windows[i..=j].iter().all(|w| ok(w.0)) {
                    continue;
                }
                let covered: BTreeSet<usize> = windows[i..=j].iter().flat_map(|w| w.1..=w.2).collect();
                if covered.len() >= need {
                    return true;
                }
            }
        }
        false
    };
    let low = has_run(&|s| s <= low_max);
    let high = has_run(&|s| s >= high_min);
    match (low, high) {
        (true, false) => Label::Low,
        (false, true) => Label::High,
        _ => Label::Indeterminate,
    }
}

/// Exhaustive `P(s+ > s-) + P(tie)/2` over all positive/negative pairs.
pub fn pair_auc(scores: &[f64], y: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn balanced_weights(y: &[bool]) -> Vec<f64> {
    let n1 = y.iter().filter(|&&v| v).count() as f64;
    let n0 = y.len() as f64 - n1;
    y.iter().map(|&v| if v { 1.0 / n1 } else { 1.0 / n0 }).collect()
}

/// The two-threshold objective written out directly from scores.
pub fn objective_from_scores(scores: impl Iterator<Item = f64>, y: &[bool], w: &[f64], lambda: f64) -> f64 {
    scores
        .zip(y)
        .zip(w)
        .map(|((s, &yi), &wi)| {
            let t = if yi { 1.0 } else { 0.0 };
            let ll = |thr: f64| t * (s - thr) - softplus(s - thr);
            wi * (lambda * ll(6.0) + (1.0 - lambda) * ll(13.0))
        })
        .sum()
}

/// Random dense instance with labels drawn from a logistic model around `beta`.
pub fn logistic_instance(rng: &mut impl Rng, n: usize, beta: &[f64], offset: f64) -> (Array2<f64>, Vec<bool>) {
    loop {
        let x = Array2::from_shape_fn((n, beta.len()), |_| rng.random::<f64>());
        let y: Vec<bool> = x
            .rows()
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
                rng.random::<f64>() < sigmoid(s - offset)
            })
            .collect();
        let pos = y.iter().filter(|&&v| v).count();
        if pos >= 2 && pos + 2 <= n {
            return (x, y);
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap();
        if p != c {
            for k in 0..n {
                a.swap([c, k], [p, k]);
            }
            b.swap(c, p);
        }
        for r in c + 1..n {
            let f = a[[r, c]] / a[[c, c]];
            for k in c..n {
                a[[r, k]] -= f * a[[c, k]];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[[r, k]] * x[k]).sum();
        x[r] = (b[r] - s) / a[[r, r]];
    }
    x
}

/// Unconstrained weighted logistic regression with fixed offset `-threshold`
/// and no intercept, by iteratively reweighted least squares.
pub fn irls(x: &Array2<f64>, y: &[bool], w: &[f64], threshold: f64) -> Array1<f64> {
    let (n, m) = x.dim();
    let loglik = |b: &Array1<f64>| -> f64 {
        x.dot(b)
            .iter()
            .zip(y)
            .zip(w)
            .map(|((&s, &yi), &wi)| wi * (if yi { s - threshold } else { 0.0 } - softplus(s - threshold)))
            .sum()
    };
    let mut beta = Array1::<f64>::zeros(m);
    for _ in 0..200 {
        let s = x.dot(&beta);
        let mut h = Array2::<f64>::zeros((m, m));
        let mut g = Array1::<f64>::zeros(m);
        for i in 0..n {
            let p = sigmoid(s[i] - threshold);
            let t = if y[i] { 1.0 } else { 0.0 };
            let xi = x.row(i);
            for a in 0..m {
                g[a] += w[i] * (t - p) * xi[a];
                for b in 0..m {
                    h[[a, b]] += w[i] * p * (1.0 - p) * xi[a] * xi[b];
                }
            }
        }
        let mut step = solve_dense(h, g);
        // step halving keeps the likelihood increasing far from the optimum
        let start = loglik(&beta);
        while loglik(&(&beta + &step)) < start && step.iter().any(|v| v.abs() > 1e-15) {
            step *= 0.5;
        }
        beta += &step;
        if step.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
    }
    beta
}

/// Exact maximum of a two-column objective over the grid `{0, h, ..., 20}^2`,
/// optionally restricted to `b0 <= b1`. Each grid column is concave in `b1`,
/// so the inner maximum is located by bisection on forward differences.
pub fn grid_max_2d(
    f: &dyn Fn(f64, f64) -> f64,
    steps: usize,
    h: f64,
    ordered: bool,
) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        let b0 = i as f64 * h;
        let lo_start = if ordered { i } else { 0 };
        let (mut lo, mut hi) = (lo_start, steps);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if f(b0, (mid + 1) as f64 * h) > f(b0, mid as f64 * h) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let v = f(b0, lo as f64 * h);
        if v > best.0 {
            best = (v, b0, lo as f64 * h);
        }
    }
    best
}

/// Maximum over a fine grid of half-width `radius` around `(c0, c1)`, clipped
/// to the feasible region.
pub fn local_grid_max(
    f: &dyn Fn(f64, f64) -> f64,
    center: (f64, f64),
    radius: f64,
    steps: usize,
    ordered: bool,
) -> (f64, f64, f64) {
    let h = 2.0 * radius / steps as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        let b0 = center.0 - radius + i as f64 * h;
        if !(0.0..=20.0).contains(&b0) {
            continue;
        }
        for j in 0..=steps {
            let b1 = center.1 - radius + j as f64 * h;
            if !(0.0..=20.0).contains(&b1) || (ordered && b0 > b1) {
                continue;
            }
            let v = f(b0, b1);
            if v > best.0 {
                best = (v, b0, b1);
            }
        }
    }
    best
}
