#![allow(dead_code)]

use std::path::PathBuf;

use fblmnn::dataset::{load_csv, LabelColumn, LabeledDataset};
use fblmnn::feasibility::{pair_weights, triplet_feasibility, TripletWeightTable, DEFAULT_R_CAP};
use fblmnn::linalg::{congruence, psd_sqrt, rank2_extreme_eigs, sym_eig, SymMatrix};
use fblmnn::metric::Metric;
use fblmnn::neighborhood::{build_plan, enumerate_triplets, ImpostorMode, NeighborhoodPlan};
use fblmnn::solver::{fit, fit_with, objective, subgradient, Mode, SolverConfig, UnitWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| normal(rng)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let mut vals = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = normal(rng);
            vals[i * d + j] = v;
            vals[j * d + i] = v;
        }
    }
    SymMatrix::from_fn(d, |i, j| vals[i * d + j])
}

/// `B Bᵀ` for a random `d × rank` matrix `B`.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(d);
    for _ in 0..rank {
        let v = normal_vec(rng, d);
        m.add_outer(1.0, &v);
    }
    m
}

pub fn rank2(a: &[f64], b: &[f64]) -> SymMatrix {
    let mut q = SymMatrix::zeros(a.len());
    q.add_outer(1.0, a);
    q.add_outer(-1.0, b);
    q
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn wine() -> LabeledDataset {
    load_csv(data_path("wine.csv"), &LabelColumn::Index(0), false).unwrap()
}

pub fn iris() -> LabeledDataset {
    load_csv(data_path("iris.csv"), &LabelColumn::Index(4), false).unwrap()
}

pub fn balance() -> LabeledDataset {
    load_csv(data_path("balance.csv"), &LabelColumn::Index(0), false).unwrap()
}

/// Two Gaussian classes with shifted means, `n` points in `d` dimensions.
pub fn random_two_class(rng: &mut ChaCha8Rng, n: usize, d: usize) -> LabeledDataset {
    let shift = normal_vec(rng, d);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let mut x = normal_vec(rng, d);
        if label == 1 {
            for (v, s) in x.iter_mut().zip(&shift) {
                *v += s;
            }
        }
        rows.push(x);
        labels.push(label);
    }
    LabeledDataset::new(rows, labels).unwrap()
}

/// For positive semidefinite `Q`: `λ_k(Q) λ_min(M) ≤ λ_k(QM)` for all `k`.
pub fn psd_product_lower_bound(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let d = rng.random_range(1..=6);
        let size = rng.random_range(1..=d);
        let q = random_psd(&mut rng, d, size);
        let size = rng.random_range(1..=d + 1);
        let m = random_psd(&mut rng, d, size);
        let q_eig = sym_eig(&q).unwrap().values;
        let m_min = sym_eig(&m).unwrap().min();
        let qm = sym_eig(&congruence(&psd_sqrt(&m).unwrap(), &q)).unwrap().values;
        for k in 0..d {
            let gap = q_eig[k] * m_min - qm[k];
            worst = worst.max(gap);
            if gap > 1e-8 {
                return Err(format!("trial {t}, k = {k}: λ_k(Q)λ_min(M) exceeds λ_k(QM) by {gap:e}"));
            }
        }
    }
    Ok(format!("{trials} trials, max violation {worst:.2e}"))
}

/// For symmetric `Q`: each `λ_k(QM)` lies between `λ_k(Q) λ_min(M)` and
/// `λ_k(Q) λ_max(M)`, which reduces to the one-sided bound for `λ_k(Q) ≥ 0`.
pub fn eigenvalue_product_bounds(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for t in 0..trials {
        let d = rng.random_range(1..=6);
        let q = random_symmetric(&mut rng, d);
        let size = rng.random_range(1..=d + 1);
        let m = random_psd(&mut rng, d, size);
        let q_eig = sym_eig(&q).unwrap().values;
        let m_eig = sym_eig(&m).unwrap();
        let (lo_m, hi_m) = (m_eig.min().max(0.0), m_eig.max());
        let qm = sym_eig(&congruence(&psd_sqrt(&m).unwrap(), &q)).unwrap().values;
        for k in 0..d {
            let (a, b) = (q_eig[k] * lo_m, q_eig[k] * hi_m);
            let (lo, hi) = (a.min(b), a.max(b));
            if qm[k] < lo - 1e-8 || qm[k] > hi + 1e-8 {
                return Err(format!("trial {t}, k = {k}: {} outside [{lo}, {hi}]", qm[k]));
            }
        }
    }
    Ok(format!("{trials} trials"))
}

/// `λ_min(Q)λ_max(M) + λ_max(Q)λ_min(M) ≤ Tr(QM)` for rank-two `Q` with
/// `λ_min(Q) < 0 < λ_max(Q)`.
pub fn combined_inequality(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut done = 0;
    let mut worst = f64::NEG_INFINITY;
    while done < trials {
        let d = rng.random_range(2..=6);
        let a = normal_vec(&mut rng, d);
        let b = normal_vec(&mut rng, d);
        let (q_max, q_min) = rank2_extreme_eigs(&a, &b);
        if !(q_min < -1e-9 && q_max > 1e-9) {
            continue;
        }
        let q = rank2(&a, &b);
        let size = rng.random_range(1..=d + 1);
        let m = random_psd(&mut rng, d, size);
        let spectrum = sym_eig(&m).unwrap();
        let lhs = q_min * spectrum.max() + q_max * spectrum.min().max(0.0);
        let trace = q.frobenius_inner(&m);
        let gap = lhs - trace;
        worst = worst.max(gap);
        if gap > 1e-8 {
            return Err(format!("trial {done}: left side exceeds Tr(QM) by {gap:e}"));
        }
        done += 1;
    }
    Ok(format!("{trials} trials, max violation {worst:.2e}"))
}

/// Closed-form rank-two extreme eigenvalues versus full Jacobi spectra.
pub fn rank2_matches_full(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let d = rng.random_range(2..=8);
        let a = normal_vec(&mut rng, d);
        let b = normal_vec(&mut rng, d);
        let (hi, lo) = rank2_extreme_eigs(&a, &b);
        let full = sym_eig(&rank2(&a, &b)).unwrap();
        let err = (hi - full.max()).abs().max((lo - full.min()).abs());
        worst = worst.max(err);
        if err > 1e-8 {
            return Err(format!("trial {t}: closed form differs from Jacobi by {err:e}"));
        }
    }
    Ok(format!("{trials} triplets, max error {worst:.2e}"))
}

/// `r = 0` whenever the impostor lies on the target's ray no farther away.
pub fn dependent_pairs_are_infeasible(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for t in 0..trials {
        let d = rng.random_range(1..=6);
        let x_i = normal_vec(&mut rng, d);
        let a = normal_vec(&mut rng, d);
        let c: f64 = rng.random_range(-1.0..=1.0);
        let x_j: Vec<f64> = x_i.iter().zip(&a).map(|(x, v)| x - v).collect();
        let x_l: Vec<f64> = x_i.iter().zip(&a).map(|(x, v)| x - c * v).collect();
        let r = triplet_feasibility(&x_i, &x_j, &x_l, DEFAULT_R_CAP);
        if r != 0.0 {
            return Err(format!("trial {t}: c = {c}, r = {r}"));
        }
    }
    Ok(format!("{trials} dependent pairs"))
}

/// Swapping target and impostor inverts `r`.
pub fn exchange_inverts(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    while done < trials {
        let d = rng.random_range(2..=6);
        let x_i = normal_vec(&mut rng, d);
        let x_j = normal_vec(&mut rng, d);
        let x_l = normal_vec(&mut rng, d);
        let r = triplet_feasibility(&x_i, &x_j, &x_l, DEFAULT_R_CAP);
        if !(1e-4..=1e4).contains(&r) {
            continue;
        }
        let swapped = triplet_feasibility(&x_i, &x_l, &x_j, DEFAULT_R_CAP);
        let err = (swapped * r - 1.0).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            return Err(format!("trial {done}: r = {r}, swapped r = {swapped}"));
        }
        done += 1;
    }
    Ok(format!("{trials} triplets, max |r·r' − 1| {worst:.2e}"))
}

/// Random positive weights for every target pair of `plan`.
pub fn random_weights(rng: &mut ChaCha8Rng, plan: &NeighborhoodPlan) -> TripletWeightTable {
    let w = plan
        .targets
        .iter()
        .map(|t| t.iter().map(|_| rng.random_range(0.1..3.0)).collect())
        .collect();
    TripletWeightTable::from_pair_weights(plan, w).unwrap()
}

/// Smallest `|1 + D(i, j) − D(i, l)|` over all triplets of `plan`.
pub fn hinge_clearance(m: &Metric, ds: &LabeledDataset, plan: &NeighborhoodPlan) -> f64 {
    enumerate_triplets(plan)
        .iter()
        .map(|t| {
            let z = 1.0 + m.distance(ds.point(t.i), ds.point(t.j)) - m.distance(ds.point(t.i), ds.point(t.l));
            z.abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Central finite differences of the objective against `⟨G, E⟩`.
pub fn gradient_matches_finite_differences(pairs: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    while done < pairs {
        let d = rng.random_range(1..=4);
        let size = rng.random_range(10..=30);
        let ds = random_two_class(&mut rng, size, d);
        let plan = build_plan(&ds, &Metric::identity(d), 3, ImpostorMode::SameKOtherClass).unwrap();
        let weights = random_weights(&mut rng, &plan);
        let mut m = random_psd(&mut rng, d, d + 1);
        m.add_scaled(0.1, &SymMatrix::identity(d));
        let e = random_symmetric(&mut rng, d);
        let metric = Metric::new(m.clone()).unwrap();
        let scale = e.frobenius_norm() * h;
        let clearance = hinge_clearance(&metric, &ds, &plan);
        let max_sq = (0..ds.n())
            .flat_map(|i| (0..ds.n()).map(move |j| (i, j)))
            .map(|(i, j)| ds.point(i).iter().zip(ds.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(0.0, f64::max);
        if clearance <= 10.0 * scale * max_sq {
            continue;
        }
        let mut plus = m.clone();
        plus.add_scaled(h, &e);
        let mut minus = m.clone();
        minus.add_scaled(-h, &e);
        // M ± hE may leave the PSD cone slightly; the objective is defined for any symmetric matrix.
        let f = |x: &SymMatrix| {
            fblmnn::solver::TripletProblem::new(&ds, &plan, &weights, 0.5, 1)
                .unwrap()
                .objective(x)
                .total
        };
        let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
        let g = subgradient(&metric, &ds, &plan, &weights, 0.5).unwrap();
        let analytic = g.frobenius_inner(&e);
        let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
        if rel > 1e-4 {
            return Err(format!("pair {done}: numeric {numeric}, analytic {analytic}"));
        }
        done += 1;
    }
    Ok(format!("{pairs} (M, E) pairs, max relative error {worst:.2e}"))
}

/// Objective values never increase along a pass and the final metric is PSD.
pub fn solver_sanity_on(name: &str, ds: &LabeledDataset, mode: Mode) -> Check {
    let report = fit(ds, &SolverConfig::for_mode(mode)).map_err(|e| format!("{name}: {e}"))?;
    for (p, pass) in report.passes.iter().enumerate() {
        let trace = &pass.trace.objective;
        if let Some(w) = trace.windows(2).find(|w| w[1] > w[0]) {
            return Err(format!("{name} pass {p}: objective rose from {} to {}", w[0], w[1]));
        }
    }
    let min_eig = sym_eig(report.metric.matrix()).unwrap().min();
    if min_eig < -1e-9 {
        return Err(format!("{name}: minimum eigenvalue {min_eig:e}"));
    }
    Ok(format!("{name}: {} passes, min eigenvalue {min_eig:.1e}", report.passes.len()))
}

/// With unit weights, one `fb` pass and one `sp` pass reach the same objective.
pub fn unit_weight_fb_equals_sp(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let d = rng.random_range(1..=4);
        let size = rng.random_range(10..=40);
        let ds = random_two_class(&mut rng, size, d);
        let k = 3;
        let sp = fit(&ds, &SolverConfig { k, ..SolverConfig::for_mode(Mode::Sp) }).unwrap();
        let fb_cfg = SolverConfig {
            k,
            passes: 1,
            ..SolverConfig::for_mode(Mode::Fb)
        };
        let fb = fit_with(&ds, &fb_cfg, &UnitWeights).unwrap();
        let plan = build_plan(&ds, &Metric::identity(d), k, ImpostorMode::SameKOtherClass).unwrap();
        let unit = TripletWeightTable::unit(&plan);
        let a = objective(&sp.metric, &ds, &plan, &unit, 0.5).unwrap().total;
        let b = objective(&fb.metric, &ds, &plan, &unit, 0.5).unwrap().total;
        let rel = (a - b).abs() / a.abs().max(1e-12);
        worst = worst.max(rel);
        if rel > 1e-6 {
            return Err(format!("instance {t}: sp {a}, fb {b}"));
        }
    }
    Ok(format!("{instances} instances, max relative gap {worst:.2e}"))
}

/// Feasibility weights on `ds` under the Euclidean plan.
pub fn euclidean_weights(ds: &LabeledDataset, k: usize) -> (NeighborhoodPlan, TripletWeightTable) {
    let plan = build_plan(ds, &Metric::identity(ds.dim()), k, ImpostorMode::SameKOtherClass).unwrap();
    let table = pair_weights(ds, &plan, DEFAULT_R_CAP).unwrap();
    (plan, table)
}
