//! Projected subgradient descent on the (weighted) large-margin objective
//!
//! ```text
//! (1 − μ) Σ_i Σ_j R_ij D_M(x_i, x_j) + μ Σ_i Σ_j R_ij Σ_l max(0, 1 + D_M(x_i, x_j) − D_M(x_i, x_l))
//! ```
//!
//! over `M ⪰ 0`, with `j` ranging over the targets and `l` over the impostors
//! of `x_i`. Unit weights give plain LMNN; feasibility weights give FB-LMNN.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::feasibility::{pair_weights, FeasibilityCounters, TripletWeightTable, DEFAULT_R_CAP};
use crate::linalg::{psd_project, SymMatrix};
use crate::metric::Metric;
use crate::neighborhood::{build_plan, ImpostorMode, NeighborhoodPlan, PlanSummary};

/// Number of iterations over which the relative objective change is measured.
pub const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Single pass, unit weights.
    Sp,
    /// Several passes with neighborhoods rebuilt under the learned metric, unit weights.
    Mp,
    /// Several passes with feasibility weights `R_ij`.
    #[default]
    Fb,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "sp-lmnn" => Ok(Mode::Sp),
            "mp" | "mp-lmnn" => Ok(Mode::Mp),
            "fb" | "fb-lmnn" => Ok(Mode::Fb),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected sp, mp or fb)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sp => "sp",
            Mode::Mp => "mp",
            Mode::Fb => "fb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Weight of the push term; the pull term gets `1 − mu`.
    pub mu: f64,
    /// Neighborhood size for targets and impostors.
    pub k: usize,
    pub passes: usize,
    pub max_iterations: usize,
    /// First step length relative to `‖M₀‖_F / ‖G₀‖_F`.
    pub initial_step: f64,
    pub step_growth: f64,
    pub step_shrink: f64,
    /// Relative objective decrease over the convergence window below which a pass stops.
    pub tolerance: f64,
    pub impostor_mode: ImpostorMode,
    pub r_cap: f64,
    /// Rescale `R_ij` to mean one before solving.
    pub normalize_weights: bool,
    /// Compute `r_ijl` on the input coordinates in every pass instead of the
    /// coordinates mapped through the current metric.
    pub freeze_weights: bool,
    /// Refresh the active triplet set used by the gradient every this many iterations.
    pub active_refresh: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Fb,
            mu: 0.5,
            k: 5,
            passes: 5,
            max_iterations: 1000,
            initial_step: 0.01,
            step_growth: 1.01,
            step_shrink: 0.5,
            tolerance: 1e-5,
            impostor_mode: ImpostorMode::default(),
            r_cap: DEFAULT_R_CAP,
            normalize_weights: false,
            freeze_weights: true,
            active_refresh: 1,
            workers: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Defaults for `mode`: one pass for `sp`, five otherwise.
    pub fn for_mode(mode: Mode) -> Self {
        SolverConfig {
            mode,
            passes: if mode == Mode::Sp { 1 } else { 5 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if self.passes == 0 {
            return bad("passes must be at least 1".into());
        }
        if self.mode == Mode::Sp && self.passes != 1 {
            return bad(format!("mode sp runs exactly one pass, got passes = {}", self.passes));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive".into());
        }
        if !(self.step_growth >= 1.0 && self.step_growth.is_finite()) {
            return bad("step_growth must be at least 1".into());
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink must lie in (0, 1)".into());
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance must be nonnegative".into());
        }
        if !(self.r_cap > 0.0 && self.r_cap.is_finite()) {
            return bad("r_cap must be positive".into());
        }
        if self.active_refresh == 0 {
            return bad("active_refresh must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub pull: f64,
    pub push: f64,
}

/// Splits `0..n` into `workers` contiguous ranges and maps them, in order.
fn map_chunks<T: Send>(n: usize, workers: usize, f: impl Fn(Range<usize>) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return vec![f(0..n)];
    }
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * chunk).min(n)..((w + 1) * chunk).min(n);
                let f = &f;
                scope.spawn(move || f(range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// A fixed plan and weight table flattened into difference vectors.
#[derive(Debug, Clone)]
pub struct TripletProblem {
    dim: usize,
    mu: f64,
    /// Row-major difference vectors, one per (point, neighbor) pair.
    diffs: Vec<f64>,
    /// Per point: `(pair id, R_ij)` for each target.
    targets: Vec<Vec<(usize, f64)>>,
    /// Per point: pair ids of the impostors.
    impostors: Vec<Vec<usize>>,
    workers: usize,
}

/// Objective value plus what the gradient needs at the same iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: ObjectiveValue,
    pub active_triplets: usize,
    distances: Vec<f64>,
}

impl TripletProblem {
    pub fn new(
        ds: &LabeledDataset,
        plan: &NeighborhoodPlan,
        weights: &TripletWeightTable,
        mu: f64,
        workers: usize,
    ) -> Result<Self> {
        if plan.n() != ds.n() || weights.pair_weights().len() != ds.n() {
            return Err(Error::DimensionMismatch {
                expected: ds.n(),
                found: plan.n(),
            });
        }
        let dim = ds.dim();
        let mut diffs = Vec::new();
        let mut push_diff = |a: &[f64], b: &[f64]| -> usize {
            let id = diffs.len() / dim;
            diffs.extend(a.iter().zip(b).map(|(x, y)| x - y));
            id
        };
        let mut targets = Vec::with_capacity(ds.n());
        let mut impostors = Vec::with_capacity(ds.n());
        for i in 0..ds.n() {
            let w = &weights.pair_weights()[i];
            if w.len() != plan.targets[i].len() {
                return Err(Error::InvalidParameter(
                    "weight table does not match the neighborhood plan".into(),
                ));
            }
            targets.push(
                plan.targets[i]
                    .iter()
                    .zip(w)
                    .map(|(&j, &r)| (push_diff(ds.point(i), ds.point(j)), r))
                    .collect(),
            );
            impostors.push(
                plan.impostors[i]
                    .iter()
                    .map(|&l| push_diff(ds.point(i), ds.point(l)))
                    .collect(),
            );
        }
        Ok(TripletProblem {
            dim,
            mu,
            diffs,
            targets,
            impostors,
            workers: workers.max(1),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn pair_count(&self) -> usize {
        self.diffs.len() / self.dim.max(1)
    }

    fn diff(&self, pair: usize) -> &[f64] {
        &self.diffs[pair * self.dim..(pair + 1) * self.dim]
    }

    fn distances(&self, m: &SymMatrix) -> Vec<f64> {
        map_chunks(self.pair_count(), self.workers, |range| {
            range.map(|p| m.quad_form(self.diff(p))).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    pub fn evaluate(&self, m: &SymMatrix) -> Evaluation {
        let distances = self.distances(m);
        let mut pull = 0.0;
        let mut push = 0.0;
        let mut active = 0;
        for (targets, impostors) in self.targets.iter().zip(&self.impostors) {
            for &(tp, r) in targets {
                let d_ij = distances[tp];
                pull += r * d_ij;
                let mut slack = 0.0;
                for &ip in impostors {
                    let h = 1.0 + d_ij - distances[ip];
                    if h > 0.0 {
                        slack += h;
                        active += 1;
                    }
                }
                push += r * slack;
            }
        }
        Evaluation {
            value: ObjectiveValue {
                total: (1.0 - self.mu) * pull + self.mu * push,
                pull,
                push,
            },
            active_triplets: active,
            distances,
        }
    }

    pub fn objective(&self, m: &SymMatrix) -> ObjectiveValue {
        self.evaluate(m).value
    }

    /// Subgradient at the iterate whose distances `eval` holds.
    pub fn gradient_at(&self, eval: &Evaluation) -> SymMatrix {
        let mut coef = vec![0.0; self.pair_count()];
        for (targets, impostors) in self.targets.iter().zip(&self.impostors) {
            for &(tp, r) in targets {
                let d_ij = eval.distances[tp];
                let mut active = 0usize;
                for &ip in impostors {
                    if 1.0 + d_ij - eval.distances[ip] > 0.0 {
                        active += 1;
                        coef[ip] -= self.mu * r;
                    }
                }
                coef[tp] += (1.0 - self.mu) * r + self.mu * r * active as f64;
            }
        }
        let partials = map_chunks(self.pair_count(), self.workers, |range| {
            let mut g = SymMatrix::zeros(self.dim);
            for p in range {
                if coef[p] != 0.0 {
                    g.add_outer(coef[p], self.diff(p));
                }
            }
            g
        });
        let mut partials = partials.into_iter();
        let mut g = partials.next().unwrap_or_else(|| SymMatrix::zeros(self.dim));
        for part in partials {
            g.add_scaled(1.0, &part);
        }
        g
    }

    pub fn gradient(&self, m: &SymMatrix) -> SymMatrix {
        self.gradient_at(&self.evaluate(m))
    }
}

/// Objective of `metric` on a fixed plan and weight table.
pub fn objective(
    metric: &Metric,
    ds: &LabeledDataset,
    plan: &NeighborhoodPlan,
    weights: &TripletWeightTable,
    mu: f64,
) -> Result<ObjectiveValue> {
    check_metric_dim(metric, ds)?;
    Ok(TripletProblem::new(ds, plan, weights, mu, 1)?.objective(metric.matrix()))
}

/// A subgradient of the objective with respect to `M`. Triplets exactly on
/// the hinge are treated as inactive.
pub fn subgradient(
    metric: &Metric,
    ds: &LabeledDataset,
    plan: &NeighborhoodPlan,
    weights: &TripletWeightTable,
    mu: f64,
) -> Result<SymMatrix> {
    check_metric_dim(metric, ds)?;
    Ok(TripletProblem::new(ds, plan, weights, mu, 1)?.gradient(metric.matrix()))
}

fn check_metric_dim(metric: &Metric, ds: &LabeledDataset) -> Result<()> {
    if metric.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            found: metric.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Relative objective change fell below the tolerance.
    Converged,
    /// The subgradient vanished.
    ZeroGradient,
    MaxIterations,
    /// Step length underflowed after repeated rejections.
    StepUnderflow,
}

/// Per-pass record of the descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassTrace {
    /// Objective at the start and after every iteration (rejected steps repeat the value).
    pub objective: Vec<f64>,
    pub active_triplets: Vec<usize>,
    pub initial: ObjectiveValue,
    pub last: ObjectiveValue,
    pub accepted: usize,
    pub rejected: usize,
    pub final_step: f64,
    pub stop: StopReason,
}

impl PassTrace {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Converged | StopReason::ZeroGradient)
    }
}

/// One run of projected subgradient descent from `m0` on a fixed plan.
///
/// Steps are `M ← Π_PSD(M − η G)`. A step that does not increase the
/// objective is accepted and `η` grows; otherwise it is discarded and `η`
/// shrinks.
pub fn solve_pass(
    ds: &LabeledDataset,
    plan: &NeighborhoodPlan,
    weights: &TripletWeightTable,
    cfg: &SolverConfig,
    m0: &Metric,
) -> Result<(Metric, PassTrace)> {
    cfg.validate()?;
    check_metric_dim(m0, ds)?;
    let problem = TripletProblem::new(ds, plan, weights, cfg.mu, cfg.workers)?;

    let mut m = m0.matrix().clone();
    let mut eval = problem.evaluate(&m);
    if !eval.value.total.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let initial = eval.value;
    let mut objective_trace = vec![eval.value.total];
    let mut active_trace = vec![eval.active_triplets];
    let mut accepted = 0;
    let mut rejected = 0;
    let mut accepted_trace = vec![eval.value.total];

    let mut grad = problem.gradient_at(&eval);
    let grad_norm = grad.frobenius_norm();
    let mut step = if grad_norm > 0.0 {
        cfg.initial_step * m.frobenius_norm().max(1e-12) / grad_norm
    } else {
        0.0
    };
    let min_step = step * 1e-20;

    let mut stop = StopReason::MaxIterations;
    if grad_norm == 0.0 || !grad_norm.is_finite() {
        if !grad_norm.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: 0 });
        }
        stop = StopReason::ZeroGradient;
    } else {
        for iteration in 1..=cfg.max_iterations {
            let mut candidate = m.clone();
            candidate.add_scaled(-step, &grad);
            let candidate = psd_project(&candidate)?;
            let cand_eval = problem.evaluate(&candidate);
            if !cand_eval.value.total.is_finite() {
                return Err(Error::NonFiniteObjective { iteration });
            }
            if cand_eval.value.total <= eval.value.total {
                m = candidate;
                eval = cand_eval;
                accepted += 1;
                accepted_trace.push(eval.value.total);
                step *= cfg.step_growth;
                // The subgradient depends on the iterate only through the active
                // set, so between refreshes the previous one is reused.
                if accepted % cfg.active_refresh == 0 {
                    grad = problem.gradient_at(&eval);
                }
            } else {
                rejected += 1;
                step *= cfg.step_shrink;
            }
            objective_trace.push(eval.value.total);
            active_trace.push(eval.active_triplets);

            if grad.frobenius_norm() == 0.0 {
                stop = StopReason::ZeroGradient;
                break;
            }
            if step < min_step {
                stop = StopReason::StepUnderflow;
                break;
            }
            if accepted >= CONVERGENCE_WINDOW {
                let before = accepted_trace[accepted - CONVERGENCE_WINDOW];
                let now = eval.value.total;
                if before - now <= cfg.tolerance * before.abs() {
                    stop = StopReason::Converged;
                    break;
                }
            }
        }
    }

    let trace = PassTrace {
        objective: objective_trace,
        active_triplets: active_trace,
        initial,
        last: eval.value,
        accepted,
        rejected,
        final_step: step,
        stop,
    };
    // Projection keeps the minimum eigenvalue at round-off level.
    let metric = Metric::new(m)?;
    Ok((metric, trace))
}

/// Summary of a feasibility weight table kept in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub zero_pairs: usize,
    pub counters: FeasibilityCounters,
}

impl WeightSummary {
    fn of(table: &TripletWeightTable) -> Self {
        let all: Vec<f64> = table.pair_weights().iter().flatten().copied().collect();
        WeightSummary {
            mean: table.mean_pair_weight(),
            min: all.iter().copied().fold(f64::INFINITY, f64::min),
            max: all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            zero_pairs: all.iter().filter(|&&w| w == 0.0).count(),
            counters: table.counters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassReport {
    pub plan: PlanSummary,
    pub weights: Option<WeightSummary>,
    pub trace: PassTrace,
}

fn serialize_metric<S: Serializer>(metric: &Metric, s: S) -> std::result::Result<S::Ok, S::Error> {
    metric.matrix().rows().serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "serialize_metric")]
    pub metric: Metric,
    pub config: SolverConfig,
    pub passes: Vec<PassReport>,
    /// Every pass stopped on the tolerance rule or a vanishing gradient.
    pub converged: bool,
    /// The last rebuilt neighborhood plan matched the one it replaced.
    pub plan_stable: bool,
    pub final_objective: f64,
    /// Excluded from serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
    /// Weight table of the last pass (feasibility mode only).
    #[serde(skip)]
    pub last_weights: Option<TripletWeightTable>,
    #[serde(skip)]
    pub last_plan: Option<NeighborhoodPlan>,
}

impl SolveReport {
    /// All objective values of all passes in order.
    pub fn objective_trace(&self) -> Vec<&[f64]> {
        self.passes.iter().map(|p| p.trace.objective.as_slice()).collect()
    }
}

/// Computes the weight table for one pass.
pub trait Weigher {
    fn weights(
        &self,
        ds: &LabeledDataset,
        plan: &NeighborhoodPlan,
        metric: &Metric,
        cfg: &SolverConfig,
    ) -> Result<TripletWeightTable>;
}

/// Unit weights (`sp` and `mp`).
pub struct UnitWeights;

impl Weigher for UnitWeights {
    fn weights(
        &self,
        _ds: &LabeledDataset,
        plan: &NeighborhoodPlan,
        _metric: &Metric,
        _cfg: &SolverConfig,
    ) -> Result<TripletWeightTable> {
        Ok(TripletWeightTable::unit(plan))
    }
}

/// Feasibility weights `R_ij`, measured in the coordinates `√M x` unless
/// `freeze_weights` is set.
pub struct FeasibilityWeights;

impl Weigher for FeasibilityWeights {
    fn weights(
        &self,
        ds: &LabeledDataset,
        plan: &NeighborhoodPlan,
        metric: &Metric,
        cfg: &SolverConfig,
    ) -> Result<TripletWeightTable> {
        let mut table = if cfg.freeze_weights || metric.is_identity() {
            pair_weights(ds, plan, cfg.r_cap)?
        } else {
            pair_weights(&ds.transformed(&metric.sqrt())?, plan, cfg.r_cap)?
        };
        if cfg.normalize_weights {
            table.normalize_to_unit_mean();
        }
        Ok(table)
    }
}

/// Trains a metric with the weighting implied by `cfg.mode`.
pub fn fit(ds: &LabeledDataset, cfg: &SolverConfig) -> Result<SolveReport> {
    match cfg.mode {
        Mode::Sp | Mode::Mp => fit_with(ds, cfg, &UnitWeights),
        Mode::Fb => fit_with(ds, cfg, &FeasibilityWeights),
    }
}

/// Multi-pass training with a caller-chosen weighting.
///
/// Pass one uses Euclidean neighborhoods and starts from the identity. Each
/// later pass rebuilds the plan under the current metric and warm-starts
/// from it; training stops early once the plan no longer changes.
pub fn fit_with(ds: &LabeledDataset, cfg: &SolverConfig, weigher: &dyn Weigher) -> Result<SolveReport> {
    cfg.validate()?;
    if ds.class_count() < 2 {
        return Err(Error::SingleClass);
    }
    let start = Instant::now();
    let mut metric = Metric::identity(ds.dim());
    let mut passes: Vec<PassReport> = Vec::new();
    let mut previous: Option<NeighborhoodPlan> = None;
    let mut last_weights = None;
    let mut plan_stable = false;

    for pass in 0..cfg.passes {
        let plan = build_plan(ds, &metric, cfg.k, cfg.impostor_mode)?;
        if let Some(prev) = &previous {
            if prev.same_neighborhoods(&plan) {
                plan_stable = true;
                break;
            }
        }
        let weights = weigher.weights(ds, &plan, &metric, cfg)?;
        let (next, trace) = solve_pass(ds, &plan, &weights, cfg, &metric)?;
        log::debug!(
            "pass {}: objective {:.6e} -> {:.6e} ({} accepted, {} rejected, {:?})",
            pass + 1,
            trace.initial.total,
            trace.last.total,
            trace.accepted,
            trace.rejected,
            trace.stop
        );
        passes.push(PassReport {
            plan: plan.summary(),
            weights: (cfg.mode == Mode::Fb).then(|| WeightSummary::of(&weights)),
            trace,
        });
        metric = next;
        last_weights = Some(weights);
        previous = Some(plan);
    }

    let final_objective = passes.last().map_or(0.0, |p| p.trace.last.total);
    Ok(SolveReport {
        converged: passes.iter().all(|p| p.trace.converged()),
        metric,
        config: cfg.clone(),
        passes,
        plan_stable,
        final_objective,
        wall_time: start.elapsed(),
        last_weights: if cfg.mode == Mode::Fb { last_weights } else { None },
        last_plan: previous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mahalanobis, sym_eig};
    use crate::neighborhood::enumerate_triplets;
    use approx::assert_abs_diff_eq;

    fn line_data() -> LabeledDataset {
        LabeledDataset::new(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn zero_metric_objective() {
        let ds = line_data();
        let plan = build_plan(&ds, &Metric::identity(1), 1, ImpostorMode::SameKOtherClass).unwrap();
        let w = TripletWeightTable::unit(&plan);
        let zero = Metric::new(SymMatrix::zeros(1)).unwrap();
        let v = objective(&zero, &ds, &plan, &w, 0.5).unwrap();
        assert_eq!(v.pull, 0.0);
        let expected: usize = plan.impostors.iter().map(Vec::len).sum();
        assert_eq!(v.push, expected as f64);
        assert_eq!(v.total, 0.5 * v.push);
    }

    #[test]
    fn single_triplet_slack() {
        // D(i,j) = 1.0, D(i,l) = 1.3 under M = I
        let ds = LabeledDataset::new(
            vec![vec![0.0], vec![1.0], vec![1.3_f64.sqrt()]],
            vec![0, 0, 1],
        )
        .unwrap();
        let plan = NeighborhoodPlan {
            k: 1,
            mode: ImpostorMode::SameKOtherClass,
            targets: vec![vec![1], vec![], vec![]],
            impostors: vec![vec![2], vec![], vec![]],
            metric_used: "test".into(),
        };
        let w = TripletWeightTable::unit(&plan);
        let v = objective(&Metric::identity(1), &ds, &plan, &w, 0.5).unwrap();
        assert_abs_diff_eq!(v.push, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(v.pull, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_without_active_triplets_is_pull_only() {
        let ds = LabeledDataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![10.0, 0.0]],
            vec![0, 0, 1],
        )
        .unwrap();
        let plan = NeighborhoodPlan {
            k: 1,
            mode: ImpostorMode::SameKOtherClass,
            targets: vec![vec![1], vec![], vec![]],
            impostors: vec![vec![2], vec![], vec![]],
            metric_used: "test".into(),
        };
        let w = TripletWeightTable::from_pair_weights(&plan, vec![vec![3.0], vec![], vec![]]).unwrap();
        let g = subgradient(&Metric::identity(2), &ds, &plan, &w, 0.25).unwrap();
        let c = crate::linalg::outer_diff(ds.point(0), ds.point(1)).unwrap();
        for (a, b) in g.as_slice().iter().zip(c.as_slice()) {
            assert_abs_diff_eq!(*a, 0.75 * 3.0 * b, epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_weights_doubles_gradient() {
        let ds = crate::dataset::gen_zebra(
            &crate::dataset::ZebraParams {
                stripes: 3,
                points_per_stripe: 8,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let plan = build_plan(&ds, &Metric::identity(2), 3, ImpostorMode::SameKOtherClass).unwrap();
        let w1 = pair_weights(&ds, &plan, DEFAULT_R_CAP).unwrap();
        let doubled: Vec<Vec<f64>> = w1
            .pair_weights()
            .iter()
            .map(|r| r.iter().map(|v| 2.0 * v).collect())
            .collect();
        let w2 = TripletWeightTable::from_pair_weights(&plan, doubled).unwrap();
        let m = Metric::new(SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap()).unwrap();
        let g1 = subgradient(&m, &ds, &plan, &w1, 0.5).unwrap();
        let g2 = subgradient(&m, &ds, &plan, &w2, 0.5).unwrap();
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn objective_matches_triplet_loop() {
        let ds = crate::dataset::gen_zebra(
            &crate::dataset::ZebraParams {
                stripes: 4,
                points_per_stripe: 6,
                ..Default::default()
            },
            2,
        )
        .unwrap();
        let plan = build_plan(&ds, &Metric::identity(2), 2, ImpostorMode::SameKOtherClass).unwrap();
        let w = pair_weights(&ds, &plan, DEFAULT_R_CAP).unwrap();
        let m = SymMatrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 3.0]]).unwrap();
        let v = objective(&Metric::new(m.clone()).unwrap(), &ds, &plan, &w, 0.3).unwrap();

        let mut pull = 0.0;
        for (i, targets) in plan.targets.iter().enumerate() {
            for &j in targets {
                pull += w.pair_weight(i, j).unwrap() * mahalanobis(&m, ds.point(i), ds.point(j)).unwrap();
            }
        }
        let mut push = 0.0;
        for t in enumerate_triplets(&plan) {
            let dij = mahalanobis(&m, ds.point(t.i), ds.point(t.j)).unwrap();
            let dil = mahalanobis(&m, ds.point(t.i), ds.point(t.l)).unwrap();
            push += w.pair_weight(t.i, t.j).unwrap() * (1.0 + dij - dil).max(0.0);
        }
        assert_abs_diff_eq!(v.pull, pull, epsilon = 1e-9 * pull);
        assert_abs_diff_eq!(v.push, push, epsilon = 1e-9 * push.max(1.0));
        assert_abs_diff_eq!(v.total, 0.7 * pull + 0.3 * push, epsilon = 1e-9 * v.total);
    }

    #[test]
    fn one_dimensional_margin_is_reached() {
        let ds = line_data();
        let cfg = SolverConfig {
            k: 1,
            ..SolverConfig::for_mode(Mode::Sp)
        };
        let report = fit(&ds, &cfg).unwrap();
        let trace = &report.passes[0].trace;
        assert_eq!(trace.last.push, 0.0);
        // margins: D(i,l) - D(i,j) = m(81 - 1) for the tightest triplet, needs m >= 1/80
        let m = report.metric.matrix().get(0, 0);
        assert!(m >= 1.0 / 80.0 - 1e-9, "m = {m}");
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let sp = SolverConfig {
            passes: 3,
            ..SolverConfig::for_mode(Mode::Sp)
        };
        assert!(matches!(sp.validate(), Err(Error::InvalidParameter(_))));
        for mu in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = SolverConfig { mu, ..Default::default() };
            assert!(cfg.validate().is_err(), "mu = {mu}");
        }
        assert!(SolverConfig { passes: 0, ..Default::default() }.validate().is_err());
        assert!("FB".parse::<Mode>().is_ok());
        assert!("svm".parse::<Mode>().is_err());
    }

    #[test]
    fn psd_is_preserved() {
        let ds = crate::dataset::gen_zebra(
            &crate::dataset::ZebraParams {
                stripes: 4,
                points_per_stripe: 15,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        let report = fit(&ds, &SolverConfig { passes: 2, max_iterations: 200, ..SolverConfig::for_mode(Mode::Fb) }).unwrap();
        assert!(sym_eig(report.metric.matrix()).unwrap().min() >= -1e-9);
        for p in &report.passes {
            assert!(p.trace.objective.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn workers_agree_with_sequential() {
        let ds = crate::dataset::gen_zebra(
            &crate::dataset::ZebraParams {
                stripes: 4,
                points_per_stripe: 20,
                ..Default::default()
            },
            8,
        )
        .unwrap();
        let plan = build_plan(&ds, &Metric::identity(2), 3, ImpostorMode::SameKOtherClass).unwrap();
        let w = pair_weights(&ds, &plan, DEFAULT_R_CAP).unwrap();
        let one = TripletProblem::new(&ds, &plan, &w, 0.5, 1).unwrap();
        let four = TripletProblem::new(&ds, &plan, &w, 0.5, 4).unwrap();
        let m = SymMatrix::from_rows(&[vec![0.7, -0.2], vec![-0.2, 1.9]]).unwrap();
        let (a, b) = (one.gradient(&m), four.gradient(&m));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-10 * x.abs().max(1.0));
        }
        assert_eq!(one.objective(&m), four.objective(&m));
    }
}
