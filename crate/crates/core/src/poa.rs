//! Equilibrium quality: brute-force optimum, price of anarchy, the closed-form
//! bound for nonnegative-coefficient polynomial costs, and empirical checks of
//! the supporting inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{DistributionSpace, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::game::{is_nash, run_to_equilibrium, tolerance};
use crate::model::{expected_total_cost, EdgeCostModel, EdgeId, FlowDistribution, Instance};
use crate::pricing::total_price_of_loads;
use crate::rng::substream;
use crate::sampling::{sample_instance, SamplingLaw};

/// Cheapest fully assigned distribution by exhaustive enumeration. Ties keep
/// the first distribution in enumeration order.
pub fn brute_force_optimum(inst: &Instance, cap: u64) -> Result<(FlowDistribution, f64)> {
    let space = DistributionSpace::new(inst, cap)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    space.for_each(inst.num_edges(), |choice, loads| {
        let cost = inst.cost_of_loads(loads);
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((choice.to_vec(), cost));
        }
    });
    let (choice, cost) = best.expect("distribution space is never empty");
    Ok((space.distribution(inst, &choice)?, cost))
}

/// Expected cost of the equilibrium over the optimum cost.
pub fn price_of_anarchy(inst: &Instance, equilibrium: &FlowDistribution, cap: u64) -> Result<f64> {
    if !is_nash(inst, equilibrium)? {
        return Err(Error::NotEquilibrium);
    }
    let (_, optimum) = brute_force_optimum(inst, cap)?;
    if optimum <= 0.0 {
        return Err(Error::Degenerate("optimum cost is zero".into()));
    }
    Ok(expected_total_cost(inst, equilibrium)? / optimum)
}

/// Smallest strictly positive coefficient of a model.
pub fn min_positive_coefficient(model: &EdgeCostModel) -> Option<f64> {
    model
        .coefficients
        .iter()
        .copied()
        .filter(|&c| c > 0.0)
        .min_by(f64::total_cmp)
}

/// `[(d + 1) * L * max_e 1/s_e]^d` with `L = max_e [c(1) - c(0)]`, `s_e` the
/// smallest positive coefficient of edge `e` and `d` the largest degree.
pub fn poa_upper_bound(inst: &Instance) -> Result<f64> {
    let mut max_inverse: f64 = 0.0;
    let mut l: f64 = 0.0;
    for (e, m) in inst.cost_models().iter().enumerate() {
        if m.coefficients.iter().any(|&c| c < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge {e} has a negative coefficient"
            )));
        }
        let s = min_positive_coefficient(m).ok_or_else(|| {
            Error::InvalidParameter(format!("edge {e} has no positive coefficient"))
        })?;
        max_inverse = max_inverse.max(1.0 / s);
        l = l.max(m.eval(1.0) - m.eval(0.0));
    }
    let d = inst.max_degree();
    Ok(((d as f64 + 1.0) * l * max_inverse).powi(d as i32))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients (leading first) of `c(f + 1) - c(f)` as a polynomial in `f`.
/// All are nonnegative when the cost coefficients are.
pub fn forward_difference_coefficients(model: &EdgeCostModel) -> Vec<f64> {
    difference_coefficients(model, 1.0)
}

/// Coefficients (leading first) of `c(f) - c(f - 1)` as a polynomial in `f`.
/// They sum to `c(1) - c(0)`.
pub fn backward_difference_coefficients(model: &EdgeCostModel) -> Vec<f64> {
    difference_coefficients(model, -1.0)
}

fn difference_coefficients(model: &EdgeCostModel, shift: f64) -> Vec<f64> {
    let d = model.degree() as usize;
    if d == 0 {
        return vec![0.0];
    }
    // ascending: out[i] is the coefficient of f^i
    let mut out = vec![0.0; d];
    for (pos, &a) in model.coefficients.iter().enumerate() {
        let j = d - pos;
        // (f + shift)^j - f^j = sum_{i<j} C(j, i) shift^(j-i) f^i, times sign for backward
        for (i, slot) in out.iter_mut().enumerate().take(j) {
            let term = binomial(j, i) * shift.powi((j - i) as i32);
            *slot += if shift < 0.0 { -a * term } else { a * term };
        }
    }
    out.reverse();
    out
}

/// Empirical checks of the inequalities behind the price-of-anarchy bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityDiagnostics {
    /// Smallest and largest `P(F) / C(F)` over enumerated distributions.
    pub a_l: f64,
    pub a_r: f64,
    pub distributions: u64,
    /// Distributions with zero expected cost, left out of the ratio.
    pub zero_cost_skipped: u64,
    /// Distributions with `C(F) > P(F)`.
    pub cost_above_price: u64,
    /// `max_e max_{1 <= f <= K-1} [c(f+1) - c(f)] / [c(f) - c(f-1)]`, at least 1.
    pub a_u: f64,
    /// Edges left out of `a_u` because a first difference vanished.
    pub degenerate_edges: Vec<EdgeId>,
    pub marginal_ratio_violations: u64,
    /// Smallest `A_u * sum_e m_e f'_e - P(F_N)` over equilibria and all `F'`.
    pub vi_min_margin: f64,
    pub vi_violations: u64,
    /// Same with the unscaled forward differences `c(f_e + 1) - c(f_e)`.
    pub forward_vi_min_margin: f64,
    pub forward_vi_violations: u64,
}

fn marginal_ratio_bound(inst: &Instance) -> (f64, Vec<EdgeId>) {
    let k = inst.max_load();
    let mut a_u: f64 = 1.0;
    let mut degenerate = Vec::new();
    for e in 0..inst.num_edges() {
        let mut edge_max: f64 = 1.0;
        let mut ok = true;
        for f in 1..k {
            let den = inst.marginal(e, f);
            let num = inst.marginal(e, f + 1);
            if den <= 0.0 {
                ok = false;
                break;
            }
            edge_max = edge_max.max(num / den);
        }
        if ok {
            a_u = a_u.max(edge_max);
        } else {
            degenerate.push(e);
        }
    }
    (a_u, degenerate)
}

/// Enumerates every distribution to measure `P/C`, `A_u`, and the
/// variational inequality at each given equilibrium. At an edge the
/// equilibrium leaves empty, the marginal term is the entry price `c(1) - c(0)`.
pub fn inequality_diagnostics(
    inst: &Instance,
    equilibria: &[FlowDistribution],
    cap: u64,
) -> Result<InequalityDiagnostics> {
    let space = DistributionSpace::new(inst, cap)?;
    let (a_u, degenerate_edges) = marginal_ratio_bound(inst);

    let mut marginal_ratio_violations = 0;
    for e in (0..inst.num_edges()).filter(|e| !degenerate_edges.contains(e)) {
        for f in 1..inst.max_load() {
            let ratio = inst.marginal(e, f + 1) / inst.marginal(e, f);
            if ratio > a_u + tolerance(a_u) {
                marginal_ratio_violations += 1;
            }
        }
    }

    struct Eq {
        price: f64,
        marginal: Vec<f64>,
        forward: Vec<f64>,
    }
    let eqs = equilibria
        .iter()
        .map(|f| {
            if let Some(k) = f.first_unassigned() {
                return Err(Error::Unassigned(k));
            }
            let loads = f.loads();
            Ok(Eq {
                price: total_price_of_loads(inst, loads),
                marginal: loads
                    .iter()
                    .enumerate()
                    .map(|(e, &l)| inst.marginal(e, l.max(1)))
                    .collect(),
                forward: loads
                    .iter()
                    .enumerate()
                    .map(|(e, &l)| inst.marginal(e, l + 1))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut d = InequalityDiagnostics {
        a_l: f64::INFINITY,
        a_r: f64::NEG_INFINITY,
        distributions: 0,
        zero_cost_skipped: 0,
        cost_above_price: 0,
        a_u,
        degenerate_edges,
        marginal_ratio_violations,
        vi_min_margin: f64::INFINITY,
        vi_violations: 0,
        forward_vi_min_margin: f64::INFINITY,
        forward_vi_violations: 0,
    };
    space.for_each(inst.num_edges(), |_, loads| {
        d.distributions += 1;
        let cost = inst.cost_of_loads(loads);
        let price = total_price_of_loads(inst, loads);
        if cost > price + tolerance(price) {
            d.cost_above_price += 1;
        }
        if cost > 0.0 {
            let r = price / cost;
            d.a_l = d.a_l.min(r);
            d.a_r = d.a_r.max(r);
        } else {
            d.zero_cost_skipped += 1;
        }
        for eq in &eqs {
            let weigh = |m: &[f64]| -> f64 {
                loads.iter().zip(m).map(|(&l, &x)| x * l as f64).sum()
            };
            let margin = a_u * weigh(&eq.marginal) - eq.price;
            d.vi_min_margin = d.vi_min_margin.min(margin);
            if margin < -tolerance(eq.price) {
                d.vi_violations += 1;
            }
            let margin = weigh(&eq.forward) - eq.price;
            d.forward_vi_min_margin = d.forward_vi_min_margin.min(margin);
            if margin < -tolerance(eq.price) {
                d.forward_vi_violations += 1;
            }
        }
    });
    Ok(d)
}

/// Price-of-anarchy certificate for one instance and one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaReport {
    pub digest: String,
    pub ne_cost: f64,
    pub opt_cost: f64,
    pub ratio: f64,
    /// `None` when some coefficient is negative.
    pub bound: Option<f64>,
    pub diagnostics: InequalityDiagnostics,
}

pub fn poa_report(inst: &Instance, equilibrium: &FlowDistribution, cap: u64) -> Result<PoaReport> {
    let ratio = price_of_anarchy(inst, equilibrium, cap)?;
    let (_, opt_cost) = brute_force_optimum(inst, cap)?;
    let bound = match poa_upper_bound(inst) {
        Ok(b) => Some(b),
        Err(Error::InvalidParameter(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PoaReport {
        digest: inst.digest(),
        ne_cost: expected_total_cost(inst, equilibrium)?,
        opt_cost,
        ratio,
        bound,
        diagnostics: inequality_diagnostics(inst, std::slice::from_ref(equilibrium), cap)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoaStudyConfig {
    /// Samples per polynomial order.
    pub samples: usize,
    pub orders: Vec<u32>,
    pub law: SamplingLaw,
    pub bin_width: f64,
    /// Upper edge of the histogram; defaults to the largest ratio seen.
    pub hist_upper: Option<f64>,
    pub enumeration_cap: u64,
}

impl Default for PoaStudyConfig {
    fn default() -> Self {
        PoaStudyConfig {
            samples: 500,
            orders: vec![2, 3],
            law: SamplingLaw::default(),
            bin_width: 0.05,
            hist_upper: None,
            enumeration_cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaRecord {
    pub index: usize,
    pub order: u32,
    pub digest: String,
    pub vertices: usize,
    pub edges: usize,
    pub commodities: usize,
    pub circles: usize,
    pub ne_cost: f64,
    pub opt_cost: f64,
    pub ratio: f64,
    pub bound: f64,
    pub a_l: f64,
    pub a_r: f64,
    pub a_u: f64,
    pub vi_min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub order: u32,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Fraction of the mass in bins lying entirely below `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let below: u64 = self
            .bins
            .iter()
            .filter(|b| b.high <= x + 1e-12)
            .map(|b| b.count)
            .sum();
        below as f64 / total as f64
    }
}

/// Fixed-width histogram of ratios over `[1, upper)`. Values below 1 (float
/// noise) land in the first bin, values at or above `upper` in the last.
pub fn histogram(order: u32, ratios: &[f64], width: f64, upper: f64) -> Histogram {
    let n = (((upper - 1.0) / width - 1e-9).ceil() as usize).max(1);
    let mut bins: Vec<HistogramBin> = (0..n)
        .map(|i| HistogramBin {
            low: 1.0 + i as f64 * width,
            high: 1.0 + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &r in ratios {
        let i = ((r - 1.0) / width + 1e-9).floor().max(0.0) as usize;
        bins[i.min(n - 1)].count += 1;
    }
    Histogram { order, bins }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaStudyResult {
    pub records: Vec<PoaRecord>,
    pub histograms: Vec<Histogram>,
    /// `(order, skipped count)`: samples that failed the enumeration cap.
    pub skipped: Vec<(u32, usize)>,
}

impl PoaStudyResult {
    pub fn ratios(&self, order: u32) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.order == order)
            .map(|r| r.ratio)
            .collect()
    }
}

fn study_one(cfg: &PoaStudyConfig, seed: u64, order: u32, index: usize) -> Result<Option<PoaRecord>> {
    let law = cfg.law.clone().with_degree(order);
    let mut rng = substream(seed, &format!("instance/order{order}"), index as u64);
    let inst = match sample_instance(&law, seed, &mut rng) {
        Ok(i) => i,
        Err(Error::InvalidParameter(msg)) if msg.contains("enumeration cap") => return Ok(None),
        Err(e) => return Err(e),
    };
    let (ne, circles, _) = run_to_equilibrium(&inst)?;
    let report = match poa_report(&inst, &ne, cfg.enumeration_cap) {
        Ok(r) => r,
        Err(Error::EnumerationCap { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(PoaRecord {
        index,
        order,
        digest: report.digest,
        vertices: inst.num_vertices(),
        edges: inst.num_edges(),
        commodities: inst.num_commodities(),
        circles,
        ne_cost: report.ne_cost,
        opt_cost: report.opt_cost,
        ratio: report.ratio,
        bound: report.bound.unwrap_or(f64::INFINITY),
        a_l: report.diagnostics.a_l,
        a_r: report.diagnostics.a_r,
        a_u: report.diagnostics.a_u,
        vi_min_margin: report.diagnostics.vi_min_margin,
    }))
}

/// Samples instances per polynomial order, runs the game to equilibrium, and
/// histograms the resulting price of anarchy. Each sample has its own RNG
/// substream, so results do not depend on `jobs`.
pub fn poa_study(cfg: &PoaStudyConfig, seed: u64, jobs: usize) -> Result<PoaStudyResult> {
    if cfg.bin_width <= 0.0 {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    if cfg.orders.is_empty() {
        return Err(Error::InvalidParameter("no polynomial orders requested".into()));
    }
    let tasks: Vec<(u32, usize)> = cfg
        .orders
        .iter()
        .flat_map(|&o| (0..cfg.samples).map(move |i| (o, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let outcomes: Vec<Result<Option<PoaRecord>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(o, i)| study_one(cfg, seed, o, i))
            .collect()
    });
    let mut records = Vec::new();
    let mut skipped: Vec<(u32, usize)> = cfg.orders.iter().map(|&o| (o, 0)).collect();
    for ((order, _), outcome) in tasks.iter().zip(outcomes) {
        match outcome? {
            Some(r) => records.push(r),
            None => {
                if let Some(s) = skipped.iter_mut().find(|(o, _)| o == order) {
                    s.1 += 1;
                }
            }
        }
    }
    let upper = cfg.hist_upper.unwrap_or_else(|| {
        let max = records.iter().map(|r| r.ratio).fold(1.0, f64::max);
        1.0 + (((max - 1.0) / cfg.bin_width).floor() + 1.0) * cfg.bin_width
    });
    let histograms = cfg
        .orders
        .iter()
        .map(|&o| {
            let ratios: Vec<f64> = records.iter().filter(|r| r.order == o).map(|r| r.ratio).collect();
            histogram(o, &ratios, cfg.bin_width, upper)
        })
        .collect();
    Ok(PoaStudyResult {
        records,
        histograms,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{d1, e};
    use crate::model::{Commodity, Edge, Topology};

    fn uniform_instance(coefficients: Vec<f64>) -> Instance {
        let topo = Topology::new(3, vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(0, 2)]).unwrap();
        Instance::new(
            vec![],
            topo,
            vec![EdgeCostModel::deterministic(coefficients); 3],
            vec![Commodity { source: 0, dest: 2 }, Commodity { source: 1, dest: 2 }],
            0,
        )
        .unwrap()
    }

    #[test]
    fn d1_optimum_and_poa() {
        let inst = d1();
        let (opt, cost) = brute_force_optimum(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(cost, 2.0);
        assert_ne!(opt.path(0), opt.path(1));
        let (ne, _, _) = run_to_equilibrium(&inst).unwrap();
        assert_eq!(price_of_anarchy(&inst, &ne, DEFAULT_CAP).unwrap(), 1.0);
        let stacked = FlowDistribution::from_paths(&inst, vec![e(&inst, 0), e(&inst, 0)]).unwrap();
        assert!(matches!(
            price_of_anarchy(&inst, &stacked, DEFAULT_CAP),
            Err(Error::NotEquilibrium)
        ));
    }

    #[test]
    fn bound_closed_forms() {
        assert_eq!(poa_upper_bound(&uniform_instance(vec![1.0, 0.0])).unwrap(), 2.0);
        assert_eq!(poa_upper_bound(&uniform_instance(vec![1.0, 0.0, 0.0])).unwrap(), 9.0);
        // f^3 + 2f: L = 3, s = 1, d = 3 -> (4 * 3)^3
        assert_eq!(
            poa_upper_bound(&uniform_instance(vec![1.0, 0.0, 2.0, 0.0])).unwrap(),
            1728.0
        );
    }

    #[test]
    fn bound_rejects_negative_coefficients() {
        // f^2 - 0.5 f + 1 is convex and increasing on 0..=2
        let inst = uniform_instance(vec![1.0, -0.5, 1.0]);
        assert!(matches!(poa_upper_bound(&inst), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn bound_grows_with_degree() {
        // same L and s, degree 2 vs 3
        let low = poa_upper_bound(&uniform_instance(vec![1.0, 1.0, 0.0])).unwrap();
        let high = poa_upper_bound(&uniform_instance(vec![1.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(low, 36.0);
        assert_eq!(high, 512.0);
        assert!(high > low);
    }

    #[test]
    fn d1_inequality_diagnostics() {
        let inst = d1();
        let (ne, _, _) = run_to_equilibrium(&inst).unwrap();
        let d = inequality_diagnostics(&inst, &[ne], DEFAULT_CAP).unwrap();
        assert_eq!(d.distributions, 4);
        assert_eq!((d.a_l, d.a_r), (1.0, 1.5));
        assert_eq!(d.a_u, 3.0);
        assert_eq!(d.cost_above_price, 0);
        assert_eq!(d.vi_violations, 0);
        assert!(d.vi_min_margin >= 0.0);
        assert_eq!(d.forward_vi_violations, 0);
    }

    #[test]
    fn marginal_ratio_of_square_is_three() {
        // K = 4: (2k+1)/(2k-1) for k = 1..3 peaks at 3
        let topo = Topology::new(2, vec![Edge::new(0, 1)]).unwrap();
        let inst = Instance::new(
            vec![],
            topo,
            vec![EdgeCostModel::deterministic(vec![1.0, 0.0, 0.0])],
            vec![Commodity { source: 0, dest: 1 }; 4],
            0,
        )
        .unwrap();
        let (a_u, degenerate) = marginal_ratio_bound(&inst);
        assert_eq!(a_u, 3.0);
        assert!(degenerate.is_empty());
    }

    #[test]
    fn difference_coefficient_identities() {
        for coeffs in [vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 1.0, 0.0], vec![0.7, 1.3, 0.2, 0.0]] {
            let m = EdgeCostModel::deterministic(coeffs);
            let fwd = forward_difference_coefficients(&m);
            let bwd = backward_difference_coefficients(&m);
            assert_eq!(fwd.len(), m.degree() as usize);
            assert!(fwd.iter().all(|&c| c >= 0.0));
            // leading term of the difference is d * a_e
            assert!((fwd[0] - m.degree() as f64 * m.leading()).abs() < 1e-12);
            let sum_b: f64 = bwd.iter().sum();
            assert!((sum_b - (m.eval(1.0) - m.eval(0.0))).abs() < 1e-12);
            let sum_f: f64 = fwd.iter().sum();
            assert!((sum_f - (m.eval(2.0) - m.eval(1.0))).abs() < 1e-12);
            // constant term of the forward difference is c(1) - c(0)
            assert!((fwd[fwd.len() - 1] - (m.eval(1.0) - m.eval(0.0))).abs() < 1e-12);
        }
        // f^2: forward 2f + 1, backward 2f - 1
        let sq = EdgeCostModel::deterministic(vec![1.0, 0.0, 0.0]);
        assert_eq!(forward_difference_coefficients(&sq), vec![2.0, 1.0]);
        assert_eq!(backward_difference_coefficients(&sq), vec![2.0, -1.0]);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(2, &[1.0, 0.9999999999, 1.04, 1.05, 1.26, 9.0], 0.05, 1.3);
        assert_eq!(h.bins.len(), 6);
        assert_eq!(h.bins[0].count, 3);
        assert_eq!(h.bins[1].count, 1);
        assert_eq!(h.bins[5].count, 2);
        assert_eq!(h.total(), 6);
        assert!((h.mass_below(1.1) - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn small_study_is_reproducible() {
        let cfg = PoaStudyConfig {
            samples: 8,
            orders: vec![2],
            ..PoaStudyConfig::default()
        };
        let a = poa_study(&cfg, 5, 1).unwrap();
        let b = poa_study(&cfg, 5, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len() + a.skipped[0].1, 8);
        for r in &a.records {
            assert!(r.ratio >= 1.0 - 1e-12 && r.ratio <= r.bound);
        }
    }
}
