//! Runtime checks of the constants a functional must satisfy for the
//! convergence guarantees to apply. Report-only: nothing here fails a run.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{FunctionalSpec, MfnnSpec, PairwiseSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Observed quantity.
    pub value: f64,
    /// Bound it is compared against.
    pub bound: f64,
    /// `bound − value`; negative on failure.
    pub margin: f64,
    pub detail: String,
}

impl AssumptionCheck {
    fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
            margin: bound - value,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub passed: bool,
}

impl AssumptionReport {
    fn new(checks: Vec<AssumptionCheck>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { checks, passed }
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const PROBES: usize = 256;
const PROBE_SEED: u64 = 0xA55E_0001;

/// Checks smoothness, weak interaction (pairwise) or boundedness and
/// Lipschitz constants (network). Pairwise weak interaction needs an LSI
/// constant of the stationary measure; without one that check fails with an
/// explanatory detail.
pub fn check_assumptions(spec: &FunctionalSpec, c_lsi: Option<f64>) -> AssumptionReport {
    match spec {
        FunctionalSpec::Pairwise(p) => pairwise_checks(p, c_lsi),
        FunctionalSpec::Mfnn(m) => mfnn_checks(m),
    }
}

fn pairwise_checks(spec: &PairwiseSpec, c_lsi: Option<f64>) -> AssumptionReport {
    let (lv, lw) = spec.smoothness();
    let mut checks = vec![
        AssumptionCheck {
            name: "smoothness".into(),
            passed: lv.is_finite() && lw.is_finite() && lv >= 0.0 && lw >= 0.0,
            value: lv + lw,
            bound: f64::INFINITY,
            margin: f64::INFINITY,
            detail: format!("L_V = {lv}, L_W = {lw}"),
        },
    ];
    let defect = spec.odd_gradient_defect(PROBES, PROBE_SEED).unwrap_or(0.0);
    checks.push(AssumptionCheck::at_most(
        "interaction_even",
        defect,
        1e-9,
        "max relative |∇W(v) + ∇W(−v)| over random probes",
    ));
    checks.push(match c_lsi {
        Some(c) if c > 0.0 => {
            let bound = spec.sigma * spec.sigma / (4.0 * c);
            AssumptionCheck::at_most("weak_interaction", lw, bound, format!("L_W ≤ σ²/(4·C_LSI) with C_LSI = {c}"))
        }
        _ => AssumptionCheck {
            name: "weak_interaction".into(),
            passed: false,
            value: lw,
            bound: f64::NAN,
            margin: f64::NAN,
            detail: "no positive LSI constant supplied".into(),
        },
    });
    AssumptionReport::new(checks)
}

fn mfnn_checks(spec: &MfnnSpec) -> AssumptionReport {
    let c = spec.constants;
    let (z_max, w_max) = spec.dataset.extent();
    let mut checks = vec![
        AssumptionCheck::at_most("feature_radius", z_max, c.r, "max ‖z_i‖ ≤ R"),
        AssumptionCheck::at_most("label_radius", w_max, c.r, "max |w_i| ≤ R"),
    ];

    let d = spec.dim();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(PROBE_SEED);
    let (mut x, mut x2) = (vec![0.0; d], vec![0.0; d]);
    let (mut g, mut g2) = (vec![0.0; d], vec![0.0; d]);
    let (mut h_max, mut grad_ratio, mut lip_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for probe in 0..PROBES {
        let z = spec.dataset.feature(probe % spec.len());
        let z_norm = norm(z);
        let scale = if probe % 2 == 0 { 1.0 } else { 5.0 };
        for (a, b) in x.iter_mut().zip(x2.iter_mut()) {
            *a = scale * rng.random_range(-1.0..1.0);
            *b = *a + 0.1 * rng.random_range(-1.0..1.0);
        }
        h_max = h_max.max(spec.activation(&x, z).abs());
        spec.activation_gradient(&x, z, &mut g);
        spec.activation_gradient(&x2, z, &mut g2);
        if z_norm > 0.0 {
            grad_ratio = grad_ratio.max(norm(&g) / z_norm);
            let dx = x.iter().zip(&x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let dg = g.iter().zip(&g2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dx > 0.0 {
                lip_ratio = lip_ratio.max(dg / (dx * z_norm));
            }
        }
    }
    checks.push(AssumptionCheck::at_most("activation_bound", h_max, c.b, "probed |h(x, z)| ≤ B"));
    checks.push(AssumptionCheck::at_most(
        "activation_gradient_bound",
        grad_ratio,
        c.m,
        "probed ‖∇_x h(x, z)‖/‖z‖ ≤ M",
    ));
    checks.push(AssumptionCheck::at_most(
        "activation_gradient_lipschitz",
        lip_ratio,
        c.l,
        "probed ‖∇h(x) − ∇h(x')‖/(‖x − x'‖‖z‖) ≤ L",
    ));
    AssumptionReport::new(checks)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
