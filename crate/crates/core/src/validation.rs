//! Randomized property suites behind `polystap validate`.
//!
//! Each suite draws small random instances from a seeded generator and
//! checks one structural identity at a fixed tolerance. The same seed and
//! trial count always give the same report.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::covariance::{CommutationPermutation, CovarianceModel, FilterVector, WaveformFactor};
use crate::error::Result;
use crate::linalg::{inner, rel_error, rel_frobenius, CVector, C64};
use crate::model::{Jammer, Scenario};
use crate::optimizer::{cyclic_design, OptimizerConfig};
use crate::{presets, reference};

pub const ADJOINT_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const FAST_DIRECT_TOL: f64 = 1e-8;
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Adjoint,
    StructuredIdentities,
    TraceIdentity,
    FastDirect,
    Monotonicity,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Adjoint,
        Suite::StructuredIdentities,
        Suite::TraceIdentity,
        Suite::FastDirect,
        Suite::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Adjoint => "adjoint",
            Suite::StructuredIdentities => "structured-identities",
            Suite::TraceIdentity => "trace-identity",
            Suite::FastDirect => "fast-direct",
            Suite::Monotonicity => "monotonicity",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Adjoint => ADJOINT_TOL,
            Suite::StructuredIdentities | Suite::TraceIdentity => IDENTITY_TOL,
            Suite::FastDirect => FAST_DIRECT_TOL,
            Suite::Monotonicity => MONOTONE_SLACK,
        }
    }

    /// Trials for a base count of `n`. The expensive suites run fewer.
    pub fn trials(self, n: usize) -> usize {
        match self {
            Suite::FastDirect => (n / 5).max(1),
            Suite::Monotonicity => (n / 20).max(1),
            _ => n.max(1),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub tolerance: f64,
    /// Largest error seen, in the suite's own relative measure.
    pub worst: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} trials={:<5} worst={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.trials,
            self.worst,
            self.tolerance
        )
    }
}

struct Checker {
    suite: Suite,
    trials: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Checker {
    fn new(suite: Suite, trials: usize) -> Self {
        Self {
            suite,
            trials,
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, err: f64, what: impl FnOnce() -> String) {
        let tol = self.suite.tolerance();
        self.worst = self.worst.max(err);
        if !(err <= tol) {
            self.failures
                .push(format!("{}: error {err:.3e} > {tol:.0e}", what()));
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.suite,
            trials: self.trials,
            tolerance: self.suite.tolerance(),
            worst: self.worst,
            failures: self.failures,
        }
    }
}

fn random_vector<R: Rng>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// A random small scenario with every covariance term switched on.
fn random_scenario<R: Rng>(rng: &mut R, rings: usize) -> Scenario {
    let n_tx = rng.random_range(1..=3);
    let n_rx = rng.random_range(1..=3);
    let l = rng.random_range(2..=5);
    let m = rng.random_range(1..=3);
    let patches = rng.random_range(3..=12);
    let mut s = presets::small(n_tx, n_rx, l, m, rings, patches);
    s.geometry.d_tx = rng.random_range(0.25..2.5);
    s.geometry.d_rx = rng.random_range(0.25..1.0);
    s.target.doa_rad = rng.random_range(-1.2..1.2);
    s.target.normalized_doppler = rng.random_range(-0.5..0.5);
    s.clutter.patch_power = (0..patches).map(|_| rng.random_range(0.1..3.0)).collect();
    s.jammers.jammers.push(Jammer {
        doa_rad: rng.random_range(-1.2..1.2),
        power: rng.random_range(0.5..50.0),
    });
    s
}

fn random_model<R: Rng>(rng: &mut R, rings: usize) -> Result<CovarianceModel> {
    CovarianceModel::new(random_scenario(rng, rings))
}

fn scalar_rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

/// `⟨w, V x⟩ = ⟨Vᴴ w, x⟩` for the target and clutter operators.
fn adjoint_suite(trials: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut c = Checker::new(Suite::Adjoint, trials);
    for t in 0..trials {
        let model = random_model(rng, 2)?;
        let d = model.dims();
        let s = random_vector(d.tx_len(), rng);
        let w = random_vector(d.rx_len(), rng);
        let lhs = inner(w.as_slice(), model.apply_vt(s.as_slice())?.as_slice());
        let rhs = inner(
            model.apply_vt_adjoint(w.as_slice())?.as_slice(),
            s.as_slice(),
        );
        c.check(scalar_rel(lhs, rhs), || format!("trial {t}, target"));
        let patch = &model.patches()[rng.random_range(0..model.patches().len())];
        let lhs = inner(
            w.as_slice(),
            model.apply_vc(patch, s.as_slice())?.as_slice(),
        );
        let rhs = inner(
            model.apply_vc_adjoint(patch, w.as_slice())?.as_slice(),
            s.as_slice(),
        );
        c.check(scalar_rel(lhs, rhs), || {
            format!("trial {t}, ring {} patch {}", patch.ring, patch.index)
        });
    }
    Ok(c.finish())
}

/// The waveform-side and filter-side rewrites of `V_c` against their dense
/// Kronecker forms for every ring offset in `−2..=2`, plus the defining
/// swap of the commutation permutation.
fn identity_suite(trials: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut c = Checker::new(Suite::StructuredIdentities, trials);
    for t in 0..trials {
        let model = random_model(rng, 2)?;
        let d = model.dims();
        for ring in -2isize..=2 {
            let patch = model
                .patches()
                .iter()
                .find(|p| p.ring == ring)
                .expect("every ring has patches");
            let x = random_vector(d.tx_len(), rng);
            let lhs = model.apply_vc(patch, x.as_slice())?;
            let rhs = reference::waveform_identity_rhs(&model, patch, &x);
            c.check(rel_error(&lhs, &rhs), || {
                format!("trial {t}, waveform side, p = {ring}")
            });
            let w = random_vector(d.rx_len(), rng);
            let lhs = model.apply_vc_adjoint(patch, w.as_slice())?;
            let rhs = reference::filter_identity_rhs(&model, patch, &w);
            c.check(rel_error(&lhs, &rhs), || {
                format!("trial {t}, filter side, p = {ring}")
            });
        }
        // K (b ⊗ a) = a ⊗ b with a ∈ C^{N_R}, b ∈ C^{L}
        let a = random_vector(d.n_rx, rng);
        let b = random_vector(d.code_length, rng);
        let k = CommutationPermutation::new(d.n_rx, d.code_length);
        let swapped = CVector::from_vec(k.apply(b.kronecker(&a).as_slice()));
        c.check(rel_error(&swapped, &a.kronecker(&b)), || {
            format!("trial {t}, commutation")
        });
    }
    Ok(c.finish())
}

/// `wᴴ R_u(U) w = tr(U R_u(w) Uᴴ)`.
fn trace_suite(trials: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut c = Checker::new(Suite::TraceIdentity, trials);
    for t in 0..trials {
        let model = random_model(rng, 1)?;
        let d = model.dims();
        let rank = rng.random_range(1..=d.tx_len().min(4));
        let u = WaveformFactor::random(rank, d.tx_len(), model.symbol_power(), rng);
        let w = FilterVector::new(random_vector(d.rx_len(), rng))?;
        let ru = model.ru_of_u_direct(&u)?;
        let wv = w.as_vector();
        let lhs = inner(wv.as_slice(), (&ru * wv).as_slice()).re;
        let rhs = u.quadratic_trace(&model.ru_of_w_direct(&w)?);
        c.check((lhs - rhs).abs() / lhs.abs(), || format!("trial {t}"));
    }
    Ok(c.finish())
}

/// Fast spectral-table assembly against the direct patch sums.
fn fast_direct_suite(trials: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut c = Checker::new(Suite::FastDirect, trials);
    let mut s = presets::small(2, 2, 4, 3, 1, 16);
    s.jammers.jammers.push(Jammer {
        doa_rad: -0.4,
        power: 5.0,
    });
    let model = CovarianceModel::new(s)?;
    let tables = model.precompute_spectral_tables();
    for t in 0..trials {
        let rank = rng.random_range(1..=4);
        let u = WaveformFactor::random(rank, model.dims().tx_len(), model.symbol_power(), rng);
        let err = rel_frobenius(
            &model.ru_of_u_fast(&tables, &u)?,
            &model.ru_of_u_direct(&u)?,
        );
        c.check(err, || format!("trial {t}, R_u(U)"));
        let w = FilterVector::new(random_vector(model.dims().rx_len(), rng))?;
        let err = rel_frobenius(
            &model.ru_of_w_fast(&tables, &w)?,
            &model.ru_of_w_direct(&w)?,
        );
        c.check(err, || format!("trial {t}, R_u(w)"));
    }
    Ok(c.finish())
}

/// Every objective sequence of a full design is non-decreasing.
fn monotonicity_suite(trials: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut c = Checker::new(Suite::Monotonicity, trials);
    for t in 0..trials {
        let model = random_model(rng, 1)?;
        let cfg = OptimizerConfig::default().with_seed(rng.random());
        let out = cyclic_design(&model, &cfg)?;
        let v = out.trace.monotonicity_violations(MONOTONE_SLACK);
        let worst = v.iter().map(|x| x.drop).fold(0.0, f64::max);
        c.worst = c.worst.max(worst);
        for x in v {
            c.failures.push(format!("trial {t}: {x}"));
        }
    }
    Ok(c.finish())
}

/// Run `suites` with a base of `trials` random instances each. Every suite
/// gets its own generator derived from `seed`, so dropping a suite does not
/// change the others.
pub fn run_suites(suites: &[Suite], trials: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    suites
        .iter()
        .map(|&suite| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(suite as u64 + 1);
            let n = suite.trials(trials);
            match suite {
                Suite::Adjoint => adjoint_suite(n, &mut rng),
                Suite::StructuredIdentities => identity_suite(n, &mut rng),
                Suite::TraceIdentity => trace_suite(n, &mut rng),
                Suite::FastDirect => fast_direct_suite(n, &mut rng),
                Suite::Monotonicity => monotonicity_suite(n, &mut rng),
            }
        })
        .collect()
}
