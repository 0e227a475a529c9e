use super::*;
use crate::linalg::rel_error;
use crate::model::Jammer;
use crate::presets;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(n, n, rng);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn random_pd<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(n, n, rng);
    &a * a.adjoint() + CMatrix::identity(n, n)
}

fn small_model() -> CovarianceModel {
    let mut s = presets::small(2, 2, 3, 3, 1, 12);
    s.target.normalized_doppler = 0.3;
    s.jammers.jammers.push(Jammer {
        doa_rad: 0.5,
        power: 20.0,
    });
    CovarianceModel::new(s).unwrap()
}

fn quick_config() -> OptimizerConfig {
    OptimizerConfig::default()
}

#[test]
fn default_rank_values() {
    assert_eq!(default_rank(52), 6);
    assert_eq!(default_rank(1), 1);
    assert_eq!(default_rank(8), 2);
    assert_eq!(OptimizerConfig::default().resolved_rank(52), 6);
}

#[test]
fn config_validation() {
    assert!(OptimizerConfig::default().validate(52).is_ok());
    assert!(OptimizerConfig::default()
        .with_rank(53)
        .validate(52)
        .is_err());
    assert!(OptimizerConfig::default()
        .with_rank(0)
        .validate(52)
        .is_err());
    let cfg = OptimizerConfig {
        eps_mm: 0.0,
        ..OptimizerConfig::default()
    };
    assert!(cfg.validate(52).is_err());
}

#[test]
fn generalized_eigpair_diagonal() {
    let q = CMatrix::from_diagonal(&CVector::from_vec(vec![
        C64::new(2.0, 0.0),
        C64::new(1.0, 0.0),
    ]));
    let r = CMatrix::identity(2, 2);
    let (lambda, v) = largest_generalized_eigpair(&q, &r).unwrap();
    assert!((lambda - 2.0).abs() < 1e-14);
    assert!((v[0].norm() - 1.0).abs() < 1e-14 && v[1].norm() < 1e-14);
}

#[test]
fn generalized_eigpair_rank_one() {
    let mut r = rng(1);
    let q = random_matrix(6, 1, &mut r).column(0).into_owned();
    let rm = random_pd(6, &mut r);
    let (lambda, v) = largest_generalized_eigpair(&(&q * q.adjoint()), &rm).unwrap();
    let rinv_q = PdFactor::new(rm.clone(), "r").unwrap().solve(&q);
    let expected = inner(q.as_slice(), rinv_q.as_slice()).re;
    assert!((lambda - expected).abs() < 1e-10 * expected);
    // v ∝ R⁻¹q
    let target = rinv_q.normalize();
    let phase = inner(target.as_slice(), v.as_slice());
    assert!(rel_error(&v, &(target * phase)) < 1e-9);
}

#[test]
fn generalized_eigpair_matches_symmetric_reduction() {
    // Independent reduction through R^{-1/2} from the eigen-decomposition of R.
    let mut r = rng(2);
    let q = random_pd(8, &mut r) - CMatrix::identity(8, 8);
    let rm = random_pd(8, &mut r);
    let eig = HermitianEigen::new(&rm);
    let inv_sqrt = &eig.vectors
        * CMatrix::from_diagonal(&CVector::from_iterator(
            8,
            eig.values.iter().map(|l| C64::new(l.powf(-0.5), 0.0)),
        ))
        * eig.vectors.adjoint();
    let c = &inv_sqrt * &q * &inv_sqrt;
    let expected = HermitianEigen::new(&((&c + c.adjoint()) * C64::new(0.5, 0.0))).max();
    let (lambda, v) = largest_generalized_eigpair(&q, &rm).unwrap();
    assert!((lambda - expected).abs() < 1e-10 * expected);
    let residual = (&q * &v - &rm * &v * C64::new(lambda, 0.0)).norm();
    assert!(residual <= 1e-8 * q.norm());
}

#[test]
fn generalized_eigpair_rejects_indefinite_r() {
    let q = CMatrix::identity(2, 2);
    let r = CMatrix::from_diagonal(&CVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ]));
    assert!(matches!(
        largest_generalized_eigpair(&q, &r),
        Err(Error::NotPositiveDefinite(_))
    ));
}

#[test]
fn filter_step_noise_only_is_matched_filter() {
    let model = CovarianceModel::new(presets::noise_only()).unwrap();
    let ps = model.symbol_power();
    let s = vec![C64::new(ps.sqrt(), 0.0); model.dims().tx_len()];
    let factor = WaveformFactor::from_waveform(&s);
    let w = filter_step(&model, &factor).unwrap();
    let vt = model.apply_vt(&s).unwrap().normalize();
    let phase = inner(vt.as_slice(), w.as_vector().as_slice());
    assert!(rel_error(w.as_vector(), &(vt * phase)) < 1e-10);
}

#[test]
fn filter_step_beats_random_probes() {
    let model = small_model();
    let mut r = rng(3);
    let factor = WaveformFactor::random(2, model.dims().tx_len(), model.symbol_power(), &mut r);
    let w = filter_step(&model, &factor).unwrap();
    let best = rayleigh_quotient(&model, &factor, &w).unwrap();
    for _ in 0..100 {
        let probe = FilterVector::new(
            random_matrix(model.dims().rx_len(), 1, &mut r)
                .column(0)
                .into_owned(),
        )
        .unwrap();
        assert!(rayleigh_quotient(&model, &factor, &probe).unwrap() <= best * (1.0 + 1e-12));
    }
    // Same answer through the general solver.
    let q = model.qt_of_u(&factor).unwrap();
    let ru = model.ru_of_u(&factor).unwrap();
    let (lambda, _) = largest_generalized_eigpair(&q, &ru).unwrap();
    assert!((lambda - best).abs() < 1e-9 * best);
}

#[test]
fn mm_identity_form_keeps_start() {
    let mut r = rng(4);
    let start = WaveformFactor::random(2, 5, 0.2, &mut r);
    let out = mm_quadratic_maximize(&CMatrix::identity(5, 5), &start, 0.2, 1e-6, 50).unwrap();
    assert_eq!(out.objectives.len(), 2);
    assert!(
        rel_error(
            &CVector::from_column_slice(out.factor.matrix().as_slice()),
            &CVector::from_column_slice(start.matrix().as_slice())
        ) < 1e-15
    );
}

#[test]
fn mm_separable_form() {
    let k = CMatrix::from_diagonal(&CVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ]));
    let mut r = rng(5);
    for _ in 0..20 {
        let start = WaveformFactor::random(1, 2, 1.0, &mut r);
        let out = mm_quadratic_maximize(&k, &start, 1.0, 1e-9, 100).unwrap();
        assert!(out.objectives.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        // Columns only rescale their own direction, so the start is a fixed point.
        assert!(
            rel_error(
                &CVector::from_column_slice(out.factor.matrix().as_slice()),
                &CVector::from_column_slice(start.matrix().as_slice())
            ) < 1e-12
        );
        assert!(out.factor.max_column_deviation(1.0) < 1e-12);
    }
}

#[test]
fn mm_beats_random_feasible_points() {
    let mut r = rng(6);
    let k = random_hermitian(6, &mut r);
    let start = WaveformFactor::random(2, 6, 1.0, &mut r);
    let out = mm_quadratic_maximize(&k, &start, 1.0, 1e-10, 5000).unwrap();
    let best = *out.objectives.last().unwrap();
    assert!((best - out.factor.quadratic_trace(&k)).abs() < 1e-12 * best.abs().max(1.0));
    for _ in 0..1000 {
        let probe = WaveformFactor::random(2, 6, 1.0, &mut r);
        assert!(probe.quadratic_trace(&k) <= best + 1e-9);
    }
    assert!(out.factor.max_column_deviation(1.0) <= 1e-10);
}

#[test]
fn dinkelbach_without_clutter() {
    let mut s = presets::small(2, 2, 3, 2, 0, 1);
    s.clutter.patch_power = vec![0.0];
    let model = CovarianceModel::new(s).unwrap();
    let mut r = rng(7);
    let u = WaveformFactor::random(2, model.dims().tx_len(), model.symbol_power(), &mut r);
    let w = FilterVector::new(
        random_matrix(model.dims().rx_len(), 1, &mut r)
            .column(0)
            .into_owned(),
    )
    .unwrap();
    let out = dinkelbach_u_step(&model, &w, &u, &quick_config()).unwrap();
    // Denominator is β·e_t for every feasible U.
    let beta = model.beta(w.as_vector().as_slice());
    let q = model.qt_factor_of_w(&w).unwrap();
    let expected =
        (out.factor.matrix() * &q).norm_squared() / (beta * model.scenario().total_energy);
    assert!((out.ratios.last().unwrap() - expected).abs() < 1e-10 * expected);
    assert!(out.ratios.len() >= 2);
    assert!(out.ratios[1] >= out.ratios[0]);
}

#[test]
fn dinkelbach_beats_random_feasible_points() {
    let model = small_model();
    let mut r = rng(8);
    let n = model.dims().tx_len();
    let u = WaveformFactor::random(2, n, model.symbol_power(), &mut r);
    let w = FilterVector::new(
        random_matrix(model.dims().rx_len(), 1, &mut r)
            .column(0)
            .into_owned(),
    )
    .unwrap();
    let cfg = OptimizerConfig {
        eps_dinkelbach: 1e-10,
        eps_mm: 1e-12,
        max_mm: 5000,
        ..quick_config()
    };
    let out = dinkelbach_u_step(&model, &w, &u, &cfg).unwrap();
    let x = *out.ratios.last().unwrap();
    assert!(out
        .ratios
        .windows(2)
        .all(|p| p[1] >= p[0] - 1e-9 * p[1].abs()));
    assert!(out.entry_residuals.iter().all(|&e| e <= 1e-9));
    let q = model.qt_factor_of_w(&w).unwrap();
    let rw = model.ru_of_w(&w).unwrap();
    for _ in 0..1000 {
        let probe = WaveformFactor::random(2, n, model.symbol_power(), &mut r);
        let ratio = (probe.matrix() * &q).norm_squared() / probe.quadratic_trace(&rw);
        assert!(ratio <= x * (1.0 + 1e-9));
    }
}

#[test]
fn noise_only_design_reaches_closed_form() {
    let model = CovarianceModel::new(presets::noise_only()).unwrap();
    let out = cyclic_design(&model, &OptimizerConfig::default().with_seed(1)).unwrap();
    assert!(out.converged);
    assert!(
        (out.relaxed_sinr - 256.0).abs() <= 1e-6 * 256.0,
        "{}",
        out.relaxed_sinr
    );
    assert!((out.relaxed_sinr_db() - 24.082).abs() < 1e-3);
}

#[test]
fn design_trace_is_monotone_and_consistent() {
    let model = small_model();
    for seed in 0..5 {
        let out = cyclic_design(&model, &OptimizerConfig::default().with_seed(seed)).unwrap();
        assert!(out.trace.monotonicity_violations(1e-9).is_empty());
        assert!(out.trace.max_entry_residual() <= 1e-9);
        assert!(out.factor.max_column_deviation(model.symbol_power()) <= 1e-10);
        let rq = rayleigh_quotient(&model, &out.factor, &out.filter).unwrap();
        assert!((rq - out.relaxed_sinr).abs() <= 1e-9 * rq);
        assert_eq!(out.trace.wall_times.len(), out.trace.outer_iterations());
        assert_eq!(
            out.trace.outer_objectives.len(),
            out.trace.outer_iterations() + 1
        );
    }
}

#[test]
fn design_is_reproducible_for_a_seed() {
    let model = small_model();
    let cfg = OptimizerConfig::default().with_seed(42);
    let a = cyclic_design(&model, &cfg).unwrap();
    let b = cyclic_design(&model, &cfg).unwrap();
    assert_eq!(a.factor, b.factor);
    assert_eq!(a.trace.outer_objectives, b.trace.outer_objectives);
}

#[test]
fn fast_and_direct_routes_give_same_design() {
    let s = small_model().scenario().clone();
    let cfg = OptimizerConfig::default().with_seed(3);
    let fast = CovarianceModel::new(s.clone())
        .unwrap()
        .with_fast_covariance(FastCovariance::On);
    let direct = CovarianceModel::new(s)
        .unwrap()
        .with_fast_covariance(FastCovariance::Off);
    let a = cyclic_design(&fast, &cfg).unwrap();
    let b = cyclic_design(&direct, &cfg).unwrap();
    assert!((a.relaxed_sinr - b.relaxed_sinr).abs() < 1e-6 * a.relaxed_sinr);
}

#[test]
fn trace_csv_layout() {
    let trace = RunTrace {
        outer_objectives: vec![1.0, 2.0],
        dinkelbach_objectives: vec![vec![1.0, 2.0]],
        mm_objectives: vec![vec![vec![0.0, 0.5]]],
        mm_scales: vec![vec![1.0]],
        entry_residuals: vec![vec![0.0]],
        wall_times: vec![0.25],
    };
    let mut buf = Vec::new();
    trace.write_csv(&mut buf, false).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "outer_iter,dinkelbach_iter,mm_iter,objective,wall_time_s"
    );
    assert_eq!(lines.len(), 1 + 2 + 2 + 2);
    assert!(lines[1].starts_with("0,,,1.0"));
    assert!(lines[1].ends_with(",0"));
    assert!(lines[6].starts_with("0,0,1,5.0"));
}

#[test]
fn violations_are_reported() {
    let trace = RunTrace {
        outer_objectives: vec![1.0, 0.5],
        dinkelbach_objectives: vec![vec![1.0, 1.0 - 1e-12]],
        mm_objectives: vec![vec![vec![0.0, -1.0]]],
        mm_scales: vec![vec![1.0]],
        entry_residuals: vec![vec![0.0]],
        wall_times: vec![0.0],
    };
    let v = trace.monotonicity_violations(1e-9);
    assert_eq!(v.len(), 2);
    assert_eq!(v[0].level, "outer");
    assert_eq!(v[1].level, "mm");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mm_objective_never_decreases(seed in any::<u64>(), n in 2usize..8, rank in 1usize..4) {
        let mut r = rng(seed);
        let k = random_hermitian(n, &mut r);
        let start = WaveformFactor::random(rank, n, 0.5, &mut r);
        let out = mm_quadratic_maximize(&k, &start, 0.5, 1e-8, 200).unwrap();
        for w in out.objectives.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * (w[0].abs() + out.scale));
        }
        prop_assert!(out.factor.max_column_deviation(0.5) <= 1e-10);
    }
}
