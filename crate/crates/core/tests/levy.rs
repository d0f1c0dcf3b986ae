use levygauge::algebra::{su_basis, CMat, ONE};
use levygauge::geometry::{catalog, covariant_derivative, higgs_catalog, Connection, HiggsSpec, Metric, MetricKind};
use levygauge::levy::{
    endpoint_derivation, endpoint_series_oracle, kernel_diagonal, levy_divergence_b, levy_operator_cesaro_series,
    levy_operator_on_transport, levy_trace_cesaro, levy_trace_integral, trace_gap, Basis, Extrapolation, TraceConfig,
    TraceMode, WeightOperator,
};
use levygauge::numerics::simpson;
use levygauge::paths::{random_curve, Curve, Smoothness};
use levygauge::transport::{holonomy, KernelTriple, PathData, VolterraForm, FUNCTIONAL_FD_STEP};
use serde_json::json;

fn conn(name: &str) -> Connection {
    catalog(name, &json!({})).unwrap()
}

fn curve(seed: u64, m: usize) -> Curve {
    random_curve(seed, Smoothness::Fourier(3), m, 4, 0.5).unwrap()
}

fn gens() -> Vec<CMat> {
    su_basis(2)
}

fn zeros(d: usize) -> Vec<CMat> {
    vec![CMat::zeros(2); d * d]
}

/// Smooth synthetic triple on R^d: `W_μ(t) = (1 + μt)T_{μ mod 3}`,
/// `K^L_{μν} = δ_{μν}(1 + t² + μ/4)T_1`, `K^S_{01} = cos(t)T_2`.
fn synthetic(d: usize, m: usize, volterra: bool, levy: bool, singular: bool) -> KernelTriple {
    let t = gens();
    KernelTriple::synthetic(
        d,
        2,
        m,
        VolterraForm::Ordered,
        |s| {
            (0..d)
                .map(|mu| if volterra { t[mu % 3].scale(1.0 + mu as f64 * s) } else { CMat::zeros(2) })
                .collect()
        },
        |s| {
            let mut k = zeros(d);
            if levy {
                for mu in 0..d {
                    k[mu * d + mu] = t[0].scale(1.0 + s * s + mu as f64 / 4.0);
                }
            }
            k
        },
        |s| {
            let mut k = zeros(d);
            if singular {
                k[1] = t[1].scale(s.cos());
            }
            k
        },
    )
    .unwrap()
}

#[test]
fn integral_trace_of_simple_kernels() {
    let t = gens();
    let zero = KernelTriple::synthetic(4, 2, 64, VolterraForm::Ordered, |_| vec![CMat::zeros(2); 4], |_| zeros(4), |_| zeros(4)).unwrap();
    assert_eq!(levy_trace_integral(&zero, &Metric::euclidean(4)).unwrap().max_norm(), 0.0);

    let c = t[1].scale(0.7);
    let constant = KernelTriple::synthetic(
        4,
        2,
        64,
        VolterraForm::Ordered,
        |_| vec![CMat::zeros(2); 4],
        |_| {
            let mut k = zeros(4);
            for mu in 0..4 {
                k[mu * 4 + mu] = c.clone();
            }
            k
        },
        |_| zeros(4),
    )
    .unwrap();
    let eta = levy_trace_integral(&constant, &Metric::minkowski(4)).unwrap();
    assert!((&eta - &c.scale(-2.0)).max_norm() < 1e-14);

    let x = t[2].clone();
    let linear = KernelTriple::synthetic(
        4,
        2,
        64,
        VolterraForm::Ordered,
        |_| vec![CMat::zeros(2); 4],
        |s| {
            let mut k = zeros(4);
            k[0] = x.scale(s);
            k
        },
        |_| zeros(4),
    )
    .unwrap();
    let half = levy_trace_integral(&linear, &Metric::euclidean(4)).unwrap();
    assert!((&half - &x.scale(0.5)).max_norm() < 1e-10);
}

#[test]
fn cesaro_trace_agrees_with_integral_trace() {
    let k = synthetic(2, 16384, true, true, true);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 1024);
    let (series, integral) = trace_gap(&k, &cfg).unwrap();
    // raw means approach the integral like C/n
    for n in [64, 256, 1024] {
        let err = (series.mean(n) - &integral).frobenius();
        assert!(err * n as f64 <= 2.0, "n = {n}: {err}");
    }
    let p = series.decay_exponent(&integral, 64, 1024);
    assert!((0.8..=1.2).contains(&p), "exponent {p}");
    assert!(series.converged);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 512);
    let (series, _) = trace_gap(&k, &cfg).unwrap();
    assert!((&series.limit - &integral).frobenius() < 1e-3);
    assert!(series.converged);
}

#[test]
fn pure_volterra_trace_vanishes() {
    let k = synthetic(2, 8192, true, false, false);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 512);
    let (series, integral) = trace_gap(&k, &cfg).unwrap();
    assert_eq!(integral.max_norm(), 0.0);
    assert!(series.limit.frobenius() < 1e-4);
    let p = series.decay_exponent(&integral, 64, 512);
    assert!((0.8..=1.2).contains(&p), "exponent {p}");
}

#[test]
fn pure_singular_trace_is_exactly_zero() {
    let k = synthetic(4, 1024, false, false, true);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Minkowski, 64);
    let (series, _) = trace_gap(&k, &cfg).unwrap();
    assert!(series.means.iter().all(|m| m.max_norm() == 0.0));
}

#[test]
fn minkowski_flips_spatial_contributions() {
    let t = gens();
    let k = KernelTriple::synthetic(
        4,
        2,
        2048,
        VolterraForm::Ordered,
        |s| vec![CMat::zeros(2), t[0].scale(s), t[1].scale(1.0 - s), t[2].clone()],
        |s| {
            let mut k = zeros(4);
            k[4 + 1] = t[0].scale(s * s);
            k[2 * 4 + 3] = t[2].scale(s);
            k
        },
        |_| zeros(4),
    )
    .unwrap();
    let mut cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 64);
    cfg.extrapolation = Extrapolation::None;
    let diag = kernel_diagonal(&k, Basis::Sin);
    let delta = levy_trace_cesaro(&diag, 4, 2, &cfg).unwrap();
    cfg.metric = MetricKind::Minkowski;
    let eta = levy_trace_cesaro(&diag, 4, 2, &cfg).unwrap();
    for (a, b) in delta.means.iter().zip(&eta.means) {
        assert!((a + b).max_norm() < 1e-10);
    }
}

#[test]
fn weighted_f_basis_trace() {
    let k = synthetic(2, 16384, true, true, true);
    let integral = levy_trace_integral(&k, &Metric::euclidean(2)).unwrap();
    // R = πN maps f_n to e_{n−1} and reproduces the integral trace
    let cfg = TraceConfig::new(Basis::F, MetricKind::Euclidean, 1025).with_weight(WeightOperator::ScaledNumber(std::f64::consts::PI));
    let (series, _) = trace_gap(&k, &cfg).unwrap();
    let p = series.decay_exponent(&integral, 65, 1025);
    assert!((0.8..=1.2).contains(&p), "exponent {p}");
    let cfg = TraceConfig { n_max: 513, ..cfg };
    let (series, _) = trace_gap(&k, &cfg).unwrap();
    assert!((&series.limit - &integral).frobenius() < 1e-3);
    // the literal R = N gives the integral trace divided by π²
    let literal = TraceConfig::new(Basis::F, MetricKind::Euclidean, 512).with_weight(WeightOperator::Number);
    let (lit, _) = trace_gap(&k, &literal).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((&lit.limit.scale(pi2) - &integral).frobenius() < 1e-3);
    assert!(TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 64).with_weight(WeightOperator::Number).validate().is_err());
}

#[test]
fn cesaro_series_csv_has_expected_columns() {
    let k = synthetic(2, 512, true, true, false);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 16);
    let (series, integral) = trace_gap(&k, &cfg).unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf, Some(&integral)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("n,mean_norm,limit_norm,error\n"));
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn levy_operator_vanishes_for_zero_connection() {
    let a = conn("zero");
    let c = curve(1, 256);
    let data = PathData::new(&a, &c).unwrap();
    let g = Metric::euclidean(4);
    assert_eq!(levy_operator_on_transport(&data, &g, &TraceMode::Integral).unwrap().max_norm(), 0.0);
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 16);
    let s = levy_operator_cesaro_series(&a, &c, &cfg).unwrap();
    assert!(s.means.iter().all(|m| m.max_norm() == 0.0));
    assert_eq!(levy_divergence_b(&data, &g, &TraceMode::Integral).unwrap().max_norm(), 0.0);
}

#[test]
fn instanton_is_harmonic_in_both_modes() {
    let a = conn("bpst_instanton");
    let c = curve(2, 1024);
    let data = PathData::new(&a, &c).unwrap();
    let g = Metric::euclidean(4);
    let integral = levy_operator_on_transport(&data, &g, &TraceMode::Integral).unwrap();
    assert!(integral.max_norm() <= 1e-7, "{}", integral.max_norm());
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 256);
    let s = levy_operator_cesaro_series(&a, &c, &cfg).unwrap();
    assert!(s.limit.frobenius() <= 5e-2, "{}", s.limit.frobenius());
    assert!(s.mean(256).frobenius() < s.mean(64).frobenius());
}

#[test]
fn agv_identity_on_a_non_vacuum_connection() {
    let a = conn("random_polynomial");
    let c = curve(3, 1024);
    let data = PathData::new(&a, &c).unwrap();
    let g = Metric::euclidean(4);
    let integral = levy_operator_on_transport(&data, &g, &TraceMode::Integral).unwrap();
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 256);
    let s = levy_operator_cesaro_series(&a, &c, &cfg).unwrap();
    let rel = (&s.limit - &integral).frobenius() / (1.0 + integral.frobenius());
    assert!(rel <= 5e-2, "relative gap {rel}, |integral| = {}", integral.frobenius());
    let e = s.errors(&integral);
    assert!(e[255] < e[127] && e[127] < e[63], "{} {} {}", e[63], e[127], e[255]);
}

#[test]
fn planted_current_matches_sourced_transport_integral() {
    let a = conn("abelian_planted_current");
    let current = a.info().current.clone().unwrap();
    let metric = Metric::new(current.metric, 4);
    for seed in 0..3 {
        let c = curve(seed, 1024);
        let data = PathData::new(&a, &c).unwrap();
        let lhs = levy_operator_on_transport(&data, &metric, &TraceMode::Integral).unwrap();
        let t = data.table();
        let samples: Vec<CMat> = (0..=1024)
            .map(|i| {
                let j = (current.eval)(c.node(i));
                let mut x = CMat::zeros(a.fiber());
                for (jn, vn) in j.iter().zip(data.velocity(i)) {
                    x.axpy(-vn, jn);
                }
                t.between(1024, i).matmul(&x).matmul(t.at(i))
            })
            .collect();
        let rhs = simpson(&samples).unwrap();
        assert!((&lhs - &rhs).max_norm() <= 1e-8);
        assert!(lhs.max_norm() > 1e-3);
    }
}

#[test]
fn divergence_of_b_is_the_transported_levy_operator() {
    for name in ["random_polynomial", "bpst_instanton", "abelian_planted_current", "null_plane_wave"] {
        let a = conn(name);
        for (seed, g) in [(0u64, Metric::euclidean(4)), (1, Metric::minkowski(4))] {
            let c = curve(seed, 512);
            let data = PathData::new(&a, &c).unwrap();
            let lap = levy_operator_on_transport(&data, &g, &TraceMode::Integral).unwrap();
            let div = levy_divergence_b(&data, &g, &TraceMode::Integral).unwrap();
            let transported = data.table().inverse_holonomy().matmul(&lap);
            assert!((&div - &transported).frobenius() / (1.0 + lap.frobenius()) <= 1e-9);
        }
    }
}

#[test]
fn vacuum_connections_give_conserved_currents() {
    for (name, g) in [("bpst_instanton", Metric::euclidean(4)), ("null_plane_wave", Metric::minkowski(4))] {
        let a = conn(name);
        let c = curve(5, 1024);
        let data = PathData::new(&a, &c).unwrap();
        let div = levy_divergence_b(&data, &g, &TraceMode::Integral).unwrap();
        assert!(div.max_norm() <= 1e-7, "{name}: {}", div.max_norm());
    }
}

#[test]
fn divergence_cesaro_mode_tracks_integral_mode() {
    let a = conn("random_polynomial");
    let c = curve(6, 256);
    let data = PathData::new(&a, &c).unwrap();
    let g = Metric::euclidean(4);
    let integral = levy_divergence_b(&data, &g, &TraceMode::Integral).unwrap();
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 32);
    let ces = levy_divergence_b(&data, &g, &TraceMode::Cesaro(cfg)).unwrap();
    assert!((&ces - &integral).frobenius() / (1.0 + integral.frobenius()) < 5e-2);
}

#[test]
fn endpoint_derivation_of_endpoint_functions() {
    let c = curve(7, 256);
    let f = |x: &[f64]| x[0].sin() + x[1] * x[1] * x[2] - 0.5 * x[3];
    let grad = |x: &[f64]| vec![x[0].cos(), 2.0 * x[1] * x[2], x[1] * x[1], -0.5];
    let phi = |s: &Curve| Ok(f(s.endpoint()));
    let h = [0.3, -1.0, 0.5, 2.0];
    let est = endpoint_derivation(&phi, &c, &h, FUNCTIONAL_FD_STEP).unwrap();
    let exact: f64 = grad(c.endpoint()).iter().zip(&h).map(|(g, h)| g * h).sum();
    assert!((est.value - exact).abs() < 1e-8, "{} vs {exact}", est.value);
    let constant = |_: &Curve| Ok(3.5f64);
    assert_eq!(endpoint_derivation(&constant, &c, &h, FUNCTIONAL_FD_STEP).unwrap().value, 0.0);
}

#[test]
fn endpoint_derivation_of_the_higgs_functional() {
    let a = conn("random_polynomial");
    let phi = higgs_catalog(&HiggsSpec::RandomPolynomial {
        dim: 4,
        fiber: 2,
        seed: 3,
        scale: 0.5,
    })
    .unwrap();
    let c = curve(8, 256);
    let functional = |s: &Curve| {
        let u = holonomy(&a, s)?;
        Ok(u.adjoint().matmul(&phi.value(s.endpoint())).matmul(&u))
    };
    let u = holonomy(&a, &c).unwrap();
    for nu in 0..4 {
        let mut h = [0.0; 4];
        h[nu] = 1.0;
        let est = endpoint_derivation(&functional, &c, &h, FUNCTIONAL_FD_STEP).unwrap();
        let cov = covariant_derivative(&a, &phi, c.endpoint(), nu).unwrap();
        let exact = u.adjoint().matmul(&cov).matmul(&u);
        assert!((&est.value - &exact).max_norm() < 1e-6, "ν = {nu}: {}", (&est.value - &exact).max_norm());
    }
    // the series form of the endpoint atom agrees to its slower rate
    let h = [0.0, 1.0, 0.0, 0.0];
    let series = endpoint_series_oracle(&functional, &c, &h, 64, FUNCTIONAL_FD_STEP).unwrap();
    let exact = u.adjoint().matmul(&covariant_derivative(&a, &phi, c.endpoint(), 1).unwrap()).matmul(&u);
    assert!((&series - &exact).max_norm() < 1e-3, "{}", (&series - &exact).max_norm());
    let _ = ONE;
}

#[test]
fn stalled_tail_is_accepted_and_divergent_tail_rejected() {
    let x = su_basis(2)[0].clone();
    let cfg = TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 128);
    // terms growing like k⁴ but far below the fit tolerance: no power law,
    // yet the means have stalled
    let small = |_mu: usize, k: usize| Ok(x.scale(1e-14 * (k as f64).powi(4)));
    let s = levy_trace_cesaro(&small, 1, 2, &cfg).unwrap();
    assert!(s.converged);
    assert_eq!(&s.limit, s.mean(128));
    assert!(s.exponent.is_none());
    let large = |_mu: usize, k: usize| Ok(x.scale(1e-4 * (k as f64).powi(2)));
    let s = levy_trace_cesaro(&large, 1, 2, &cfg).unwrap();
    assert!(!s.converged);
    // the operator of transport on a flat connection is exactly zero; the
    // difference route leaves a small discretization bias
    let c = curve(11, 1024);
    let s = levy_operator_cesaro_series(&conn("pure_gauge"), &c, &TraceConfig::new(Basis::Sin, MetricKind::Euclidean, 64)).unwrap();
    assert!(s.converged);
    assert!(s.limit.max_norm() < 1e-4, "{}", s.limit.max_norm());
}
