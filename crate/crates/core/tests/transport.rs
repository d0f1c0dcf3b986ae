use levygauge::algebra::{su_basis, CMat};
use levygauge::geometry::{catalog, Connection, GaugePotential};
use levygauge::numerics::{loglog_slope, simpson};
use levygauge::paths::{f_basis, needle, random_curve, sin_basis, Curve, Smoothness, Variation};
use levygauge::transport::{
    closedness_residual, holonomy, one_form_b_from_two_form, PathData, PlantedOneForm, TransportOneForm, TransportTable,
    FUNCTIONAL_FD_STEP,
};
use levygauge::Error;
use serde_json::json;

fn conn(name: &str) -> Connection {
    catalog(name, &json!({})).unwrap()
}

fn curve(seed: u64, m: usize) -> Curve {
    random_curve(seed, Smoothness::Fourier(3), m, 4, 0.5).unwrap()
}

fn combo(m: usize) -> Variation {
    let a = sin_basis(1, 0, 4, m).unwrap();
    let b = sin_basis(3, 2, 4, m).unwrap();
    let c = sin_basis(2, 1, 4, m).unwrap();
    Variation::combine(&[(0.7, &a), (-0.4, &b), (0.3, &c)]).unwrap()
}

fn combo2(m: usize) -> Variation {
    let a = sin_basis(2, 3, 4, m).unwrap();
    let b = sin_basis(1, 1, 4, m).unwrap();
    Variation::combine(&[(0.5, &a), (0.6, &b)]).unwrap()
}

#[test]
fn zero_connection_transports_trivially() {
    let a = conn("zero");
    let c = curve(1, 64);
    let data = PathData::new(&a, &c).unwrap();
    for i in 0..=64 {
        assert_eq!(data.table().at(i), &CMat::identity(2));
    }
    let u = combo(64);
    assert_eq!(data.first_derivative(&u).unwrap().max_norm(), 0.0);
    assert_eq!(data.one_form_b(&u).unwrap().entries().max_norm(), 0.0);
    let k = data.kernels();
    assert_eq!(k.bilinear(&u, &u).unwrap().max_norm(), 0.0);
    assert_eq!(data.first_derivative(&Variation::zero(4, 64).unwrap()).unwrap().max_norm(), 0.0);
}

#[test]
fn abelian_transport_matches_exponential_oracle() {
    for name in ["abelian_linear", "abelian_planted_current"] {
        let a = conn(name);
        let c = curve(5, 1024);
        let u = holonomy(&a, &c).unwrap();
        let fine = 8192;
        let samples: Vec<CMat> = (0..=fine)
            .map(|i| {
                let (x, v) = c.evaluate(i as f64 / fine as f64);
                let pot = a.potential(&x);
                let mut g = CMat::zeros(a.fiber());
                for (am, vm) in pot.iter().zip(&v) {
                    g.axpy(*vm, am);
                }
                g
            })
            .collect();
        let oracle = simpson(&samples).unwrap().scale(-1.0).expm();
        assert!((&u - &oracle).max_norm() < 1e-9, "{name}: {}", (&u - &oracle).max_norm());
    }
}

#[test]
fn composition_through_the_shared_table() {
    let a = conn("bpst_instanton");
    let c = curve(2, 1024);
    let t = TransportTable::new(&a, &c).unwrap();
    let split = t.between(1024, 512).matmul(&t.between(512, 0));
    assert!((&split - t.holonomy()).max_norm() < 1e-13);
    assert!((t.at(1024) - t.holonomy()).max_norm() == 0.0);
}

#[test]
fn unitarity_drift_converges_at_fourth_order() {
    let a = conn("bpst_instanton");
    let ms = [16usize, 32, 64, 128];
    let drifts: Vec<f64> = ms
        .iter()
        .map(|&m| {
            let c = random_curve(9, Smoothness::Fourier(3), m, 4, 1.5).unwrap();
            TransportTable::with_drift_bound(&a, &c, 1.0).unwrap().drift()
        })
        .collect();
    let ns: Vec<f64> = ms.iter().map(|m| *m as f64).collect();
    let order = -loglog_slope(&ns, &drifts);
    assert!(order >= 3.5, "order {order}, drifts {drifts:?}");
}

#[test]
fn drift_stays_small_on_catalog_inputs() {
    for name in ["bpst_instanton", "random_polynomial", "pure_gauge", "null_plane_wave", "abelian_planted_current"] {
        let a = conn(name);
        for seed in 0..3 {
            let t = TransportTable::new(&a, &curve(seed, 1024)).unwrap();
            assert!(t.drift() <= 1e-10, "{name}: {}", t.drift());
        }
    }
}

#[test]
fn excessive_drift_is_reported() {
    let a = catalog("random_polynomial", &json!({"scale": 40.0})).unwrap();
    let c = random_curve(1, Smoothness::Fourier(3), 16, 4, 3.0).unwrap();
    match TransportTable::new(&a, &c) {
        Err(Error::Drift { cells, .. }) => assert_eq!(cells, 16),
        other => panic!("expected drift error, got {other:?}"),
    }
}

#[test]
fn inverse_transport_solves_the_initial_point_equation() {
    // d/ds U_{1,s} = U_{1,s}A_μ(σ(s))σ̇^μ(s)
    let a = conn("random_polynomial");
    let c = curve(4, 1024);
    let t = TransportTable::new(&a, &c).unwrap();
    let h = 1.0 / 1024.0;
    for i in [100usize, 512, 900] {
        let lhs = (t.between(1024, i + 1) - t.between(1024, i - 1)).scale(0.5 / h);
        let pot = a.potential(c.node(i));
        let mut g = CMat::zeros(2);
        for (am, vm) in pot.iter().zip(c.node_velocity(i)) {
            g.axpy(vm, am);
        }
        let rhs = t.between(1024, i).matmul(&g);
        assert!((&lhs - &rhs).max_norm() < 1e-5 * (1.0 + rhs.max_norm()));
    }
}

fn order_sweep(errors: &[f64], eps: &[f64]) -> f64 {
    loglog_slope(eps, errors)
}

#[test]
fn first_derivative_matches_functional_differences() {
    let m = 1024;
    for name in ["random_polynomial", "bpst_instanton"] {
        let a = conn(name);
        let c = curve(11, m);
        let data = PathData::new(&a, &c).unwrap();
        // includes a needle so the endpoint term participates
        let n = needle(&[0.3, -0.2, 0.1, 0.4], 8, m).unwrap();
        let u = Variation::combine(&[(1.0, &combo(m)), (1.0, &n)]).unwrap();
        let exact = data.first_derivative(&u).unwrap();
        let eps = [0.04, 0.02, 0.01, 0.005];
        let errors: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let p = holonomy(&a, &c.displaced(&[(e, &u)]).unwrap()).unwrap();
                let q = holonomy(&a, &c.displaced(&[(-e, &u)]).unwrap()).unwrap();
                ((p - q).scale(0.5 / e) - exact.clone()).max_norm()
            })
            .collect();
        let order = order_sweep(&errors, &eps);
        assert!(order >= 1.8, "{name}: order {order}, errors {errors:?}");
    }
}

#[test]
fn second_derivative_kernels_match_hessian_stencil() {
    let m = 1024;
    for name in ["random_polynomial", "bpst_instanton"] {
        let a = conn(name);
        let c = curve(12, m);
        let data = PathData::new(&a, &c).unwrap();
        let k = data.kernels();
        let (u, v) = (combo(m), combo2(m));
        let exact = k.bilinear(&u, &v).unwrap();
        let eps = [0.04, 0.02, 0.01];
        let errors: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let at = |s: f64, r: f64| holonomy(&a, &c.displaced(&[(s, &u), (r, &v)]).unwrap()).unwrap();
                let fd = (at(e, e) - at(e, -e) - at(-e, e) + at(-e, -e)).scale(0.25 / (e * e));
                (fd - exact.clone()).max_norm()
            })
            .collect();
        let order = order_sweep(&errors, &eps);
        assert!(order >= 1.8, "{name}: order {order}, errors {errors:?}");
        // symmetry of the bilinear form
        let swapped = k.bilinear(&v, &u).unwrap();
        assert!((&swapped - &exact).max_norm() < 1e-12);
    }
}

#[test]
fn kernel_symmetries_are_exact() {
    let a = conn("random_polynomial");
    let c = curve(3, 64);
    let k = PathData::new(&a, &c).unwrap().kernels();
    for i in [0, 17, 64] {
        for mu in 0..4 {
            for nu in 0..4 {
                assert_eq!(k.levy(i, mu, nu), k.levy(i, nu, mu));
                assert_eq!(k.singular(i, mu, nu), -k.singular(i, nu, mu));
            }
        }
    }
}

#[test]
fn non_endpoint_free_variations_are_rejected_by_kernels() {
    let a = conn("bpst_instanton");
    let c = curve(3, 64);
    let data = PathData::new(&a, &c).unwrap();
    let k = data.kernels();
    let f1 = f_basis(1, 0, 4, 64).unwrap();
    assert!(matches!(k.bilinear(&f1, &combo(64)), Err(Error::NotEndpointFree(_))));
    assert!(data.one_form_b_endpoint_free(&f1).is_err());
}

#[test]
fn one_form_routes_agree() {
    let m = 256;
    for name in ["random_polynomial", "bpst_instanton", "abelian_linear"] {
        let a = conn(name);
        let c = curve(21, m);
        let data = PathData::new(&a, &c).unwrap();
        let u = combo(m);
        let b = data.one_form_b(&u).unwrap();
        let e0 = data.one_form_b_endpoint_free(&u).unwrap();
        assert!((b.entries() - e0.entries()).max_norm() < 1e-9);
        let nested = one_form_b_from_two_form(&a, &c, &u).unwrap();
        assert!((b.entries() - nested.entries()).max_norm() < 1e-7, "{name}");
        if a.info().traceless {
            assert!(b.entries().anti_hermitian_defect() < 1e-10);
            assert!(b.entries().trace().norm() < 1e-10);
        }
    }
}

#[test]
fn derivative_of_one_form_matches_commutator_kernels() {
    let m = 1024;
    let a = conn("random_polynomial");
    let c = curve(31, m);
    let data = PathData::new(&a, &c).unwrap();
    let r = data.kernels().b_frame().unwrap();
    let (u, v) = (combo(m), combo2(m));
    let exact = r.bilinear(&u, &v).unwrap();
    let fd = levygauge::transport::directional_derivative_of_form(
        &TransportOneForm(&a),
        &c,
        &u,
        &v,
        levygauge::transport::functional_step(FUNCTIONAL_FD_STEP, &c) * 10.0,
    )
    .unwrap();
    assert!((&fd - &exact).max_norm() < 1e-5 * (1.0 + exact.max_norm()), "{}", (&fd - &exact).max_norm());
}

struct Rotated {
    inner: Connection,
    b: CMat,
    b_inv: CMat,
}

impl GaugePotential for Rotated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn fiber(&self) -> usize {
        self.inner.fiber()
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        self.inner.potential(x).iter().map(|a| self.b_inv.matmul(a).matmul(&self.b)).collect()
    }
}

#[test]
fn constant_gauge_rotation_conjugates_transport() {
    let a = conn("random_polynomial");
    let t = su_basis(2);
    let mut gen = t[0].scale(0.7);
    gen.axpy(-1.1, &t[2]);
    let b = gen.expm();
    let rot = Connection::new(Rotated {
        inner: a.clone(),
        b: b.clone(),
        b_inv: b.adjoint(),
    });
    let c = curve(8, 512);
    let u = holonomy(&a, &c).unwrap();
    let ur = holonomy(&rot, &c).unwrap();
    let expected = b.adjoint().matmul(&u).matmul(&b);
    assert!((&ur - &expected).max_norm() < 1e-12);
}

#[test]
fn transport_one_form_is_closed() {
    let m = 256;
    for name in ["random_polynomial", "bpst_instanton", "null_plane_wave", "pure_gauge", "abelian_planted_current"] {
        let a = conn(name);
        let c = curve(41, m);
        let (u, v) = (combo(m), combo2(m));
        let step = levygauge::transport::functional_step(10.0 * FUNCTIONAL_FD_STEP, &c);
        let r = closedness_residual(&TransportOneForm(&a), &c, &u, &v, step).unwrap();
        assert!(r.max_norm() <= 1e-6, "{name}: {}", r.max_norm());
        let same = closedness_residual(&TransportOneForm(&a), &c, &u, &u, step).unwrap();
        assert!(same.max_norm() <= 1e-12);
    }
}

#[test]
fn planted_non_closed_form_is_detected() {
    let m = 256;
    let x = su_basis(2).swap_remove(1);
    let mut p = vec![0.0; 16];
    p[1 * 4 + 0] = 0.8; // P_{10}
    p[0 * 4 + 1] = -0.3; // P_{01}
    p[2 * 4 + 3] = 0.5;
    let form = PlantedOneForm { p, x: x.clone() };
    let c = curve(7, m);
    for (k, l) in [(1usize, 1usize), (2, 3), (3, 3)] {
        let u = sin_basis(k, 0, 4, m).unwrap();
        let v = sin_basis(l, 1, 4, m).unwrap();
        let r = closedness_residual(&form, &c, &u, &v, 1e-3).unwrap();
        // analytic: (P_{10} − P_{01})·δ_{kl}·X
        let expected = if k == l { x.scale(0.8 + 0.3) } else { CMat::zeros(2) };
        assert!((&r - &expected).max_norm() < 1e-8, "{k},{l}: {}", (&r - &expected).max_norm());
        let planted = form.planted_residual(&u, &v).unwrap();
        assert!((&r - &planted).max_norm() < 1e-8);
    }
}

#[test]
fn closedness_rejects_endpoint_variations() {
    let a = conn("zero");
    let c = curve(1, 64);
    let n = needle(&[1.0, 0.0, 0.0, 0.0], 8, 64).unwrap();
    assert!(closedness_residual(&TransportOneForm(&a), &c, &n, &combo(64), 1e-3).is_err());
}
