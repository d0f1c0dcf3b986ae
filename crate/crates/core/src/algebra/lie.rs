use serde::{Deserialize, Serialize};

use super::{CMat, C64, I, ONE};
use crate::error::{Error, Result};

/// Absolute max-norm tolerance for the anti-Hermitian / traceless tag checks.
pub const DEFAULT_TAG_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTag {
    /// Anti-Hermitian.
    U,
    /// Anti-Hermitian and traceless.
    Su,
    General,
}

/// A matrix carrying a Lie-algebra membership tag that was checked on
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieMatrix {
    entries: CMat,
    tag: GroupTag,
}

impl LieMatrix {
    pub fn new(entries: CMat, tag: GroupTag) -> Result<Self> {
        Self::with_tolerance(entries, tag, DEFAULT_TAG_TOLERANCE)
    }

    pub fn with_tolerance(entries: CMat, tag: GroupTag, tolerance: f64) -> Result<Self> {
        check_tag(&entries, tag, tolerance)?;
        Ok(Self { entries, tag })
    }

    pub fn general(entries: CMat) -> Self {
        Self {
            entries,
            tag: GroupTag::General,
        }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }
}

pub(crate) fn check_tag(x: &CMat, tag: GroupTag, tolerance: f64) -> Result<()> {
    match tag {
        GroupTag::General => Ok(()),
        GroupTag::U | GroupTag::Su => {
            let defect = x.anti_hermitian_defect();
            if defect > tolerance {
                return Err(Error::NotAntiHermitian { defect, tolerance });
            }
            if tag == GroupTag::Su {
                let tr = x.trace().norm();
                if tr > tolerance {
                    return Err(Error::NotTraceless {
                        defect: tr,
                        tolerance,
                    });
                }
            }
            Ok(())
        }
    }
}

/// `[X, Y] = XY − YX`. The tag of the result is the weaker of the two input
/// tags, except that u(N) brackets land in su(N).
pub fn commutator(x: &LieMatrix, y: &LieMatrix) -> Result<LieMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let tag = match (x.tag, y.tag) {
        (GroupTag::General, _) | (_, GroupTag::General) => GroupTag::General,
        _ => GroupTag::Su,
    };
    Ok(LieMatrix {
        entries: x.entries.commutator(&y.entries),
        tag,
    })
}

/// Orthogonal projection u(N) → su(N): `X − (tr X / N) I`.
pub fn project_su(x: &LieMatrix) -> Result<LieMatrix> {
    let defect = x.entries.anti_hermitian_defect();
    if defect > DEFAULT_TAG_TOLERANCE * (1.0 + x.entries.max_norm()) {
        return Err(Error::NotAntiHermitian {
            defect,
            tolerance: DEFAULT_TAG_TOLERANCE,
        });
    }
    Ok(LieMatrix {
        entries: project_su_raw(&x.entries),
        tag: GroupTag::Su,
    })
}

pub(crate) fn project_su_raw(x: &CMat) -> CMat {
    let n = x.dim();
    let shift = x.trace() / n as f64;
    let mut out = x.clone();
    for i in 0..n {
        out.set(i, i, out.get(i, i) - shift);
    }
    out
}

/// Anti-Hermitian basis `T_a = −i λ_a / 2` of su(N) built from the
/// generalised Gell-Mann matrices. For N = 2 this gives `[T_a, T_b] = ε_abc T_c`.
pub fn su_basis(n: usize) -> Vec<CMat> {
    let half_i = C64::new(0.0, -0.5);
    let mut basis = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in (j + 1)..n {
            // symmetric
            let mut s = CMat::zeros(n);
            s.set(j, k, ONE);
            s.set(k, j, ONE);
            basis.push(s.scale_c(half_i));
            // antisymmetric
            let mut a = CMat::zeros(n);
            a.set(j, k, -I);
            a.set(k, j, I);
            basis.push(a.scale_c(half_i));
        }
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = CMat::zeros(n);
        for m in 0..l {
            d.set(m, m, C64::new(norm, 0.0));
        }
        d.set(l, l, C64::new(-(l as f64) * norm, 0.0));
        basis.push(d.scale_c(half_i));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ZERO;
    use proptest::prelude::*;

    fn pauli_i(k: usize) -> CMat {
        let p = match k {
            0 => CMat::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            1 => CMat::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
            _ => CMat::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        };
        p.scale_c(I)
    }

    fn random_u(n: usize, seed: &[f64]) -> CMat {
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()] * (1.0 + 0.37 * k as f64).sin()
        };
        let h = CMat::from_fn(n, |_, _| C64::new(next(), next()));
        // X = (H − H*)/2 is anti-Hermitian
        (&h - &h.adjoint()).scale(0.5)
    }

    #[test]
    fn commutator_with_itself_vanishes() {
        let x = LieMatrix::new(pauli_i(0), GroupTag::Su).unwrap();
        let c = commutator(&x, &x).unwrap();
        assert_eq!(c.entries().max_norm(), 0.0);
    }

    #[test]
    fn pauli_commutator_matches_direct_product() {
        let x = LieMatrix::new(pauli_i(0), GroupTag::Su).unwrap();
        let y = LieMatrix::new(pauli_i(1), GroupTag::Su).unwrap();
        let c = commutator(&x, &y).unwrap();
        // direct 2x2 products: (iσ1)(iσ2) = -σ1σ2 = -iσ3 ; (iσ2)(iσ1) = iσ3
        let xy = CMat::from_rows(&[&[-I, ZERO], &[ZERO, I]]);
        let yx = CMat::from_rows(&[&[I, ZERO], &[ZERO, -I]]);
        assert!((c.entries() - &(&xy - &yx)).max_norm() < 1e-15);
        // which is -2 iσ3
        assert!((c.entries() - &pauli_i(2).scale(-2.0)).max_norm() < 1e-15);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let x = LieMatrix::general(CMat::identity(2));
        let y = LieMatrix::general(CMat::identity(3));
        assert!(matches!(commutator(&x, &y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tag_checks_reject_bad_input() {
        assert!(matches!(
            LieMatrix::new(CMat::identity(2), GroupTag::U),
            Err(Error::NotAntiHermitian { .. })
        ));
        assert!(matches!(
            LieMatrix::new(CMat::scalar(2, I), GroupTag::Su),
            Err(Error::NotTraceless { .. })
        ));
        assert!(LieMatrix::new(CMat::scalar(2, I), GroupTag::U).is_ok());
    }

    #[test]
    fn project_su_examples() {
        let x = LieMatrix::new(pauli_i(2), GroupTag::U).unwrap();
        assert_eq!(project_su(&x).unwrap().entries(), &pauli_i(2));

        let pure_trace = LieMatrix::new(CMat::scalar(3, I), GroupTag::U).unwrap();
        assert!(project_su(&pure_trace).unwrap().entries().max_norm() < 1e-16);

        let d = LieMatrix::new(CMat::diag(&[I, ZERO]), GroupTag::U).unwrap();
        let p = project_su(&d).unwrap();
        let expected = CMat::diag(&[I * 0.5, -I * 0.5]);
        assert!((p.entries() - &expected).max_norm() < 1e-16);
        // orthogonal to the centre
        assert!(p.entries().frobenius_inner(&CMat::scalar(2, I)).abs() < 1e-16);

        assert!(project_su(&LieMatrix::general(CMat::identity(2))).is_err());
    }

    #[test]
    fn su2_basis_structure_constants() {
        let t = su_basis(2);
        assert_eq!(t.len(), 3);
        // [T1, T2] = T3 etc.
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            assert!((t[a].commutator(&t[b]) - t[c].clone()).max_norm() < 1e-15);
        }
    }

    #[test]
    fn su_basis_is_orthogonal_and_traceless() {
        for n in 2..=4 {
            let t = su_basis(n);
            assert_eq!(t.len(), n * n - 1);
            for (a, ta) in t.iter().enumerate() {
                check_tag(ta, GroupTag::Su, 1e-14).unwrap();
                for (b, tb) in t.iter().enumerate() {
                    let ip = ta.frobenius_inner(tb);
                    let expected = if a == b { 0.5 } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-14, "n={n} a={a} b={b} ip={ip}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn project_su_idempotent_and_self_adjoint(
            a in proptest::collection::vec(-2.0f64..2.0, 8),
            b in proptest::collection::vec(-2.0f64..2.0, 8),
            n in 2usize..=4,
        ) {
            let x = random_u(n, &a);
            let y = random_u(n, &b);
            let px = project_su_raw(&x);
            let py = project_su_raw(&y);
            prop_assert!((project_su_raw(&px) - px.clone()).max_norm() < 1e-14);
            prop_assert!((px.frobenius_inner(&y) - x.frobenius_inner(&py)).abs() < 1e-12);
        }

        #[test]
        fn su_commutators_close(
            a in proptest::collection::vec(-2.0f64..2.0, 8),
            b in proptest::collection::vec(-2.0f64..2.0, 8),
            n in 2usize..=4,
        ) {
            let x = LieMatrix::new(project_su_raw(&random_u(n, &a)), GroupTag::Su).unwrap();
            let y = LieMatrix::new(project_su_raw(&random_u(n, &b)), GroupTag::Su).unwrap();
            let c = commutator(&x, &y).unwrap();
            prop_assert!(check_tag(c.entries(), GroupTag::Su, 1e-13).is_ok());
            let r = commutator(&y, &x).unwrap();
            prop_assert!((c.entries() + r.entries()).max_norm() < 1e-15);
        }
    }
}
