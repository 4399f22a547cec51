//! Exact population moments of polynomials in independent standard normals.
//!
//! Used as an independent route to the probability limits: structural
//! variables are expanded as polynomials in the exogenous draws, covariances
//! are exact Gaussian moments and regressions solve the population normal
//! equations.

#![allow(dead_code)]

use std::collections::BTreeMap;

use causal_tradeoff::{ScenarioKind, ScenarioSpec};
use nalgebra::{DMatrix, DVector};

const K: usize = 6;
pub const U: usize = 0;
pub const W: usize = 1;
pub const Z: usize = 2;
pub const EX: usize = 3;
pub const EY: usize = 4;
pub const EZ: usize = 5;

#[derive(Clone, Debug, Default)]
pub struct Poly(BTreeMap<[u8; K], f64>);

impl Poly {
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; K];
        e[i] = 1;
        Poly(BTreeMap::from([(e, 1.0)]))
    }

    pub fn constant(c: f64) -> Self {
        Poly(BTreeMap::from([([0u8; K], c)]))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.0.clone();
        for (k, v) in &other.0 {
            *out.entry(*k).or_insert(0.0) += v;
        }
        Poly(out)
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly(self.0.iter().map(|(k, v)| (*k, v * c)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out: BTreeMap<[u8; K], f64> = BTreeMap::new();
        for (ka, va) in &self.0 {
            for (kb, vb) in &other.0 {
                let mut k = [0u8; K];
                for i in 0..K {
                    k[i] = ka[i] + kb[i];
                }
                *out.entry(k).or_insert(0.0) += va * vb;
            }
        }
        Poly(out)
    }

    pub fn expect(&self) -> f64 {
        self.0
            .iter()
            .map(|(k, v)| {
                k.iter().fold(*v, |acc, &p| {
                    if p % 2 == 1 {
                        0.0
                    } else {
                        acc * (1..p).step_by(2).map(f64::from).product::<f64>()
                    }
                })
            })
            .sum()
    }
}

/// Sum of `coef * term`.
pub fn lin(terms: &[(f64, &Poly)]) -> Poly {
    terms.iter().fold(Poly::default(), |acc, (c, p)| acc.add(&p.scale(*c)))
}

pub fn cov(a: &Poly, b: &Poly) -> f64 {
    a.mul(b).expect() - a.expect() * b.expect()
}

/// Population OLS coefficients of `y` on `xs` (with implicit centering).
pub fn ols(y: &Poly, xs: &[&Poly]) -> Vec<f64> {
    let p = xs.len();
    let s = DMatrix::from_fn(p, p, |i, j| cov(xs[i], xs[j]));
    let r = DVector::from_fn(p, |i, _| cov(xs[i], y));
    s.lu().solve(&r).expect("nonsingular population design").as_slice().to_vec()
}

/// Population 2SLS coefficients.
pub fn tsls(y: &Poly, endog: &[&Poly], instr: &[&Poly], exog: &[&Poly]) -> Vec<f64> {
    let first: Vec<&Poly> = instr.iter().chain(exog).copied().collect();
    let fitted: Vec<Poly> = endog
        .iter()
        .map(|e| {
            let b = ols(e, &first);
            first.iter().zip(&b).fold(Poly::default(), |acc, (p, c)| acc.add(&p.scale(*c)))
        })
        .collect();
    let second: Vec<&Poly> = fitted.iter().chain(exog.iter().copied()).collect();
    ols(y, &second)
}

/// Structural variables of a scenario as polynomials; error scales are solved
/// so that every variable has unit variance. Returns `None` if infeasible.
pub struct Model {
    pub y: Poly,
    pub x: Poly,
    pub z: Poly,
    pub u: Poly,
    pub w: Option<Poly>,
    pub error_variances: BTreeMap<String, f64>,
}

fn w_(name: &ScenarioSpec, key: &str) -> f64 {
    name.weights.get(key).copied().unwrap_or(0.0)
}

pub fn model(spec: &ScenarioSpec) -> Model {
    let u = Poly::var(U);
    let w = Poly::var(W);
    let g = |k: &str| w_(spec, k);
    let mut errs = BTreeMap::new();
    let wc = if spec.with_covariates { 1.0 } else { 0.0 };
    let (z, x, y) = if spec.kind == ScenarioKind::Heterogeneity {
        let b4 = if spec.with_covariates { spec.weights.get("beta4").copied().unwrap_or(0.2) } else { 0.0 };
        let b5 = if spec.with_covariates { spec.weights.get("beta5").copied().unwrap_or(0.2) } else { 0.0 };
        let z = Poly::var(Z);
        let zu = z.mul(&u);
        let zw = z.mul(&w);
        let xs = lin(&[(g("alpha1"), &z), (g("alpha2"), &u), (g("alpha3"), &zu), (g("alpha4") * wc, &w), (g("alpha5") * wc, &zw)]);
        let sx = 1.0 - cov(&xs, &xs);
        errs.insert("sigma2_x".to_string(), sx);
        let x = xs.add(&Poly::var(EX).scale(sx.max(0.0).sqrt()));
        let ys = lin(&[(g("beta1"), &x), (g("beta2"), &u), (g("beta3"), &x.mul(&u)), (b4, &w), (b5, &x.mul(&w))]);
        let sy = 1.0 - cov(&ys, &ys);
        errs.insert("sigma2_y".to_string(), sy);
        (z, x.clone(), ys.add(&Poly::var(EY).scale(sy.max(0.0).sqrt())))
    } else {
        let z = if spec.kind == ScenarioKind::Independence {
            let zs = lin(&[(g("c_i"), &u), (g("c7") * wc, &w)]);
            let sz = 1.0 - cov(&zs, &zs);
            errs.insert("sigma2_z".to_string(), sz);
            zs.add(&Poly::var(EZ).scale(sz.max(0.0).sqrt()))
        } else {
            Poly::var(EZ)
        };
        let xs = lin(&[(g("c1"), &u), (g("c3"), &z), (g("c5") * wc, &w)]);
        let sx = 1.0 - cov(&xs, &xs);
        errs.insert("sigma2_x".to_string(), sx);
        let x = xs.add(&Poly::var(EX).scale(sx.max(0.0).sqrt()));
        let ys = lin(&[(g("c0"), &x), (g("c2"), &u), (g("c_er"), &z), (g("c6") * wc, &w)]);
        let sy = 1.0 - cov(&ys, &ys);
        errs.insert("sigma2_y".to_string(), sy);
        (z, x, ys.add(&Poly::var(EY).scale(sy.max(0.0).sqrt())))
    };
    Model {
        y,
        x,
        z,
        u,
        w: spec.with_covariates.then_some(w),
        error_variances: errs,
    }
}

/// Population limits (a2, a3, a4) of the three estimators.
pub fn limits(spec: &ScenarioSpec) -> (f64, f64, f64) {
    let m = model(spec);
    let het = spec.kind == ScenarioKind::Heterogeneity;
    let mut controls: Vec<Poly> = Vec::new();
    let mut endog_extra: Vec<Poly> = Vec::new();
    let mut instr_extra: Vec<Poly> = Vec::new();
    if let Some(w) = &m.w {
        controls.push(w.clone());
        if het {
            endog_extra.push(m.x.mul(w));
            instr_extra.push(m.z.mul(w));
        }
    }
    let c: Vec<&Poly> = controls.iter().chain(&endog_extra).collect();
    let a2 = ols(&m.y, &[&[&m.x][..], &c].concat())[0];
    let a3 = ols(&m.y, &[&[&m.x, &m.z][..], &c].concat())[0];
    let endog: Vec<&Poly> = [&m.x].into_iter().chain(&endog_extra).collect();
    let instr: Vec<&Poly> = [&m.z].into_iter().chain(&instr_extra).collect();
    let exog: Vec<&Poly> = controls.iter().collect();
    let a4 = tsls(&m.y, &endog, &instr, &exog)[0];
    (a2, a3, a4)
}

pub fn er(c: [f64; 5], cov: Option<(f64, f64)>) -> ScenarioSpec {
    let mut s = ScenarioSpec::new(
        ScenarioKind::ExclusionRestriction,
        cov.is_some(),
        [("c0", c[0]), ("c1", c[1]), ("c2", c[2]), ("c3", c[3]), ("c_er", c[4])],
    );
    if let Some((c5, c6)) = cov {
        s = s.with_weight("c5", c5).with_weight("c6", c6);
    }
    s
}

pub fn independence(c: [f64; 5], cov: Option<(f64, f64, f64)>) -> ScenarioSpec {
    let mut s = ScenarioSpec::new(
        ScenarioKind::Independence,
        cov.is_some(),
        [("c0", c[0]), ("c1", c[1]), ("c2", c[2]), ("c3", c[3]), ("c_i", c[4])],
    );
    if let Some((c5, c6, c7)) = cov {
        s = s.with_weight("c5", c5).with_weight("c6", c6).with_weight("c7", c7);
    }
    s
}

/// alpha1..3, beta1..3, and optionally (alpha4, alpha5, beta4, beta5).
pub fn heterogeneity(a: [f64; 3], b: [f64; 3], cov: Option<[f64; 4]>) -> ScenarioSpec {
    let mut s = ScenarioSpec::new(
        ScenarioKind::Heterogeneity,
        cov.is_some(),
        [("alpha1", a[0]), ("alpha2", a[1]), ("alpha3", a[2]), ("beta1", b[0]), ("beta2", b[1]), ("beta3", b[2])],
    );
    if let Some([a4, a5, b4, b5]) = cov {
        s = s
            .with_weight("alpha4", a4)
            .with_weight("alpha5", a5)
            .with_weight("beta4", b4)
            .with_weight("beta5", b5);
    }
    s
}

/// Reference heterogeneity weights; covariate effects on Y at the crate default.
pub fn het_reference(with_covariates: bool) -> ScenarioSpec {
    heterogeneity(
        [0.45, 0.15, 0.1],
        [0.1, 0.2, 0.1],
        with_covariates.then_some([0.15, 0.1, 0.2, 0.2]),
    )
}
