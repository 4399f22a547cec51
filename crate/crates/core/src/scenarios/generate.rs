use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::feasibility::feasible_error_variances;
use super::spec::{ScenarioKind, ScenarioSpec};
use crate::data::{Column, Dataset};
use crate::error::{Error, Result};

/// One simulated sample from a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub data: Dataset,
    pub seed: u64,
    pub n: usize,
}

/// Seed of replication `index` under base `seed`.
pub fn replication_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Draws `n` rows from the structural equations of `spec`.
///
/// The generator is ChaCha20 seeded through `seed_from_u64`; each row consumes
/// five standard normal draws in the order U, W, Z noise, X noise, Y noise,
/// whatever the scenario, so output depends only on `(spec, n, seed)`.
/// Columns are `U`, `Z`, `X`, `Y`, plus `W` with covariates and the raw
/// products `ZU`, `XU` (and `ZW`, `XW`) for heterogeneity.
pub fn generate(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<GeneratedData> {
    if n < 10 {
        return Err(Error::InvalidSpec(format!("n = {n} is below the minimum of 10")));
    }
    let var = feasible_error_variances(spec)?;
    let sd = |k: &str| var.get(k).map_or(1.0, |v| v.sqrt());
    let (sd_z, sd_x, sd_y) = (sd("sigma2_z"), sd("sigma2_x"), sd("sigma2_y"));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cols: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    let het = spec.kind == ScenarioKind::Heterogeneity;
    let (lin, h) = if het {
        (Default::default(), spec.heterogeneity()?)
    } else {
        (spec.linear()?, Default::default())
    };
    for _ in 0..n {
        let draws: [f64; 5] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let [u, w, ez, ex, ey] = draws;
        let w = if spec.with_covariates { w } else { 0.0 };
        let (z, x, y) = if het {
            let [a1, a2, a3, a4, a5] = h.alpha;
            let [b1, b2, b3, b4, b5] = h.beta;
            let z = ez;
            let x = a1 * z + a2 * u + a3 * z * u + a4 * w + a5 * z * w + sd_x * ex;
            let y = b1 * x + b2 * u + b3 * x * u + b4 * w + b5 * x * w + sd_y * ey;
            (z, x, y)
        } else {
            let z = match spec.kind {
                ScenarioKind::Independence => lin.c_i * u + lin.c7 * w + sd_z * ez,
                _ => ez,
            };
            let x = lin.c1 * u + lin.c3 * z + lin.c5 * w + sd_x * ex;
            let y = lin.c0 * x + lin.c2 * u + lin.c_er * z + lin.c6 * w + sd_y * ey;
            (z, x, y)
        };
        for (col, v) in cols.iter_mut().zip([u, w, z, x, y]) {
            col.push(v);
        }
    }
    let [u, w, z, x, y] = cols;
    let mut data = Dataset::new();
    let mut push = |name: &str, values: Vec<f64>| data.insert(Column::new(name, values)?);
    push("Y", y)?;
    push("X", x)?;
    push("Z", z)?;
    push("U", u)?;
    if spec.with_covariates {
        push("W", w)?;
    }
    if het {
        let get = |d: &Dataset, a: &str, b: &str| -> Result<Column> {
            Ok(d.get(a)?.product(d.get(b)?))
        };
        let mut products = vec![get(&data, "Z", "U")?, get(&data, "X", "U")?];
        if spec.with_covariates {
            products.push(get(&data, "Z", "W")?);
            products.push(get(&data, "X", "W")?);
        }
        for p in products {
            data.insert(p)?;
        }
    }
    Ok(GeneratedData { data, seed, n })
}
