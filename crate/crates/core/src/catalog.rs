//! Ready-made models: the three-state non-uniqueness example, a four-state variant of it with a
//! transient state, and the two-machine maintenance system.

use crate::error::{Error, Result};
use crate::model::{ModelBuilder, ModelSpec};
use crate::scalar::Scalar;

/// States `s0, s1, s2` with `B = {s0}`. Action `c` stays put, action `d` jumps to `s0`.
pub fn keep_or_fail<T: Scalar>() -> ModelSpec<T> {
    let mut b = ModelBuilder::new(["s0", "s1", "s2"]).failed("s0");
    for s in ["s0", "s1", "s2"] {
        b = b
            .action(s, "c", [(s, T::one())])
            .action(s, "d", [("s0", T::one())]);
    }
    b.build().expect("example model is valid")
}

/// [`keep_or_fail`] plus a transient state `s3` whose only action `e` moves to `s0` or `s1` with
/// probability 1/2 each. Here `G* = {s3}` and `q*(s3) = 1/2`, while the all-ones vector still
/// satisfies the plain optimality equation.
pub fn keep_or_fail_with_transient<T: Scalar>() -> ModelSpec<T> {
    let half = T::one() / (T::one() + T::one());
    let mut b = ModelBuilder::new(["s0", "s1", "s2", "s3"]).failed("s0");
    for s in ["s0", "s1", "s2"] {
        b = b
            .action(s, "c", [(s, T::one())])
            .action(s, "d", [("s0", T::one())]);
    }
    b.action("s3", "e", [("s0", half.clone()), ("s1", half)])
        .build()
        .expect("example model is valid")
}

/// Parameters of the two-machine maintenance system.
///
/// An available machine deteriorates with probability `alpha0` and breaks with `alpha1`. Repair
/// `c` restores a deteriorated machine with probability `beta0` and leaves it deteriorated with
/// `beta1`; repair `d` does the same with `theta0`, `theta1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaintenanceParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl MaintenanceParams {
    /// `5 beta0 + 6 beta1 >= 5 theta0 + 6 theta1`: repair `c` is optimal.
    pub fn regime_a() -> Self {
        MaintenanceParams {
            alpha0: 0.25,
            alpha1: 0.25,
            beta0: 0.5,
            beta1: 0.3,
            theta0: 0.4,
            theta1: 0.2,
        }
    }

    /// `5 beta0 + 6 beta1 < 5 theta0 + 6 theta1`: repair `d` is optimal.
    pub fn regime_b() -> Self {
        MaintenanceParams {
            alpha0: 0.25,
            alpha1: 0.25,
            beta0: 0.2,
            beta1: 0.2,
            theta0: 0.5,
            theta1: 0.3,
        }
    }
}

/// State names of the maintenance system, `(i1,i2)` with 0 broken, 1 deteriorated, 2 available.
pub fn maintenance_state(i1: usize, i2: usize) -> String {
    format!("({i1},{i2})")
}

/// Builds the maintenance system with `B = {(0,0)}`.
///
/// Parameters are taken through their shortest decimal form, so in exact mode `0.3` is `3/10`.
pub fn maintenance<T: Scalar>(params: &MaintenanceParams) -> Result<ModelSpec<T>> {
    let lit = |x: f64| T::parse_literal(&x.to_string()).ok_or(Error::BadProbability(x.to_string()));
    let one = T::one();
    let (a0, a1) = (lit(params.alpha0)?, lit(params.alpha1)?);
    // outcome distributions over {broken, deteriorated, available}
    let available = [a1.clone(), a0.clone(), one.clone() - a0 - a1];
    let repaired = |x0: f64, x1: f64| -> Result<[T; 3]> {
        let (x0, x1) = (lit(x0)?, lit(x1)?);
        Ok([one.clone() - x0.clone() - x1.clone(), x1, x0])
    };
    let c = repaired(params.beta0, params.beta1)?;
    let d = repaired(params.theta0, params.theta1)?;

    let product = |m1: &[T; 3], m2: &[T; 3]| {
        let mut row = Vec::with_capacity(9);
        for (j1, p1) in m1.iter().enumerate() {
            for (j2, p2) in m2.iter().enumerate() {
                row.push((maintenance_state(j1, j2), p1.clone() * p2.clone()));
            }
        }
        row
    };

    let names: Vec<String> = (0..3)
        .flat_map(|i1| (0..3).map(move |i2| maintenance_state(i1, i2)))
        .collect();
    let mut b = ModelBuilder::new(names.clone()).failed(maintenance_state(0, 0));
    for name in &names {
        b = match name.as_str() {
            "(1,2)" => b.action(name.clone(), "c", product(&c, &available)).action(
                name.clone(),
                "d",
                product(&d, &available),
            ),
            "(2,1)" => b.action(name.clone(), "c", product(&available, &c)).action(
                name.clone(),
                "d",
                product(&available, &d),
            ),
            "(2,2)" => b.action(name.clone(), "nop", product(&available, &available)),
            _ => b.action(name.clone(), "nop", [(name.clone(), T::one())]),
        };
    }
    b.build()
}
