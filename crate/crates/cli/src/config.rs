//! Run configuration: JSON schema and resolution into core objects.

use gwa_core::algebra::Algebra;
use gwa_core::bimodule::Bimodule;
use gwa_core::conjugation::Conjugation;
use gwa_core::poly::{Laurent, Poly};
use gwa_core::qtrace::ThetaQuotientWeight;
use gwa_core::trace::Weight;
use gwa_core::{Error, C64};
use serde::{Deserialize, Serialize};

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

fn cx(c: &Complex) -> C64 {
    C64::new(c[0], c[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Filtered,
    Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: VariantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub c: Vec<Complex>,
    /// Defaults to `c` (the regular bimodule).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<Vec<Complex>>,
    pub rho: RhoConfig,
    pub weight: WeightConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
}

/// `ε, τ` for the filtered variant; `|a|, s` for the q-analog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

/// Numerator coefficients `G` (filtered) or a theta quotient (q-analog).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    pub scalar: Complex,
    /// Twice the exponent of the `Z` prefactor.
    pub exponent2: i64,
    pub zeros: Vec<Complex>,
    pub poles: Vec<Complex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub j_max: i64,
    pub deg_max: usize,
    /// Degree bound of the star-product table.
    pub n: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { j_max: 4, deg_max: 4, n: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub gram: f64,
    pub certify_samples: usize,
    pub intertwining: f64,
    pub twisted_identity: f64,
    pub membership: f64,
    pub star: f64,
    /// Seed for the random elements drawn by `selfcheck`.
    pub seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            gram: 1e-8,
            certify_samples: 512,
            intertwining: 1e-9,
            twisted_identity: 1e-8,
            membership: 1e-10,
            star: 1e-6,
            seed: 0,
        }
    }
}

/// How a `q > 1` input was mapped into `(0, 1)`. The theta weight is read in
/// the normalized frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Relabeling {
    pub input_q: f64,
    pub q: f64,
    /// `q ↦ 1/q`, `c ↦ 1 - c`, `c' ↦ 1 - c'`, `|a| ↦ 1/|a|`, `s ↦ -s`; `u` and `v` swap roles.
    pub rule: &'static str,
    pub c: Vec<Complex>,
    pub c_prime: Vec<Complex>,
    pub abs_a: f64,
    pub s: f64,
}

pub enum Setup {
    Filtered { conj: Conjugation<Poly<f64>>, weight: Weight },
    Q { conj: Conjugation<Laurent<f64>>, weight: ThetaQuotientWeight },
}

pub struct Resolved {
    /// The input with every default filled in.
    pub config: RunConfig,
    pub relabeling: Option<Relabeling>,
    pub setup: Setup,
}

fn missing(what: &str) -> Error {
    Error::InvalidInput(format!("missing {what}"))
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, Error> {
        let mut config = self.clone();
        if config.c_prime.is_none() {
            config.c_prime = Some(config.c.clone());
        }
        let c: Vec<C64> = config.c.iter().map(cx).collect();
        let cp: Vec<C64> = config.c_prime.as_ref().unwrap().iter().map(cx).collect();
        let t = &config.truncation;
        if t.j_max < 0 {
            return Err(Error::InvalidInput("truncation.j_max must be nonnegative".into()));
        }
        let tol = &config.tolerance;
        if [tol.gram, tol.intertwining, tol.twisted_identity, tol.membership, tol.star].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        let (setup, relabeling) = match config.variant {
            VariantName::Filtered => {
                if config.q.is_some() {
                    return Err(Error::InvalidInput("q is only used by the q variant".into()));
                }
                let epsilon = config.rho.epsilon.ok_or_else(|| missing("rho.epsilon"))?;
                let tau = config.rho.tau.ok_or_else(|| missing("rho.tau"))?;
                if config.rho.abs_a.is_some() || config.rho.s.is_some() {
                    return Err(Error::InvalidInput("rho.abs_a and rho.s belong to the q variant".into()));
                }
                let module = Bimodule::<Poly<f64>>::new(c, cp, &())?;
                let conj = Conjugation::filtered(module, epsilon, tau)?;
                let g = config.weight.g.as_ref().ok_or_else(|| missing("weight.g"))?;
                if config.weight.theta.is_some() {
                    return Err(Error::InvalidInput("weight.theta belongs to the q variant".into()));
                }
                let weight = Weight::new(conj.module().left(), tau, Poly::from_coeffs(g.iter().map(cx).collect()))?;
                (Setup::Filtered { conj, weight }, None)
            }
            VariantName::Q => {
                let input_q = config.q.ok_or_else(|| missing("q"))?;
                if !(input_q > 0.0 && input_q.is_finite()) || input_q == 1.0 {
                    return Err(Error::InvalidQ { q: input_q });
                }
                let abs_a = config.rho.abs_a.ok_or_else(|| missing("rho.abs_a"))?;
                let s = config.rho.s.ok_or_else(|| missing("rho.s"))?;
                // Z keeps its meaning; the roots q^{2c-1} of the defining polynomial are unchanged
                let (q, c, cp, abs_a, s, relabeling) = if input_q > 1.0 {
                    let q = 1.0 / input_q;
                    let flip = |v: Vec<C64>| v.into_iter().map(|x| C64::new(1.0, 0.0) - x).collect::<Vec<_>>();
                    let (c, cp) = (flip(c), flip(cp));
                    let pairs = |v: &[C64]| v.iter().map(|x| [x.re, x.im]).collect();
                    let relabeling = Relabeling {
                        input_q,
                        q,
                        rule: "q -> 1/q, c -> 1 - c, c' -> 1 - c', |a| -> 1/|a|, s -> -s, u <-> v",
                        c: pairs(&c),
                        c_prime: pairs(&cp),
                        abs_a: 1.0 / abs_a,
                        s: -s,
                    };
                    (q, c, cp, 1.0 / abs_a, -s, Some(relabeling))
                } else {
                    (input_q, c, cp, abs_a, s, None)
                };
                if config.rho.epsilon.is_some() || config.rho.tau.is_some() {
                    return Err(Error::InvalidInput("rho.epsilon and rho.tau belong to the filtered variant".into()));
                }
                let module = Bimodule::<Laurent<f64>>::new(c, cp, &q)?;
                let conj = Conjugation::q_deformed(module, abs_a, s)?;
                let theta = config.weight.theta.as_ref().ok_or_else(|| missing("weight.theta"))?;
                if config.weight.g.is_some() {
                    return Err(Error::InvalidInput("weight.g belongs to the filtered variant".into()));
                }
                let algebra: &Algebra<Laurent<f64>> = conj.module().left();
                let weight = ThetaQuotientWeight::new(
                    algebra,
                    cx(&theta.scalar),
                    theta.exponent2,
                    theta.zeros.iter().map(cx).collect(),
                    theta.poles.iter().map(cx).collect(),
                )?;
                (Setup::Q { conj, weight }, relabeling)
            }
        };
        Ok(Resolved { config, relabeling, setup })
    }
}
