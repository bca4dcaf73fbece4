//! Seeded Monte-Carlo oracle for two-cohort trials.
//!
//! Each replication draws the four cohort sample means (control and
//! treatment, before and after the disruption) from their exact normal
//! law and forms `(t0, t1, t)` with known variances. Work is split into
//! fixed-size chunks; chunk `i` uses ChaCha8 stream `i` of the seed, so the
//! output does not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignParams;
use crate::dilution::{CohortSizes, DilutionSpec, GeneralDilutionSpec};
use crate::error::{Error, Result};
use crate::gsd::GsdDesign;
use crate::kernel::quantile;
use crate::types::{InformationFraction, Probability};

const CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: u64,
    pub seed: u64,
    /// Largest acceptable standard error; exceeding it adds a warning.
    #[serde(default)]
    pub target_se: Option<f64>,
}

impl McConfig {
    pub fn new(replications: u64, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::domain("replications", "at least one replication is required"));
        }
        Ok(McConfig {
            replications,
            seed,
            target_se: None,
        })
    }

    pub fn with_target_se(mut self, se: f64) -> Self {
        self.target_se = Some(se);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::domain("replications", "at least one replication is required"));
        }
        Ok(())
    }

    fn chunks(&self) -> impl ParallelIterator<Item = (ChaCha8Rng, u64)> + '_ {
        let n_chunks = self.replications.div_ceil(CHUNK);
        (0..n_chunks).into_par_iter().map(move |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(i);
            let len = CHUNK.min(self.replications - i * CHUNK);
            (rng, len)
        })
    }
}

/// Decision rule applied to the simulated statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Analysis {
    /// Single test of `t` at `z_{1−α}`; stage 1 reports the test of `t0`
    /// at the same critical value.
    Fixed,
    Gsd(GsdDesign),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPower {
    pub stage1: Probability,
    pub overall: Probability,
    pub stage1_se: f64,
    pub overall_se: f64,
    pub stage1_rejections: u64,
    pub overall_rejections: u64,
    pub replications: u64,
    pub warnings: Vec<String>,
}

/// Cohort-mean sampler shared by the power and moment oracles.
struct TrialSampler {
    mean: [f64; 4],
    sd: [f64; 4],
    // weights of the four cohort means in the pooled arm means
    w_c: [f64; 2],
    w_t: [f64; 2],
    sd_d0: f64,
    sd_d1: f64,
    sd_d: f64,
}

impl TrialSampler {
    fn new(n_total: f64, tau: f64, r: f64, spec: &GeneralDilutionSpec) -> Self {
        let n = CohortSizes::split(n_total, tau, r);
        let var_c0 = spec.sigma_c0.powi(2);
        let var_t0 = spec.sigma_t0.powi(2);
        let var_c1 = spec.psi_c * var_c0;
        let var_t1 = spec.psi_t * var_t0;
        let n_c = n.control_pre + n.control_post;
        let n_t = n.treatment_pre + n.treatment_post;
        let sd = [
            (var_c0 / n.control_pre).sqrt(),
            (var_t0 / n.treatment_pre).sqrt(),
            (var_c1 / n.control_post).sqrt(),
            (var_t1 / n.treatment_post).sqrt(),
        ];
        TrialSampler {
            mean: [spec.mu_c0, spec.mu_t0, spec.mu_c1(), spec.mu_t1()],
            sd,
            w_c: [n.control_pre / n_c, n.control_post / n_c],
            w_t: [n.treatment_pre / n_t, n.treatment_post / n_t],
            sd_d0: (sd[0] * sd[0] + sd[1] * sd[1]).sqrt(),
            sd_d1: (sd[2] * sd[2] + sd[3] * sd[3]).sqrt(),
            sd_d: ((var_c0 * n.control_pre + var_c1 * n.control_post) / (n_c * n_c)
                + (var_t0 * n.treatment_pre + var_t1 * n.treatment_post) / (n_t * n_t))
                .sqrt(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let mut m = [0.0; 4];
        for (k, slot) in m.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *slot = self.mean[k] + self.sd[k] * z;
        }
        let [c0, t0, c1, t1] = m;
        let pooled = (self.w_t[0] * t0 + self.w_t[1] * t1) - (self.w_c[0] * c0 + self.w_c[1] * c1);
        [
            (t0 - c0) / self.sd_d0,
            (t1 - c1) / self.sd_d1,
            pooled / self.sd_d,
        ]
    }
}

fn check_trial(n_total: f64, tau: InformationFraction) -> Result<f64> {
    if !(n_total > 0.0 && n_total.is_finite()) {
        return Err(Error::domain("n", "total sample size must be positive"));
    }
    Ok(tau.interim()?.value())
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Empirical stage-1 and overall rejection rates for `n_total` patients.
pub fn mc_two_cohort_power(
    params: &DesignParams,
    n_total: f64,
    tau: InformationFraction,
    dilution: DilutionSpec,
    analysis: Analysis,
    config: &McConfig,
) -> Result<McPower> {
    params.validate()?;
    dilution.validate()?;
    config.validate()?;
    let t = check_trial(n_total, tau)?;
    let (c1, c2) = match analysis {
        Analysis::Fixed => {
            let z = quantile(1.0 - params.alpha.value());
            (z, z)
        }
        Analysis::Gsd(design) => {
            if (design.tau.value() - t).abs() > 1e-12 {
                return Err(Error::domain("tau", "design was built for a different interim fraction"));
            }
            (design.c1, design.c2)
        }
    };
    let sampler = TrialSampler::new(n_total, t, params.r, &dilution.to_general(params));

    let counts: Vec<(u64, u64)> = config
        .chunks()
        .map(|(mut rng, len)| {
            let (mut early, mut any) = (0u64, 0u64);
            for _ in 0..len {
                let [t0, _, t_all] = sampler.draw(&mut rng);
                let stage1 = t0 >= c1;
                let reject = match analysis {
                    Analysis::Fixed => t_all >= c2,
                    Analysis::Gsd(_) => stage1 || t_all >= c2,
                };
                early += stage1 as u64;
                any += reject as u64;
            }
            (early, any)
        })
        .collect();
    let (early, any) = counts
        .iter()
        .fold((0, 0), |(a, b), &(x, y)| (a + x, b + y));

    let n = config.replications;
    let p1 = early as f64 / n as f64;
    let p2 = any as f64 / n as f64;
    let stage1_se = binomial_se(p1, n);
    let overall_se = binomial_se(p2, n);
    let mut warnings = Vec::new();
    if let Some(target) = config.target_se {
        // worst case p = 1/2 when the estimate itself is degenerate
        let worst = stage1_se.max(overall_se).max(if early == 0 || any == n {
            0.5 / (n as f64).sqrt()
        } else {
            0.0
        });
        if worst > target {
            let needed = (0.25 / (target * target)).ceil() as u64;
            warnings.push(format!(
                "standard error {worst:.2e} exceeds target {target:.2e}; about {needed} replications are needed"
            ));
        }
    }
    Ok(McPower {
        stage1: Probability::saturating(p1),
        overall: Probability::saturating(p2),
        stage1_se,
        overall_se,
        stage1_rejections: early,
        overall_rejections: any,
        replications: n,
        warnings,
    })
}

/// Sample means, correlations and their standard errors for `(t0, t1, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMoments {
    pub mean: [f64; 3],
    pub mean_se: [f64; 3],
    pub corr: [[f64; 3]; 3],
    pub corr_se: [[f64; 3]; 3],
    pub replications: u64,
}

pub fn mc_joint_moments(
    n_total: f64,
    tau: InformationFraction,
    r: f64,
    spec: &GeneralDilutionSpec,
    config: &McConfig,
) -> Result<McMoments> {
    spec.validate()?;
    config.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", "must be positive and finite"));
    }
    if config.replications < 2 {
        return Err(Error::domain("replications", "moments need at least two replications"));
    }
    let t = check_trial(n_total, tau)?;
    let sampler = TrialSampler::new(n_total, t, r, spec);

    // per-chunk sums of x and x·xᵀ, combined in chunk order
    let sums: Vec<([f64; 3], [[f64; 3]; 3])> = config
        .chunks()
        .map(|(mut rng, len)| {
            let mut s = [0.0; 3];
            let mut ss = [[0.0; 3]; 3];
            for _ in 0..len {
                let x = sampler.draw(&mut rng);
                for i in 0..3 {
                    s[i] += x[i];
                    for j in 0..3 {
                        ss[i][j] += x[i] * x[j];
                    }
                }
            }
            (s, ss)
        })
        .collect();
    let mut s = [0.0; 3];
    let mut ss = [[0.0; 3]; 3];
    for (cs, css) in &sums {
        for i in 0..3 {
            s[i] += cs[i];
            for j in 0..3 {
                ss[i][j] += css[i][j];
            }
        }
    }

    let n = config.replications as f64;
    let mean = s.map(|v| v / n);
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            cov[i][j] = (ss[i][j] - n * mean[i] * mean[j]) / (n - 1.0);
        }
    }
    let mean_se = [0, 1, 2].map(|i| (cov[i][i] / n).sqrt());
    let mut corr = [[1.0; 3]; 3];
    let mut corr_se = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let rho = cov[i][j] / (cov[i][i] * cov[j][j]).sqrt();
                corr[i][j] = rho;
                corr_se[i][j] = (1.0 - rho * rho) / (n - 1.0).sqrt();
            }
        }
    }
    Ok(McMoments {
        mean,
        mean_se,
        corr,
        corr_se,
        replications: config.replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::required_sample_size;
    use crate::kernel::cdf;

    fn tau(t: f64) -> InformationFraction {
        InformationFraction::new(t).unwrap()
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let params = DesignParams::new(0.025, 0.1, 1.0, 1.0, 1.0).unwrap();
        let cfg = McConfig::new(100_003, 42).unwrap();
        let run = || {
            mc_two_cohort_power(&params, 42.0, tau(0.5), DilutionSpec::new(0.1, 1.2).unwrap(), Analysis::Fixed, &cfg)
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.stage1_rejections, b.stage1_rejections);
        assert_eq!(a.overall_rejections, b.overall_rejections);

        let other = McConfig::new(100_003, 43).unwrap();
        let c = mc_two_cohort_power(&params, 42.0, tau(0.5), DilutionSpec::new(0.1, 1.2).unwrap(), Analysis::Fixed, &other)
            .unwrap();
        assert_ne!(a.overall_rejections, c.overall_rejections);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let params = DesignParams::new(0.025, 0.2, 0.5, 1.0, 2.0).unwrap();
        let cfg = McConfig::new(200_000, 7).unwrap();
        let run = || {
            mc_two_cohort_power(&params, 120.0, tau(0.4), DilutionSpec::NONE, Analysis::Fixed, &cfg).unwrap()
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(run);
        let multi = run();
        assert_eq!(single.overall_rejections, multi.overall_rejections);
        assert_eq!(single.stage1_rejections, multi.stage1_rejections);
    }

    #[test]
    fn fixed_design_matches_closed_form() {
        let params = DesignParams::new(0.025, 0.2, 1.0, 1.0, 1.0).unwrap();
        let n = required_sample_size(&params).unwrap().continuous;
        let cfg = McConfig::new(400_000, 1).unwrap();
        let mc = mc_two_cohort_power(&params, n, tau(0.8), DilutionSpec::NONE, Analysis::Fixed, &cfg).unwrap();
        let early = cdf(quantile(0.8) * 0.8f64.sqrt() - quantile(0.975) * (1.0 - 0.8f64.sqrt()));
        assert!((mc.stage1.value() - early).abs() < 3.0 * mc.stage1_se);
        assert!((mc.overall.value() - 0.8).abs() < 3.0 * mc.overall_se);
    }

    #[test]
    fn null_effect_has_size_alpha() {
        let params = DesignParams::new(0.025, 0.1, 0.0, 1.0, 1.0).unwrap();
        let cfg = McConfig::new(400_000, 3).unwrap();
        let mc = mc_two_cohort_power(&params, 80.0, tau(0.3), DilutionSpec::new(0.0, 1.7).unwrap(), Analysis::Fixed, &cfg)
            .unwrap();
        assert!((mc.overall.value() - 0.025).abs() < 3.0 * mc.overall_se);
    }

    #[test]
    fn small_run_warns() {
        let params = DesignParams::new(0.025, 0.1, 1.0, 1.0, 1.0).unwrap();
        let cfg = McConfig::new(1000, 1).unwrap().with_target_se(1e-3);
        let mc = mc_two_cohort_power(&params, 42.0, tau(0.5), DilutionSpec::NONE, Analysis::Fixed, &cfg).unwrap();
        assert_eq!(mc.warnings.len(), 1);
        let cfg = McConfig::new(1000, 1).unwrap().with_target_se(0.05);
        let mc = mc_two_cohort_power(&params, 42.0, tau(0.5), DilutionSpec::NONE, Analysis::Fixed, &cfg).unwrap();
        assert!(mc.warnings.is_empty());
    }

    #[test]
    fn zero_replications_rejected() {
        assert!(McConfig::new(0, 1).is_err());
    }
}
