//! Scout-augmented mutation: every generation a fixed share of individuals
//! runs rand/1 as a scout, a gated share samples from a CMA-ES model, and
//! the rest use current-to-pbest/1 with the external archive.

mod cma;

pub use cma::{CmaError, CmaState, RECONDITION_RATIO, RESET_STEP_FRACTION};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::gnbg::DescriptorView;
use crate::lshade::{EAConfig, GenerationContext, GenerationFeedback, Mutation, Role};
use crate::RunRng;

/// Smallest dimension for which the CMA branch may run.
pub const CMA_MIN_DIM: usize = 6;

/// The CMA branch is allowed only on rotated single-component problems of
/// dimension at least [`CMA_MIN_DIM`].
pub fn cma_gate(view: &DescriptorView) -> bool {
    view.rotation_flag == 1 && view.comp_num == 1 && view.dim >= CMA_MIN_DIM
}

/// Number of individuals per role for one generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleCounts {
    pub pbest: usize,
    pub scout: usize,
    pub cma: usize,
}

/// Splits `n` individuals into roles. Scouts get `round(scout_fraction * n)`
/// first, then the CMA branch `round(cma_fraction * n)` when the gate is
/// open, and the remainder uses pbest. Rounding is half away from zero.
pub fn role_counts(n: usize, scout_fraction: f64, cma_fraction: f64, gate_open: bool) -> RoleCounts {
    let scout = ((scout_fraction * n as f64).round() as usize).min(n);
    let cma = if gate_open {
        ((cma_fraction * n as f64).round() as usize).min(n - scout)
    } else {
        0
    };
    RoleCounts {
        pbest: n - scout - cma,
        scout,
        cma,
    }
}

/// Size of the pbest pool: `max(2, round(max(p_min, 2/n) * n))`, at most `n`.
pub fn pbest_pool(n: usize, p_min: f64) -> usize {
    let p = p_min.max(2.0 / n as f64);
    ((p * n as f64).round() as usize).max(2).min(n)
}

/// Donor indices for current-to-pbest/1. `r2` indexes the concatenation of
/// population and archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbestDonors {
    pub pbest: usize,
    pub r1: usize,
    pub r2: usize,
}

/// Draws the pbest donor from the top of `ranked`, `r1` from the population
/// and `r2` from population plus archive, all distinct from each other and
/// from `i`.
pub fn pick_pbest_donors<R: Rng + ?Sized>(
    i: usize,
    ranked: &[usize],
    archive_len: usize,
    p_min: f64,
    rng: &mut R,
) -> PbestDonors {
    let n = ranked.len();
    assert!(n >= 4, "current-to-pbest needs at least four individuals");
    let top = pbest_pool(n, p_min);
    let pbest = ranked[rng.random_range(0..top)];
    let r1 = loop {
        let r = rng.random_range(0..n);
        if r != i && r != pbest {
            break r;
        }
    };
    let r2 = loop {
        let r = rng.random_range(0..n + archive_len);
        if r != i && r != pbest && r != r1 {
            break r;
        }
    };
    PbestDonors { pbest, r1, r2 }
}

/// Three distinct population indices, none equal to `i`.
pub fn pick_scout_donors<R: Rng + ?Sized>(i: usize, n: usize, rng: &mut R) -> [usize; 3] {
    assert!(n >= 4, "rand/1 needs at least four individuals");
    let mut out = [usize::MAX; 3];
    for k in 0..3 {
        out[k] = loop {
            let r = rng.random_range(0..n);
            if r != i && !out[..k].contains(&r) {
                break r;
            }
        };
    }
    out
}

/// `x_i + F (x_pbest - x_i) + F (x_r1 - x_r2)`.
pub fn mutate_pbest<R: Rng + ?Sized>(i: usize, ctx: &GenerationContext<'_>, f: f64, rng: &mut R) -> Vec<f64> {
    let d = pick_pbest_donors(i, ctx.ranked, ctx.archive.len(), ctx.p_min, rng);
    let n = ctx.population.len();
    let x = &ctx.population[i].x;
    let best = &ctx.population[d.pbest].x;
    let a = &ctx.population[d.r1].x;
    let b = if d.r2 < n {
        &ctx.population[d.r2].x
    } else {
        &ctx.archive[d.r2 - n]
    };
    (0..x.len()).map(|j| x[j] + f * (best[j] - x[j]) + f * (a[j] - b[j])).collect()
}

/// `x_r0 + F (x_r1 - x_r2)` over the population only.
pub fn mutate_scout<R: Rng + ?Sized>(i: usize, ctx: &GenerationContext<'_>, f: f64, rng: &mut R) -> Vec<f64> {
    let [r0, r1, r2] = pick_scout_donors(i, ctx.population.len(), rng);
    let (base, a, b) = (&ctx.population[r0].x, &ctx.population[r1].x, &ctx.population[r2].x);
    (0..base.len()).map(|j| base[j] + f * (a[j] - b[j])).collect()
}

/// Role-mixing mutation plugged into the engine.
#[derive(Debug, Clone)]
pub struct ScoutMutation {
    scout_fraction: f64,
    cma_fraction: f64,
    cma: Option<CmaState>,
    resets: u64,
}

impl ScoutMutation {
    pub fn new(cfg: &EAConfig) -> Self {
        Self {
            scout_fraction: cfg.scout_fraction,
            cma_fraction: cfg.cma_fraction,
            cma: None,
            resets: 0,
        }
    }

    pub fn cma(&self) -> Option<&CmaState> {
        self.cma.as_ref()
    }

    /// CMA restarts after the first initialisation.
    pub fn cma_resets(&self) -> u64 {
        self.resets
    }
}

impl Mutation for ScoutMutation {
    fn assign_roles(&mut self, ctx: &GenerationContext<'_>, rng: &mut RunRng) -> Vec<Role> {
        let n = ctx.population.len();
        let counts = role_counts(n, self.scout_fraction, self.cma_fraction, cma_gate(ctx.view));
        if counts.cma > 0 && self.cma.is_none() {
            self.cma = Some(CmaState::new(ctx.best_x, ctx.bounds));
        }
        let mut roles = Vec::with_capacity(n);
        roles.extend(std::iter::repeat_n(Role::Scout, counts.scout));
        roles.extend(std::iter::repeat_n(Role::Cma, counts.cma));
        roles.extend(std::iter::repeat_n(Role::Pbest, counts.pbest));
        roles.shuffle(rng);
        roles
    }

    fn mutate(&mut self, i: usize, role: Role, ctx: &GenerationContext<'_>, f: f64, rng: &mut RunRng) -> Vec<f64> {
        match role {
            Role::Pbest => mutate_pbest(i, ctx, f, rng),
            Role::Scout => mutate_scout(i, ctx, f, rng),
            Role::Cma => match &self.cma {
                Some(cma) => cma.sample(ctx.bounds, rng),
                None => mutate_pbest(i, ctx, f, rng),
            },
        }
    }

    fn observe(&mut self, fb: &GenerationFeedback<'_>) {
        let Some(cma) = self.cma.as_mut() else {
            return;
        };
        let mut samples: Vec<(Vec<f64>, f64)> = fb
            .offspring
            .iter()
            .filter(|o| o.role == Role::Cma)
            .map(|o| (o.x.clone(), o.f))
            .collect();
        if samples.is_empty() {
            return;
        }
        if fb.improved {
            samples.push((fb.best_x.to_vec(), fb.best_f));
        }
        let failed = samples.len() >= 2 && cma.update(&samples).is_err();
        if failed || fb.stagnated {
            cma.reset(fb.best_x, fb.bounds);
            self.resets += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lshade::Individual;
    use crate::Bounds;
    use rand::SeedableRng;

    fn view(rotation_flag: u8, comp_num: usize, dim: usize) -> DescriptorView {
        DescriptorView {
            dim,
            lb: -100.0,
            ub: 100.0,
            comp_num,
            lambda_all: vec![1.0; comp_num],
            omega_all: vec![[0.0; 4]; comp_num],
            rotation_flag,
        }
    }

    #[test]
    fn gate_truth_table() {
        assert!(cma_gate(&view(1, 1, 6)));
        assert!(cma_gate(&view(1, 1, 30)));
        assert!(!cma_gate(&view(0, 1, 30)));
        assert!(!cma_gate(&view(1, 2, 30)));
        assert!(!cma_gate(&view(1, 1, 5)));
    }

    #[test]
    fn role_counts_round_half_away() {
        assert_eq!(role_counts(180, 0.2, 0.1, true), RoleCounts { pbest: 126, scout: 36, cma: 18 });
        // 0.2 * 5 = 1, 0.1 * 5 = 0.5 -> 1
        assert_eq!(role_counts(5, 0.2, 0.1, true), RoleCounts { pbest: 3, scout: 1, cma: 1 });
        assert_eq!(role_counts(5, 0.2, 0.1, false), RoleCounts { pbest: 4, scout: 1, cma: 0 });
        assert_eq!(role_counts(4, 0.2, 0.1, true), RoleCounts { pbest: 3, scout: 1, cma: 0 });
        for n in 4..200 {
            let c = role_counts(n, 0.2, 0.1, true);
            assert_eq!(c.pbest + c.scout + c.cma, n);
        }
    }

    #[test]
    fn pbest_pool_sizes() {
        assert_eq!(pbest_pool(180, 0.11), 20);
        assert_eq!(pbest_pool(4, 0.11), 2);
        assert_eq!(pbest_pool(10, 1.0), 10);
    }

    #[test]
    fn donors_are_distinct() {
        let mut rng = RunRng::seed_from_u64(0);
        for n in [4usize, 5, 17, 180] {
            let ranked: Vec<usize> = (0..n).rev().collect();
            for _ in 0..2000 {
                let i = rng.random_range(0..n);
                let d = pick_pbest_donors(i, &ranked, n, 0.11, &mut rng);
                let top = pbest_pool(n, 0.11);
                assert!(ranked[..top].contains(&d.pbest));
                assert!(d.r1 < n);
                assert!(d.r2 < 2 * n);
                let all = [i, d.pbest, d.r1, d.r2];
                for a in 0..4 {
                    for b in a + 1..4 {
                        if a == 0 && b == 1 {
                            // the target may itself be a pbest candidate
                            continue;
                        }
                        assert_ne!(all[a], all[b], "{all:?}");
                    }
                }
                let s = pick_scout_donors(i, n, &mut rng);
                assert!(s.iter().all(|&r| r != i && r < n));
                assert!(s[0] != s[1] && s[1] != s[2] && s[0] != s[2]);
            }
        }
    }

    #[test]
    fn scout_base_is_uniform() {
        // chi-square over the base index for a fixed target
        let mut rng = RunRng::seed_from_u64(1);
        let n = 10;
        let draws = 90_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[pick_scout_donors(0, n, &mut rng)[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = draws as f64 / (n - 1) as f64;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 8 degrees of freedom, 0.999 quantile
        assert!(chi2 < 26.12, "chi2 {chi2}");
    }

    fn population(n: usize, dim: usize, rng: &mut RunRng) -> Vec<Individual> {
        (0..n)
            .map(|k| Individual {
                x: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                f: k as f64,
                role: Role::Pbest,
            })
            .collect()
    }

    #[test]
    fn roles_respect_gate() {
        let mut rng = RunRng::seed_from_u64(2);
        let cfg = EAConfig::default();
        for (v, expect_cma) in [(view(1, 1, 10), 5), (view(0, 1, 10), 0), (view(1, 3, 10), 0)] {
            let pop = population(50, 10, &mut rng);
            let ranked: Vec<usize> = (0..50).collect();
            let ctx = GenerationContext {
                population: &pop,
                archive: &[],
                ranked: &ranked,
                view: &v,
                bounds: Bounds::new(-100.0, 100.0).unwrap(),
                p_min: 0.11,
                generation: 0,
                best_x: &pop[0].x,
                best_f: 0.0,
            };
            let mut m = ScoutMutation::new(&cfg);
            let roles = m.assign_roles(&ctx, &mut rng);
            assert_eq!(roles.iter().filter(|&&r| r == Role::Cma).count(), expect_cma);
            assert_eq!(roles.iter().filter(|&&r| r == Role::Scout).count(), 10);
            assert_eq!(m.cma().is_some(), expect_cma > 0);
        }
    }
}
