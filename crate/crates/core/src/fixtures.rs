//! Named instances with known structure, and a seeded generator of random
//! instances stratified by regime.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::BoostInstance;
use crate::structure::{analyze, Regime};

fn from_rows(rows: &[&[f64]]) -> BoostInstance {
    BoostInstance::from_rows(rows).expect("fixture entries lie in [-1, 1]")
}

/// Two contradictory examples plus one both learners get right. Mixed:
/// the hard core is the first two rows and the optimal risk is approached
/// only as both weights grow without bound.
pub fn s() -> BoostInstance {
    from_rows(&[&[-1.0, 1.0], &[1.0, -1.0], &[-1.0, -1.0]])
}

/// `s()` embedded with confidence-rated predictors and an extra example
/// handled by its own learner.
pub fn a1() -> BoostInstance {
    from_rows(&[
        &[-1.0, 1.0, 0.0],
        &[1.0, -1.0, 0.0],
        &[-1.0, -1.0, 0.0],
        &[0.0, 0.0, -1.0],
    ])
}

/// `s()` with a third learner correct everywhere; weak learnable.
pub fn a2() -> BoostInstance {
    from_rows(&[&[-1.0, 1.0, -1.0], &[1.0, -1.0, -1.0], &[-1.0, -1.0, -1.0]])
}

/// One learner on two contradictory examples; attainable with minimizer 0.
pub fn contradictory_pair() -> BoostInstance {
    from_rows(&[&[-1.0], &[1.0]])
}

/// One learner, one example it classifies correctly; weak learnable.
pub fn single_correct() -> BoostInstance {
    from_rows(&[&[-1.0]])
}

/// Rows of `s()` rotated by π/4 and scaled by 1/√2 to stay inside the box.
/// Still mixed, but one coordinate can be pushed freely.
pub fn rotated_s() -> BoostInstance {
    let (c, s) = (
        std::f64::consts::FRAC_PI_4.cos(),
        std::f64::consts::FRAC_PI_4.sin(),
    );
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let rows: Vec<Vec<f64>> = [[-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]
        .iter()
        .map(|[a, b]| {
            let x = scale * (c * a - s * b);
            let y = scale * (s * a + c * b);
            // snap rounding noise so entries stay in [-1, 1]
            vec![x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0)]
        })
        .collect();
    BoostInstance::from_rows(&rows).expect("rotated entries lie in [-1, 1]")
}

/// A 4×3 attainable instance with a slow, steady linear rate under
/// logistic loss. Drawn by `random_instance` from a `ChaCha8Rng` seeded
/// with [`SKEWED_SEED`].
#[allow(clippy::excessive_precision)]
pub fn skewed() -> BoostInstance {
    from_rows(&[
        &[
            -8.9946696114530056e-1,
            2.2313217021530796e-1,
            8.3501280201578210e-1,
        ],
        &[
            -8.1304806952199771e-2,
            -6.4373403024474118e-1,
            -7.2586243598737843e-1,
        ],
        &[
            -2.7140316572368384e-1,
            -6.3939738486484288e-1,
            -3.1377654419037393e-2,
        ],
        &[
            9.7621806964199020e-1,
            4.7787485740749847e-1,
            -4.6196642300516400e-1,
        ],
    ])
}

pub const SKEWED_SEED: u64 = 1049;

/// Optimal logistic risk of [`skewed`], from an exact-search run stopped at
/// `‖Aᵀ∇f‖_∞ ≤ 1e-14`.
pub const SKEWED_LOGISTIC_OPTIMUM: f64 = 2.518_766_174_608_437_3;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub instance: BoostInstance,
    pub regime: Regime,
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "s",
            instance: s(),
            regime: Regime::Mixed,
        },
        Fixture {
            name: "a1",
            instance: a1(),
            regime: Regime::Mixed,
        },
        Fixture {
            name: "a2",
            instance: a2(),
            regime: Regime::WeakLearnable,
        },
        Fixture {
            name: "pair",
            instance: contradictory_pair(),
            regime: Regime::Attainable,
        },
        Fixture {
            name: "single",
            instance: single_correct(),
            regime: Regime::WeakLearnable,
        },
        Fixture {
            name: "rotated_s",
            instance: rotated_s(),
            regime: Regime::Mixed,
        },
        Fixture {
            name: "skewed",
            instance: skewed(),
            regime: Regime::Attainable,
        },
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entries {
    /// Entries drawn from `{-1, 0, 1}`.
    Ternary,
    /// Entries drawn uniformly from `[-1, 1]`.
    Uniform,
}

pub fn random_instance<R: Rng>(rng: &mut R, m: usize, n: usize, entries: Entries) -> BoostInstance {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| match entries {
                    Entries::Ternary => f64::from(rng.gen_range(-1i8..=1)),
                    Entries::Uniform => rng.gen_range(-1.0..=1.0),
                })
                .collect()
        })
        .collect();
    BoostInstance::from_rows(&rows).expect("generated entries lie in [-1, 1]")
}

const MAX_DRAWS: usize = 100_000;

/// Draws random instances with `1..=max_m` rows and `1..=max_n` columns until
/// one lands in `regime`. Deterministic in `seed`.
pub fn random_in_regime(
    seed: u64,
    regime: Regime,
    max_m: usize,
    max_n: usize,
    entries: Entries,
) -> Result<BoostInstance> {
    if max_m == 0 || max_n == 0 {
        return Err(Error::Domain("instance dimensions must be positive".into()));
    }
    if regime == Regime::Mixed && entries == Entries::Uniform {
        // a mixed instance needs a kernel vector of Aᵀ with exact zeros
        return Err(Error::Domain(
            "uniform entries give mixed instances with probability zero; use ternary entries"
                .into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let m = rng.gen_range(1..=max_m);
        let n = rng.gen_range(1..=max_n);
        let inst = random_instance(&mut rng, m, n, entries);
        if analyze(&inst)?.regime == regime {
            return Ok(inst);
        }
    }
    Err(Error::Domain(format!(
        "no {regime:?} instance found in {MAX_DRAWS} draws"
    )))
}
