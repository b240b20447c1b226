//! Seeded random fields for the decomposition and inequality corpora.
//!
//! Member `i` of a corpus draws from its own ChaCha stream, so a corpus is
//! the same whether it is generated serially or in parallel.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rarefaction_core::{DomainSpec, Field};

/// One product term `a · exp(−((x₁−c)/w)²) · ∏ b_{kᵢ}(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub amplitude: f64,
    pub centre: f64,
    pub width: f64,
    /// Torus wavenumbers; `k > 0` sine, `k < 0` cosine, `0` constant.
    pub k: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub id: usize,
    pub terms: Vec<Term>,
    pub field: Field,
}

/// Grid used for dimension `n`: `[-4, 4]` with 64 cells, and 24 (`n = 2`) or
/// 16 (`n = 3`) cells per torus direction. Central second differences
/// decouple at `k = N/4`, so `N` stays well above `4·|k|max`.
pub fn corpus_spec(n: usize) -> DomainSpec {
    let nt = if n == 2 { 24 } else { 16 };
    DomainSpec::new(n, 4.0, 64, vec![nt; n - 1]).expect("valid corpus grid")
}

fn basis(k: i32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        k if k > 0 => (TAU * k as f64 * x).sin(),
        k => (TAU * (-k) as f64 * x).cos(),
    }
}

pub fn evaluate(spec: &DomainSpec, terms: &[Term]) -> Field {
    Field::from_fn(spec, 0.0, |x| {
        terms
            .iter()
            .map(|t| {
                let s = (x[0] - t.centre) / t.width;
                let mut v = t.amplitude * (-s * s).exp();
                for (i, &k) in t.k.iter().enumerate() {
                    v *= basis(k, x[i + 1]);
                }
                v
            })
            .sum()
    })
    .expect("finite corpus field")
}

pub fn random_terms(rng: &mut impl Rng, n: usize) -> Vec<Term> {
    let count = rng.gen_range(1..=5);
    (0..count)
        .map(|_| Term {
            amplitude: rng.gen_range(-1.0..1.0),
            centre: rng.gen_range(-1.0..1.0),
            width: rng.gen_range(0.4..1.5),
            k: (1..n).map(|_| rng.gen_range(-3..=3)).collect(),
        })
        .collect()
}

/// Member `id`; dimensions cycle through `dims`.
pub fn member(seed: u64, id: usize, dims: &[usize]) -> Member {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    let n = dims[id % dims.len()];
    let terms = random_terms(&mut rng, n);
    let field = evaluate(&corpus_spec(n), &terms);
    Member { id, terms, field }
}

/// Random coefficients for a linearity check on member `id`.
pub fn coefficients(seed: u64, id: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(id as u64);
    (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
}
