//! Variation and selection operators.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{GaConfig, GaError, Individual};

/// `pop_size` genomes of `ind_size` genes drawn uniformly from the lower
/// bound up to (not including) the upper bound.
pub fn initialize_pop<R: Rng>(cfg: &GaConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let (lo, hi) = cfg.genome_bounds;
    (0..cfg.pop_size)
        .map(|_| {
            (0..cfg.ind_size)
                .map(|_| rng.random_range(lo..hi))
                .collect()
        })
        .collect()
}

/// Binary tournament: two uniform draws with replacement; the lower rank
/// wins, then the larger crowding distance, then a fair coin.
pub fn tournament_select<R: Rng>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    let (x, y) = (&pop[a], &pop[b]);
    if x.rank != y.rank {
        return if x.rank < y.rank { a } else { b };
    }
    if x.crowding != y.crowding {
        return if x.crowding > y.crowding { a } else { b };
    }
    if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// With probability `p` each gene comes from either parent with equal
/// chance; otherwise the child is a copy of `a`.
pub fn crossover<R: Rng>(a: &[f64], b: &[f64], rng: &mut R, p: f64) -> Result<Vec<f64>, GaError> {
    if a.len() != b.len() {
        return Err(GaError::LengthMismatch(a.len(), b.len()));
    }
    if !rng.random_bool(p) {
        return Ok(a.to_vec());
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
        .collect())
}

/// Adds `N(0, sigma)` noise to each gene with probability `per_gene_p`, then
/// clamps every gene to `bounds`.
pub fn mutate<R: Rng>(
    genome: &mut [f64],
    rng: &mut R,
    per_gene_p: f64,
    sigma: f64,
    bounds: (f64, f64),
) -> usize {
    let noise = Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative");
    let mut mutated = 0;
    for g in genome.iter_mut() {
        if rng.random_bool(per_gene_p) {
            *g += noise.sample(rng);
            mutated += 1;
        }
        *g = g.clamp(bounds.0, bounds.1);
    }
    mutated
}

/// Picks `pop_size` survivors from an already ranked and crowded set:
/// whole fronts by ascending rank, then the last front that does not fit
/// by descending crowding distance. Ties keep input order, so earlier
/// (parent) entries win.
pub fn survival_selection(combined: &[Individual], pop_size: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..combined.len()).collect();
    order.sort_by(|&a, &b| {
        combined[a]
            .rank
            .cmp(&combined[b].rank)
            .then(combined[b].crowding.total_cmp(&combined[a].crowding))
    });
    order.truncate(pop_size);
    order
}
