use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::instance::{Record, RecordKind};

/// Cell centers of a `rows x cols` grid on a planar km plane, row-major.
pub fn generate_grid(rows: usize, cols: usize, cell_km: f64) -> Result<Vec<Record>> {
    if rows == 0 || cols == 0 {
        return Err(invalid("grid needs at least one row and one column"));
    }
    if !(cell_km > 0.0 && cell_km.is_finite()) {
        return Err(invalid("cell size must be positive"));
    }
    Ok((0..rows * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let coords = vec![(r as f64 + 0.5) * cell_km, (c as f64 + 0.5) * cell_km];
            Record::new(i, coords, RecordKind::GeoGrid)
        })
        .collect())
}

/// `n` standard-normal vectors of dimension `dim`.
pub fn generate_synthetic(n: usize, dim: usize, seed: u64) -> Result<Vec<Record>> {
    if n == 0 {
        return Err(invalid("synthetic dataset needs n >= 1"));
    }
    if dim == 0 {
        return Err(invalid("synthetic dataset needs dim >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let coords = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            Record::new(i, coords, RecordKind::Synthetic)
        })
        .collect())
}

/// Seeded uniform subsample without replacement, original order kept, ids
/// renumbered densely.
pub fn subsample(records: &[Record], size: usize, seed: u64) -> Result<Vec<Record>> {
    if size == 0 || size > records.len() {
        return Err(invalid(format!("cannot subsample {size} of {} records", records.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, records.len(), size).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(new, old)| Record { id: new, ..records[old].clone() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::euclidean;

    #[test]
    fn grid_shapes() {
        assert_eq!(generate_grid(20, 25, 1.0).unwrap().len(), 500);
        let g = generate_grid(1, 2, 1.0).unwrap();
        assert_eq!(euclidean(&g[0].coords, &g[1].coords), 1.0);
        let g = generate_grid(2, 2, 1.0).unwrap();
        assert!((euclidean(&g[0].coords, &g[3].coords) - 2f64.sqrt()).abs() < 1e-15);
        assert!(generate_grid(0, 3, 1.0).is_err());
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = generate_synthetic(50, 3, 7).unwrap();
        let b = generate_synthetic(50, 3, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(50, 3, 8).unwrap());
        assert!(generate_synthetic(0, 3, 7).is_err());
    }

    #[test]
    fn synthetic_mean_within_standard_error() {
        let n = 2000;
        let recs = generate_synthetic(n, 3, 11).unwrap();
        for d in 0..3 {
            let mean = recs.iter().map(|r| r.coords[d]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 5.0 / (n as f64).sqrt(), "coordinate {d} mean {mean}");
        }
    }

    #[test]
    fn subsample_is_dense_and_seeded() {
        let recs = generate_synthetic(100, 2, 1).unwrap();
        let s = subsample(&recs, 10, 3).unwrap();
        assert_eq!(s, subsample(&recs, 10, 3).unwrap());
        assert!(s.iter().enumerate().all(|(i, r)| r.id == i));
        assert!(subsample(&recs, 101, 3).is_err());
    }
}
