//! Basin-of-attraction rendering: classifies a pixel grid on a square window
//! of the plane by which attracting cycle the orbit approaches, and emits a
//! binary P6 PPM image.

use super::maps::{chordal, verify_pcf, CriticalPortrait, ExtComplex, RationalMap};
use super::NumericsError;
use num_complex::Complex64;
use serde::Serialize;

/// Fixed palette; basin k uses color k mod len. Unclassified pixels are black.
const PALETTE: [[u8; 3]; 8] = [
    [66, 135, 245],  // blue
    [240, 176, 32],  // amber
    [52, 168, 83],   // green
    [219, 68, 55],   // red
    [142, 68, 173],  // purple
    [26, 188, 156],  // teal
    [255, 121, 198], // pink
    [189, 195, 199], // gray
];

#[derive(Clone, Debug, Serialize)]
pub struct BasinInfo {
    /// One representative point of the attracting cycle.
    pub cycle: Vec<ExtComplex>,
    pub pixels: usize,
    pub color: [u8; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct RenderStats {
    pub px: usize,
    pub total_pixels: usize,
    pub classified: usize,
    pub classified_fraction: f64,
    pub basins: Vec<BasinInfo>,
}

pub struct RenderResult {
    /// Binary P6 PPM image data.
    pub ppm: Vec<u8>,
    pub stats: RenderStats,
}

/// The attracting cycles of a postcritically finite map are exactly the
/// cycles that contain a critical point.
pub fn attracting_cycles(portrait: &CriticalPortrait) -> Vec<Vec<ExtComplex>> {
    portrait
        .cycles()
        .into_iter()
        .filter(|cycle| {
            cycle.iter().any(|p| {
                portrait
                    .orbits
                    .iter()
                    .any(|o| chordal(o.point, *p) < 1e-6)
            })
        })
        .collect()
}

fn classify_pixel(
    m: &RationalMap,
    cycles: &[Vec<ExtComplex>],
    start: Complex64,
    max_iter: usize,
    eps: f64,
) -> Option<usize> {
    let mut z = ExtComplex::Finite(start);
    for _ in 0..max_iter {
        for (k, cycle) in cycles.iter().enumerate() {
            if cycle.iter().any(|p| chordal(z, *p) < eps) {
                return Some(k);
            }
        }
        z = m.eval(z);
    }
    None
}

/// Renders the basins of the attracting cycles of `m` on the square window
/// of side `width` centered at `center`, on a px-by-px grid. Rows are
/// processed in parallel scanline chunks across `threads` worker threads.
#[allow(clippy::too_many_arguments)]
pub fn render_basins(
    m: &RationalMap,
    center: Complex64,
    width: f64,
    px: usize,
    max_iter: usize,
    eps: f64,
    threads: usize,
    seed: u64,
) -> Result<RenderResult, NumericsError> {
    if px == 0 || width <= 0.0 {
        return Err(NumericsError::BadInput(
            "render window must have positive size".into(),
        ));
    }
    let portrait = verify_pcf(m, 64, 1e-8, seed)?;
    let cycles = attracting_cycles(&portrait);
    if cycles.is_empty() {
        return Err(NumericsError::Inconsistent(
            "no attracting cycle found among the critical orbits".into(),
        ));
    }

    let step = width / px as f64;
    let origin = center - Complex64::new(width / 2.0, -width / 2.0);
    let threads = threads.max(1).min(px);
    // None = unclassified, Some(k) = basin index.
    let mut grid: Vec<Option<usize>> = vec![None; px * px];
    std::thread::scope(|scope| {
        let rows_per = px.div_ceil(threads);
        for (chunk_idx, chunk) in grid.chunks_mut(rows_per * px).enumerate() {
            let cycles = &cycles;
            scope.spawn(move || {
                let row0 = chunk_idx * rows_per;
                for (local, cell) in chunk.iter_mut().enumerate() {
                    let row = row0 + local / px;
                    let col = local % px;
                    let z = origin
                        + Complex64::new(
                            (col as f64 + 0.5) * step,
                            -((row as f64 + 0.5) * step),
                        );
                    *cell = classify_pixel(m, cycles, z, max_iter, eps);
                }
            });
        }
    });

    let mut counts = vec![0usize; cycles.len()];
    let mut ppm = format!("P6\n{px} {px}\n255\n").into_bytes();
    for cell in &grid {
        match cell {
            Some(k) => {
                counts[*k] += 1;
                ppm.extend_from_slice(&PALETTE[k % PALETTE.len()]);
            }
            None => ppm.extend_from_slice(&[0, 0, 0]),
        }
    }
    let classified: usize = counts.iter().sum();
    let total = px * px;
    let basins = cycles
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(k, (cycle, &pixels))| BasinInfo {
            cycle: cycle.clone(),
            pixels,
            color: PALETTE[k % PALETTE.len()],
        })
        .collect();
    Ok(RenderResult {
        ppm,
        stats: RenderStats {
            px,
            total_pixels: total,
            classified,
            classified_fraction: classified as f64 / total as f64,
            basins,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::families;
    use crate::numerics::poly::Poly;

    #[test]
    fn z_squared_basins() {
        // z^2 has superattracting fixed points 0 and infinity; every pixel
        // off the unit circle classifies.
        let m = RationalMap::new(Poly::from_real(&[0.0, 0.0, 1.0]), Poly::one());
        let r = render_basins(&m, Complex64::new(0.0, 0.0), 4.0, 64, 200, 1e-6, 2, 9).unwrap();
        assert_eq!(r.stats.basins.len(), 2);
        assert!(r.stats.classified_fraction > 0.99);
        assert!(r.stats.basins.iter().all(|b| b.pixels > 0));
        // Valid P6 header and payload size.
        assert!(r.ppm.starts_with(b"P6\n64 64\n255\n"));
        let header = b"P6\n64 64\n255\n".len();
        assert_eq!(r.ppm.len() - header, 64 * 64 * 3);
    }

    #[test]
    fn model_map_has_two_visible_basins() {
        let m = families::builtin("ex2.R").unwrap();
        let r = render_basins(&m, Complex64::new(0.0, 0.0), 4.0, 48, 2000, 1e-6, 2, 9).unwrap();
        // Attracting fixed points 0 and 1, both basins populated.
        assert_eq!(r.stats.basins.len(), 2);
        assert!(r.stats.basins.iter().all(|b| b.pixels > 0));
        assert!(r.stats.classified_fraction > 0.9);
    }
}
