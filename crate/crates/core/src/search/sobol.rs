//! Two-dimensional Sobol sequence.
//!
//! The first coordinate uses the van der Corput direction numbers, the
//! second the primitive polynomial `x + 1` with initial number `m1 = 1`.
//! Points are generated in Gray-code order.

use crate::error::{Error, Result};

use super::DesignGrid;

const BITS: usize = 32;

fn directions() -> [[u32; BITS]; 2] {
    let mut v = [[0u32; BITS]; 2];
    for k in 0..BITS {
        v[0][k] = 1 << (BITS - 1 - k);
    }
    // degree-1 recurrence: v_k = v_{k-1} ^ (v_{k-1} >> 1)
    v[1][0] = 1 << (BITS - 1);
    for k in 1..BITS {
        v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
    }
    v
}

/// The first `n` points of the sequence in the unit square, skipping the
/// origin.
pub fn sobol_unit(n: usize) -> Vec<(f64, f64)> {
    let v = directions();
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut x = [0u32; 2];
    let mut out = Vec::with_capacity(n);
    for i in 0..n as u64 {
        // the bit that flips between Gray codes of i and i + 1
        let c = (!i).trailing_zeros() as usize;
        x[0] ^= v[0][c];
        x[1] ^= v[1][c];
        out.push((x[0] as f64 * scale, x[1] as f64 * scale));
    }
    out
}

/// Grid indices of the first `n` distinct lattice points hit by the
/// sequence after snapping.
pub fn sobol_points(n: usize, grid: &DesignGrid) -> Result<Vec<usize>> {
    if n == 0 || n > grid.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot place {n} Sobol points on a grid of {}",
            grid.len()
        )));
    }
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::with_capacity(n);
    let mut drawn = n;
    while out.len() < n {
        out.clear();
        seen.iter_mut().for_each(|s| *s = false);
        for (u, w) in sobol_unit(drawn) {
            let idx = grid.snap_unit(u, w);
            if !seen[idx] {
                seen[idx] = true;
                out.push(idx);
                if out.len() == n {
                    break;
                }
            }
        }
        drawn *= 2;
    }
    Ok(out)
}
