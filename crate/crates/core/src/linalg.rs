//! Gaussian elimination over a finite field.

use crate::gf::{FieldCtx, FieldElement};

pub type Vector = Vec<FieldElement>;

/// Reduces `rows` to reduced row-echelon form in place, drops zero rows and
/// returns the pivot column of each remaining row.
pub fn rref(rows: &mut Vec<Vector>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][c].inverse().expect("pivot is nonzero");
        for x in rows[r].iter_mut() {
            *x = *x * inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = *x - f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[Vector]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : A x = 0}` for an `_ × ncols` matrix.
pub fn nullspace(ctx: FieldCtx, a: &[Vector], ncols: usize) -> Vec<Vector> {
    let mut m = a.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![ctx.zero(); ncols];
            v[f] = ctx.one();
            for (row, &pc) in m.iter().zip(&pivots) {
                v[pc] = -row[f];
            }
            v
        })
        .collect()
}

/// Solves `A x = b`. Returns a particular solution and a basis of the
/// homogeneous solutions, or `None` if the system is inconsistent.
pub fn solve_affine(
    ctx: FieldCtx,
    a: &[Vector],
    b: &[FieldElement],
    ncols: usize,
) -> Option<(Vector, Vec<Vector>)> {
    debug_assert_eq!(a.len(), b.len());
    let mut aug: Vec<Vector> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&ncols) {
        return None;
    }
    let mut x = vec![ctx.zero(); ncols];
    for (row, &pc) in aug.iter().zip(&pivots) {
        x[pc] = row[ncols];
    }
    let homogeneous: Vec<Vector> = aug.iter().map(|r| r[..ncols].to_vec()).collect();
    Some((x, nullspace(ctx, &homogeneous, ncols)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(ctx: FieldCtx, rows: &[&[i64]]) -> Vec<Vector> {
        rows.iter().map(|r| r.iter().map(|&v| ctx.elem(v)).collect()).collect()
    }

    fn apply(a: &[Vector], x: &[FieldElement]) -> Vector {
        a.iter()
            .map(|row| row.iter().zip(x).fold(x[0].ctx().zero(), |s, (&u, &v)| s + u * v))
            .collect()
    }

    #[test]
    fn rank_and_rref() {
        let f5 = FieldCtx::prime(5).unwrap();
        let m = mat(f5, &[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(rank(&m), 2);
        let mut r = m.clone();
        assert_eq!(rref(&mut r), vec![0, 1]);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let f7 = FieldCtx::prime(7).unwrap();
        let m = mat(f7, &[&[1, 2, 3, 4], &[0, 1, 5, 6]]);
        let ns = nullspace(f7, &m, 4);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(apply(&m, v).iter().all(|e| e.is_zero()));
        }
        assert_eq!(rank(&ns), 2);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let f5 = FieldCtx::prime(5).unwrap();
        // 2x = 1 over F_5 → x = 3
        let (x, hom) = solve_affine(f5, &mat(f5, &[&[2, 0]]), &[f5.elem(1)], 2).unwrap();
        assert_eq!(x[0], f5.elem(3));
        assert_eq!(hom.len(), 1);
        let a = mat(f5, &[&[1, 1], &[1, 1]]);
        assert!(solve_affine(f5, &a, &[f5.elem(1), f5.elem(2)], 2).is_none());
    }

    #[test]
    fn works_over_extension() {
        let f9 = FieldCtx::quadratic(3).unwrap();
        let a = f9.elem2(0, 1).unwrap();
        let m = vec![vec![a, f9.one()], vec![f9.one(), -a]];
        // second row = −α · first row
        assert_eq!(rank(&m), 1);
    }
}
