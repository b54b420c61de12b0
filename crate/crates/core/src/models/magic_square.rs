use super::{Model, ModelError};
use crate::domain::VarId;
use crate::propagation::{AllDifferent, LessEq, LinearEq};

/// `n (n^2 + 1) / 2`.
pub fn magic_constant(n: usize) -> i64 {
    let n = n as i64;
    n * (n * n + 1) / 2
}

/// Magic square of side `n` over `1..=n^2`, cells in row-major order.
///
/// Rows, columns and both diagonals sum to the magic constant, all cells are
/// pairwise distinct (forward-checking alldifferent), each diagonal is
/// strictly increasing from its top cell downwards, and the top-left corner
/// is below the top-right and bottom-left corners.
pub fn build_magic_square(n: usize) -> Result<Model, ModelError> {
    if n < 3 {
        return Err(ModelError::SquareTooSmall(n));
    }
    build(n, true)
}

pub(crate) fn build(n: usize, with_ordering: bool) -> Result<Model, ModelError> {
    let mut m = Model::new(format!("msq-{n}"));
    let top = (n * n) as i64;
    let cells: Vec<VarId> = (0..n * n).map(|_| m.add_var(1, top)).collect();
    let at = |r: usize, c: usize| cells[r * n + c];
    let total = magic_constant(n);
    let sum = |vars: Vec<VarId>| LinearEq::new(vars.into_iter().map(|x| (1, x)).collect(), total);

    for r in 0..n {
        m.post(sum((0..n).map(|c| at(r, c)).collect()))?;
    }
    for c in 0..n {
        m.post(sum((0..n).map(|r| at(r, c)).collect()))?;
    }
    m.post(sum((0..n).map(|i| at(i, i)).collect()))?;
    m.post(sum((0..n).map(|i| at(i, n - 1 - i)).collect()))?;
    m.post(AllDifferent::new(cells.clone()))?;
    if with_ordering {
        for i in 0..n - 1 {
            m.post(LessEq::less_than(at(i, i), at(i + 1, i + 1)))?;
            m.post(LessEq::less_than(at(i, n - 1 - i), at(i + 1, n - 2 - i)))?;
        }
        m.post(LessEq::less_than(at(0, 0), at(n - 1, 0)))?;
        m.post(LessEq::less_than(at(0, 0), at(0, n - 1)))?;
    }
    Ok(m)
}

/// Direct check that `cells` (row-major) is a magic square of side `n`.
pub fn check_magic_square(n: usize, cells: &[i64]) -> bool {
    if cells.len() != n * n {
        return false;
    }
    let total = magic_constant(n);
    let mut seen = vec![false; n * n + 1];
    for &v in cells {
        if v < 1 || v as usize > n * n || std::mem::replace(&mut seen[v as usize], true) {
            return false;
        }
    }
    let at = |r: usize, c: usize| cells[r * n + c];
    (0..n).all(|r| (0..n).map(|c| at(r, c)).sum::<i64>() == total)
        && (0..n).all(|c| (0..n).map(|r| at(r, c)).sum::<i64>() == total)
        && (0..n).map(|i| at(i, i)).sum::<i64>() == total
        && (0..n).map(|i| at(i, n - 1 - i)).sum::<i64>() == total
}
