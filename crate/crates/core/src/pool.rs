use crate::error::{DcfError, Result};
use crate::matops::Matrix;
use crate::scalar::Real;

/// Averages consecutive `row_block x col_block` tiles of `m`.
///
/// Groups are formed from consecutive indices along each axis. Flatten the result
/// row-major to get the feature vector of one observation.
pub fn block_average<T: Real>(m: &Matrix<T>, row_block: usize, col_block: usize) -> Result<Matrix<T>> {
    if row_block == 0 || col_block == 0 {
        return Err(DcfError::InvalidParameter("block sizes must be positive".into()));
    }
    if !m.rows().is_multiple_of(row_block) {
        return Err(DcfError::NotDivisible {
            len: m.rows(),
            block: row_block,
        });
    }
    if !m.cols().is_multiple_of(col_block) {
        return Err(DcfError::NotDivisible {
            len: m.cols(),
            block: col_block,
        });
    }
    let area = T::of_usize(row_block * col_block);
    Ok(Matrix::from_fn(m.rows() / row_block, m.cols() / col_block, |bi, bj| {
        let mut acc = T::zero();
        for i in bi * row_block..(bi + 1) * row_block {
            for &v in &m.row(i)[bj * col_block..(bj + 1) * col_block] {
                acc += v;
            }
        }
        acc / area
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_collapses() {
        let m = Matrix::from_fn(4, 4, |_, _| 1.0f64);
        let out = block_average(&m, 4, 4).unwrap();
        assert_eq!((out.rows(), out.cols()), (1, 1));
        assert_eq!(out.get(0, 0), 1.0);
    }

    #[test]
    fn column_means() {
        let m = Matrix::from_fn(4, 2, |i, j| (i + 1 + 4 * j) as f64);
        let out = block_average(&m, 4, 1).unwrap();
        assert_eq!(out.as_slice(), &[2.5, 6.5]);
    }

    #[test]
    fn eeg_shape() {
        let m = Matrix::from_fn(256, 64, |i, j| (i * 64 + j) as f64);
        let out = block_average(&m, 4, 4).unwrap();
        assert_eq!((out.rows(), out.cols()), (64, 16));
        assert_eq!(out.into_vec().len(), 1024);
    }

    #[test]
    fn rejects_ragged_blocks() {
        let m = Matrix::from_fn(5, 4, |_, _| 0.0f64);
        assert!(matches!(
            block_average(&m, 4, 4),
            Err(DcfError::NotDivisible { len: 5, block: 4 })
        ));
        assert!(block_average(&m, 0, 1).is_err());
    }
}
