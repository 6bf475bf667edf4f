//! Floating-point abstraction shared by every numeric module.
//!
//! The simulator, objective and learning stack are written against [`Scalar`]
//! so the same code runs in `f32` or `f64`. Dense products in the network go
//! through [`Scalar::gemm`], which dispatches to the matching packed kernel.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Row/column strides of a dense matrix stored in a flat slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strides {
    pub row: isize,
    pub col: isize,
}

impl Strides {
    /// Row-major layout for a matrix with `cols` columns.
    pub const fn row_major(cols: usize) -> Self {
        Strides {
            row: cols as isize,
            col: 1,
        }
    }

    /// The transpose of a row-major matrix with `cols` columns.
    pub const fn transposed(cols: usize) -> Self {
        Strides {
            row: 1,
            col: cols as isize,
        }
    }
}

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// `c ← alpha·a·b + beta·c` with `a: m×k`, `b: k×n`, `c: m×n`.
    ///
    /// Panics if a slice is too short for the requested shape and strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        sa: Strides,
        b: &[Self],
        sb: Strides,
        beta: Self,
        c: &mut [Self],
        sc: Strides,
    );

    /// Lossless-enough conversion from `f64` for configuration constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }

    /// Widening conversion used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn span(rows: usize, cols: usize, s: Strides) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    (rows - 1) * s.row.unsigned_abs() + (cols - 1) * s.col.unsigned_abs() + 1
}

fn check_shapes<T>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    sa: Strides,
    b: &[T],
    sb: Strides,
    c: &[T],
    sc: Strides,
) {
    assert!(sa.row >= 0 && sa.col >= 0 && sb.row >= 0 && sb.col >= 0 && sc.row >= 0 && sc.col >= 0);
    assert!(a.len() >= span(m, k, sa), "gemm: lhs too short");
    assert!(b.len() >= span(k, n, sb), "gemm: rhs too short");
    assert!(c.len() >= span(m, n, sc), "gemm: output too short");
}

macro_rules! impl_scalar {
    ($t:ty, $kernel:path) => {
        impl Scalar for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                sa: Strides,
                b: &[Self],
                sb: Strides,
                beta: Self,
                c: &mut [Self],
                sc: Strides,
            ) {
                check_shapes(m, k, n, a, sa, b, sb, c, sc);
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: all three slices were checked above to cover every
                // element addressed by the shape and (non-negative) strides.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        sa.row,
                        sa.col,
                        b.as_ptr(),
                        sb.row,
                        sb.col,
                        beta,
                        c.as_mut_ptr(),
                        sc.row,
                        sc.col,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);
