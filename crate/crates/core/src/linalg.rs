use std::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Square complex matrix, row-major.
#[derive(Debug, Clone)]
pub(crate) struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Determinant by LU factorization with partial pivoting. A zero pivot
/// column yields an exact zero.
pub(crate) fn det_lu(mut m: CMatrix) -> Complex64 {
    let n = m.n;
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm()))
            .expect("non-empty range");
        if m[(pivot, k)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            for j in 0..n {
                m.data.swap(k * n + j, pivot * n + j);
            }
            det = -det;
        }
        let p = m[(k, k)];
        det *= p;
        for i in k + 1..n {
            let factor = m[(i, k)] / p;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = m[(k, j)];
                m[(i, j)] -= factor * v;
            }
        }
    }
    det
}
