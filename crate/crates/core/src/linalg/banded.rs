use alloc::vec;
use alloc::vec::Vec;

use super::Mat;

/// Square banded matrix with half-bandwidth `bw`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Banded { n, bw, data: vec![0.0; n * (2 * bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize;
        (off.unsigned_abs() <= self.bw && i < self.n && j < self.n)
            .then(|| i * (2 * self.bw + 1) + (off + self.bw as isize) as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds to entry (i, j); panics if it lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    /// Column range of the band in row i.
    pub fn row_span(&self, i: usize) -> core::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row_span(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Banded {
        let mut out = Banded::zeros(self.n, self.bw);
        for i in 0..self.n {
            for j in self.row_span(i) {
                out.set(i, j, f(i, j, self.get(i, j)));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)))
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_access_and_product() {
        let mut b = Banded::zeros(4, 1);
        for i in 0..4 {
            b.set(i, i, 2.0);
            if i + 1 < 4 {
                b.set(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        assert_eq!(b.get(0, 3), 0.0);
        assert_eq!(b.apply(&[1.0, 1.0, 1.0, 1.0]), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.to_dense()[(2, 1)], -1.0);
    }
}
