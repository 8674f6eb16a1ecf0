//! Row-major f64 image plane used for probability fields and threshold maps.

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn filled(w: usize, h: usize, v: f64) -> Plane {
        Plane {
            w,
            h,
            data: vec![v; w * h],
        }
    }

    pub fn from_vec(w: usize, h: usize, data: Vec<f64>) -> Plane {
        assert_eq!(data.len(), w * h, "plane data must be w*h");
        Plane { w, h, data }
    }

    #[inline]
    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.w + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!((self.w, self.h), (other.w, other.h));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
