use num_complex::Complex64;

/// Values that can be accumulated with Neumaier compensation.
pub trait Summable: Copy {
    fn zero() -> Self;
    fn two_sum(sum: Self, x: Self, comp: Self) -> (Self, Self);
    fn plus(self, other: Self) -> Self;
}

impl Summable for f64 {
    fn zero() -> Self {
        0.0
    }

    fn two_sum(sum: f64, x: f64, comp: f64) -> (f64, f64) {
        let t = sum + x;
        let c = if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        (t, comp + c)
    }

    fn plus(self, other: f64) -> f64 {
        self + other
    }
}

impl Summable for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn two_sum(sum: Self, x: Self, comp: Self) -> (Self, Self) {
        let (re, cre) = f64::two_sum(sum.re, x.re, comp.re);
        let (im, cim) = f64::two_sum(sum.im, x.im, comp.im);
        (Complex64::new(re, im), Complex64::new(cre, cim))
    }

    fn plus(self, other: Self) -> Self {
        self + other
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T: Summable> {
    sum: T,
    comp: T,
}

impl<T: Summable> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }
}

impl<T: Summable> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: T) {
        let (s, c) = T::two_sum(self.sum, x, self.comp);
        self.sum = s;
        self.comp = c;
    }

    pub fn value(&self) -> T {
        self.sum.plus(self.comp)
    }
}

impl<T: Summable> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = xs.iter().sum();
        let comp: CompensatedSum<f64> = xs.iter().copied().collect();
        assert_eq!(naive, 0.0);
        assert_eq!(comp.value(), 2.0);
    }

    #[test]
    fn complex_parts_independent() {
        let xs = [
            Complex64::new(1.0, 1e100),
            Complex64::new(1e100, 1.0),
            Complex64::new(1.0, -1e100),
            Complex64::new(-1e100, 1.0),
        ];
        let comp: CompensatedSum<Complex64> = xs.iter().copied().collect();
        assert_eq!(comp.value(), Complex64::new(2.0, 2.0));
    }
}
