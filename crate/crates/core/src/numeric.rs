//! Small numeric helpers shared across modules.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `exp(2πi·num/den)` with exact values at multiples of a quarter turn.
pub fn root_of_unity(num: i64, den: i64) -> Complex64 {
    assert!(den != 0, "root_of_unity with zero denominator");
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let r = num.rem_euclid(den);
    if (4 * r) % den == 0 {
        return match 4 * r / den {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / den as f64)
}

/// `exp(2πi·θ)` for a real turn count, exact when `θ` is a multiple of a quarter.
pub fn cis_turns(theta: f64) -> Complex64 {
    let r = theta - theta.floor();
    let q = 4.0 * r;
    if q.fract() == 0.0 {
        return match q as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * r)
}

/// `p^(half_power / 2)`.
pub fn sqrt_power(p: usize, half_power: i32) -> f64 {
    let p = p as f64;
    if half_power % 2 == 0 {
        p.powi(half_power / 2)
    } else {
        p.sqrt().powi(half_power)
    }
}

/// Neumaier-compensated summation of complex terms.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(root_of_unity(1, 2), Complex64::new(-1.0, 0.0));
        assert_eq!(root_of_unity(3, 4), Complex64::new(0.0, -1.0));
        assert_eq!(root_of_unity(-1, 4), Complex64::new(0.0, -1.0));
        assert_eq!(root_of_unity(6, 3), Complex64::new(1.0, 0.0));
        assert_eq!(cis_turns(1.5), Complex64::new(-1.0, 0.0));
        assert_eq!(cis_turns(-0.25), Complex64::new(0.0, -1.0));
        assert!((cis_turns(0.1) - Complex64::from_polar(1.0, 0.2 * PI)).norm() < 1e-15);
        let w = root_of_unity(1, 3);
        assert!((w - Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn sqrt_powers() {
        assert_eq!(sqrt_power(2, 2), 2.0);
        assert_eq!(sqrt_power(2, -2), 0.5);
        assert!((sqrt_power(2, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert!((sqrt_power(3, -3) - 3f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1e16, 0.0));
        for _ in 0..10 {
            s.add(Complex64::new(1.0, 0.0));
        }
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 10.0);
    }
}
