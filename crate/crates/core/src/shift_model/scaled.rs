/// A complex float with a separate binary exponent, `(re + i·im)·2^exp`.
///
/// Coordinates like `ω^(-n)` for `n ~ 10^4` underflow an `f64`; the numeric
/// oracle carries them in this form instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    re: f64,
    im: f64,
    exp: i64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex { re: 0.0, im: 0.0, exp: 0 };
    pub const ONE: ScaledComplex = ScaledComplex { re: 0.5, im: 0.0, exp: 1 };

    pub fn new(re: f64, im: f64) -> Self {
        ScaledComplex { re, im, exp: 0 }.normalized()
    }

    fn normalized(self) -> Self {
        let m = self.re.abs().max(self.im.abs());
        if m == 0.0 || !m.is_finite() {
            return ScaledComplex { exp: 0, ..self };
        }
        let e = m.log2().floor() as i64 + 1;
        let k = 2f64.powi(-e as i32);
        ScaledComplex { re: self.re * k, im: self.im * k, exp: self.exp + e }
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn mul(self, o: ScaledComplex) -> ScaledComplex {
        ScaledComplex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
            exp: self.exp + o.exp,
        }
        .normalized()
    }

    pub fn add(self, o: ScaledComplex) -> ScaledComplex {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.exp >= o.exp { (self, o) } else { (o, self) };
        let shift = big.exp - small.exp;
        if shift > 1100 {
            return big;
        }
        let k = 2f64.powi(-(shift as i32));
        ScaledComplex { re: big.re + small.re * k, im: big.im + small.im * k, exp: big.exp }.normalized()
    }

    pub fn inv(self) -> ScaledComplex {
        let n = self.re * self.re + self.im * self.im;
        ScaledComplex { re: self.re / n, im: -self.im / n, exp: -self.exp }.normalized()
    }

    pub fn powu(self, mut n: u64) -> ScaledComplex {
        let mut base = self;
        let mut acc = ScaledComplex::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            n >>= 1;
            base = base.mul(base);
        }
        acc
    }

    /// Plain `(re, im)`; under- or overflows when the exponent is extreme.
    pub fn to_f64_pair(self) -> (f64, f64) {
        let scale = |x: f64| {
            // split the exponent to keep intermediate factors finite
            let mut x = x;
            let mut e = self.exp;
            while e != 0 {
                let step = e.clamp(-1000, 1000);
                x *= 2f64.powi(step as i32);
                e -= step;
            }
            x
        };
        (scale(self.re), scale(self.im))
    }
}
