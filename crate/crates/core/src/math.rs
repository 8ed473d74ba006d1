//! Thin wrappers so the numerics read like `std` code. With the `std`
//! feature the platform math library is used, otherwise `libm`.

macro_rules! unary {
    ($name:ident, $libm:ident, $std:ident) => {
        #[inline]
        pub(crate) fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                f64::$std(x)
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

unary!(exp, exp, exp);
unary!(ln, log, ln);
unary!(sqrt, sqrt, sqrt);
unary!(sin, sin, sin);
unary!(cos, cos, cos);
unary!(asin, asin, asin);
unary!(ceil, ceil, ceil);
unary!(floor, floor, floor);
unary!(round, round, round);

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}
