//! Log-gamma based evidence terms.

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log evidence of counts under a uniform Dirichlet prior over `dim` categories:
/// `ln B(1 + n) - ln B(1)`.
///
/// Categories absent from `counts` are taken to have count zero; they add
/// nothing beyond their share of `dim`. An empty category set contributes 0.
pub fn log_dirichlet_multinomial<I>(counts: I, dim: usize) -> f64
where
    I: IntoIterator<Item = u64>,
{
    if dim == 0 {
        return 0.0;
    }
    let mut total = 0u64;
    let mut acc = 0.0;
    for n in counts {
        if n > 0 {
            acc += ln_gamma(n as f64 + 1.0);
            total += n;
        }
    }
    if total == 0 {
        return 0.0;
    }
    acc + ln_gamma(dim as f64) - ln_gamma((dim as u64 + total) as f64)
}
