//! Code-level transformations: register-wise Fourier dualization, pasting
//! (encode with one code, re-encode the result with another), and the
//! classical-to-quantum pipeline built from the two.

use crate::code::{CodeSpec, Recipe};
use crate::error::{Error, Result};
use crate::state::RegisterState;

/// Applies the forward DFT `|j> -> sum_p w^(jp)/sqrt(N) |p>` to every register of every encoded ket.
pub fn dualize(code: &CodeSpec) -> Result<CodeSpec> {
    let kets = code
        .kets()
        .iter()
        .map(|k| (1..=k.width()).try_fold(k.clone(), |s, pos| s.dft_register(pos, false)))
        .collect::<Result<Vec<RegisterState>>>()?;
    Ok(code.with_kets(
        Recipe::dual(code.recipe().clone()),
        format!("{}-dual", code.label()),
        kets,
    ))
}

/// Encodes with `first`, then feeds every output basis ket to `second` as its
/// logical stream in ascending register order.
///
/// `second` is re-instantiated at the logical length that `first`'s output fills.
pub fn paste(first: &CodeSpec, second: &CodeSpec) -> Result<CodeSpec> {
    if first.levels() != second.levels() {
        return Err(Error::AlphabetMismatch {
            first: first.levels(),
            second: second.levels(),
        });
    }
    CodeSpec::build(
        Recipe::paste(first.recipe().clone(), second.recipe().clone()),
        first.levels(),
        first.logical_len(),
    )
}

/// `paste(dualize(c), c)` for a classical code `c`: rate `r` becomes `r^2`.
pub fn theorem2_pipeline(classical: &CodeSpec) -> Result<CodeSpec> {
    if !classical.is_classical() {
        return Err(Error::NotClassical(classical.label().to_string()));
    }
    paste(&dualize(classical)?, classical)
}
